#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facelight/image.hpp"
#include "facelight/manifest.hpp"
#include "facelight/skin_region.hpp"

namespace facelight {

/// Counts of skin pixels per 8-bit intensity level.
struct BrightnessHistogram {
  std::array<std::uint64_t, 256> bins{};
  std::uint64_t total = 0;

  void add(std::uint8_t intensity) {
    ++bins[intensity];
    ++total;
  }
  /// Mean intensity, as exact real division of the integer sum.
  double mean() const;
};

/// Per-image brightness measurements over the skin mask.
struct BrightnessProfile {
  std::string image_id;
  double fsb = 0.0;  // mean skin intensity, [0, 255]
  BrightnessHistogram histogram;
  double bim = 0.0;  // mean absolute deviation of skin intensity, [0, 127.5]
};

/// Five exposure bands in increasing brightness order.
enum class ExposureCategory : std::uint8_t { SU = 0, U = 1, M = 2, O = 3, SO = 4 };

constexpr std::size_t kCategoryCount = 5;

const char* to_string(ExposureCategory c);
std::optional<ExposureCategory> category_from_string(const std::string& s);

/// Percentile boundaries that cut FSB values into the five exposure bands.
struct CategoryScheme {
  double b5 = 0.0;
  double b15 = 0.0;
  double b85 = 0.0;
  double b95 = 0.0;
  std::size_t source_count = 0;
};

/// One sliding brightness band, half-open [lo, hi).
struct BrightnessWindow {
  double lo = 0.0;
  double hi = 0.0;
  std::string label;
};

struct GroupBrightnessStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;        // sample (n-1) standard deviation
  bool degenerate = false;    // single-image group, stddev reported as 0
};

/// Face skin brightness: integer intensity sum over included pixels divided
/// by the pixel count, plus the 256-bin histogram and the BIM derived from
/// it. Throws ValidationError on an empty mask or dimension mismatch.
BrightnessProfile compute_fsb(const GrayImage& image, const SkinMask& mask,
                              std::string image_id = {});

/// Rebuilds a profile from an existing histogram (synthetic inputs).
BrightnessProfile profile_from_histogram(std::string image_id,
                                         const BrightnessHistogram& histogram);

/// Mean absolute deviation of intensity weighted by the per-level pixel
/// probability: sum_i |i - mean| * bins[i]/total. Throws on an empty
/// histogram. Result lies in [0, 127.5].
double compute_bim(const BrightnessHistogram& histogram);

/// Fits the category boundaries with nearest-rank percentiles over the
/// pooled sample: boundary(p) = sorted value at 1-indexed rank
/// ceil(p/100 * n). Requires at least 20 samples so the 5% tails are
/// populated.
CategoryScheme fit_category_scheme(std::vector<double> fsb_values,
                                   const std::array<double, 4>& percentiles = {5, 15, 85, 95});

/// Half-open assignment; each boundary belongs to the brighter category:
///   fsb < b5 -> SU, [b5, b15) -> U, [b15, b85) -> M, [b85, b95) -> O,
///   fsb >= b95 -> SO.
ExposureCategory categorize(double fsb, const CategoryScheme& scheme);

/// Per-group (count, mean, sample std) of FSB. Profiles are matched to
/// records by index; `profiles[i]` may be empty for excluded images.
std::map<std::string, GroupBrightnessStats> group_stats(
    const std::vector<std::optional<BrightnessProfile>>& profiles,
    const std::vector<ImageRecord>& records);

/// Windows [lo, lo+width), [lo+step, lo+step+width), ... while the upper
/// edge stays <= hi. Labels are `<prefix><label_origin>`, `<prefix><label_origin+1>`, ...
/// so any published numbering can be reproduced by choosing the origin.
std::vector<BrightnessWindow> sliding_windows(double lo, double hi,
                                              double width = 40.0,
                                              double step = 5.0,
                                              int label_origin = 1,
                                              const std::string& prefix = "M");

/// Window membership rule shared by the sliding-bin search and coverage
/// accounting: lo <= fsb < hi.
inline bool in_window(double fsb, const BrightnessWindow& w) {
  return fsb >= w.lo && fsb < w.hi;
}

// --- profile CSV (`image_id,group,fsb,bim,category`) ---

struct ProfileRow {
  std::string image_id;
  std::string group;
  double fsb = 0.0;
  double bim = 0.0;
  std::optional<ExposureCategory> category;
};

void write_profiles_csv(
    const std::filesystem::path& path,
    const std::vector<ImageRecord>& records,
    const std::vector<std::optional<BrightnessProfile>>& profiles,
    const std::optional<CategoryScheme>& scheme);

std::vector<ProfileRow> read_profiles_csv(const std::filesystem::path& path);

/// Per-group pooled 256-bin histogram CSV (`intensity,count`), one file per
/// group named `hist_<group>.csv` under `dir`.
std::vector<std::filesystem::path> write_group_histograms(
    const std::filesystem::path& dir,
    const std::vector<ImageRecord>& records,
    const std::vector<std::optional<BrightnessProfile>>& profiles);

}  // namespace facelight
