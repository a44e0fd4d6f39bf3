#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facelight/brightness.hpp"
#include "facelight/config.hpp"
#include "facelight/embeddings.hpp"
#include "facelight/manifest.hpp"
#include "facelight/pair_engine.hpp"
#include "facelight/pair_stats.hpp"
#include "facelight/score_table.hpp"

namespace facelight {

/// Everything run_audit consumes. Profiles may be precomputed (cached CSV or
/// synthetic); otherwise they are derived from the images and label maps
/// named in the manifest.
struct AuditInputs {
  std::vector<ImageRecord> records;
  std::vector<std::optional<BrightnessProfile>> profiles;  // aligned to records
  std::optional<EmbeddingStore> embeddings;
  std::optional<ScoreTable> scores;
  std::vector<std::pair<std::string, std::string>> excluded;  // id, reason
  std::vector<std::string> warnings;
  std::map<std::string, std::string> input_digests;           // path -> fnv1a hex
};

/// Computes brightness profiles for every record from its image and label
/// map. Zero-pixel masks exclude the record (id + reason recorded); missing
/// files are hard errors.
void compute_profiles(AuditInputs& inputs, const Config& config);

/// Fills AuditInputs::profiles from a cached profile CSV; every usable
/// record must be covered or it is excluded with a reason.
void load_profiles_csv(AuditInputs& inputs, const std::filesystem::path& csv);

struct FmrCell {
  std::uint64_t pair_count = 0;
  std::uint64_t above_threshold = 0;
  std::optional<double> fmr;
  bool low_support = false;
};

struct BimCell {
  std::uint64_t image_count = 0;
  std::optional<double> avg_bim;
  std::uint64_t impostor_pairs = 0;
  std::uint64_t genuine_pairs = 0;
  std::optional<double> fmr;
  std::optional<double> dprime;
  bool low_support = false;
};

struct SlidingCell {
  BrightnessWindow window;
  std::uint64_t image_count = 0;
  std::optional<double> avg_bim;
  std::uint64_t genuine_pairs = 0;
  std::uint64_t impostor_pairs = 0;
  std::optional<double> dprime;
  bool low_support = false;  // below the genuine-pair floor, excluded from argmax
};

struct TargetRangeResult {
  // group -> window label
  std::map<std::string, std::string> argmax_by_bim;
  std::map<std::string, std::string> argmax_by_dprime;
  // union (hull) of the per-group argmax-by-d' windows
  std::optional<BrightnessWindow> consensus;
  std::map<std::string, double> coverage;  // fraction of each group inside consensus
};

struct AuditReport {
  CategoryScheme scheme;
  std::map<std::string, CategoryScheme> per_group_schemes;  // only when configured
  Threshold threshold;
  std::vector<std::string> groups;  // audited groups, sorted
  std::map<std::string, GroupBrightnessStats> fsb_stats;
  std::map<PairKey, FmrCell> fmr_table;
  std::map<std::pair<std::string, ExposureCategory>, BimCell> bim_table;
  std::map<std::pair<std::string, std::string>, SlidingCell> sliding_table;  // (group, label)
  TargetRangeResult target_range;
  std::map<std::string, SaturationReport> saturation;
  std::map<PairKey, PairStats> genuine_buckets;
  std::map<PairKey, PairStats> impostor_buckets;
  std::uint64_t skipped_pairs = 0;
  std::vector<std::string> skipped_ids;
  std::vector<std::pair<std::string, std::string>> excluded_images;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> config_snapshot;
  std::map<std::string, std::string> input_digests;
};

/// The full pipeline: categorize profiles -> calibrate the threshold on the
/// configured group -> bucket every genuine/impostor pair -> build the FMR,
/// BIM and sliding-bin tables plus the target-range search. Deterministic
/// given inputs and config.
AuditReport run_audit(const AuditInputs& inputs, const Config& config);

/// Sliding-bin search on its own: per (group, window) average BIM over
/// images inside the band and d' over pairs with BOTH images inside.
/// Windows under `min_genuine_window` genuine pairs are flagged and skipped
/// by the argmax.
void target_range_search(const AuditInputs& inputs, const Config& config,
                         const std::vector<BrightnessWindow>& windows,
                         std::map<std::pair<std::string, std::string>, SlidingCell>& table,
                         TargetRangeResult& result);

/// Per-group fraction of images whose FSB lies in [lo, hi).
std::map<std::string, double> coverage_fraction(
    const std::vector<std::optional<BrightnessProfile>>& profiles,
    const std::vector<ImageRecord>& records,
    double lo, double hi);

/// Bucket selection for distribution exports. Empty fields match anything.
struct DistributionSelection {
  std::optional<std::string> group;
  std::optional<ExposureCategory> cat_a, cat_b;
  std::optional<PairKind> kind;
};

/// One CSV per selected (group, category pair, genuine|impostor) bucket:
/// `bin_low,bin_high,count,density`; densities integrate to 1 within 1e-6.
/// Throws ValidationError when an explicit selection matches nothing.
std::vector<std::filesystem::path> export_distributions(
    const AuditReport& report, const std::filesystem::path& dir,
    const std::vector<DistributionSelection>& selections = {});

/// Writes report.json (byte-stable: sorted keys, floats at 6 significant
/// digits), report.txt (aligned tables, dash for undefined cells), the three
/// table CSVs, distributions/ and hist_<group>.csv when histograms exist.
std::vector<std::filesystem::path> write_report(
    const AuditReport& report, const AuditInputs& inputs,
    const std::filesystem::path& out_dir);

/// Sliding-table CSV, window order within each group (shared by the audit
/// report and the standalone target-range command).
void write_sliding_csv(
    const std::map<std::pair<std::string, std::string>, SlidingCell>& table,
    const std::filesystem::path& path);

/// FNV-1a-64 content fingerprint used for input provenance.
std::string file_digest(const std::filesystem::path& path);

}  // namespace facelight
