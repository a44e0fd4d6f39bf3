#include "facelight/brightness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "facelight/errors.hpp"
#include "csv_util.hpp"

namespace facelight {

double BrightnessHistogram::mean() const {
  if (total == 0) throw ValidationError("brightness histogram is empty");
  std::uint64_t weighted = 0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    weighted += bins[i] * static_cast<std::uint64_t>(i);
  }
  return static_cast<double>(weighted) / static_cast<double>(total);
}

const char* to_string(ExposureCategory c) {
  switch (c) {
    case ExposureCategory::SU: return "SU";
    case ExposureCategory::U: return "U";
    case ExposureCategory::M: return "M";
    case ExposureCategory::O: return "O";
    case ExposureCategory::SO: return "SO";
  }
  throw InternalError("invalid exposure category");
}

std::optional<ExposureCategory> category_from_string(const std::string& s) {
  if (s == "SU") return ExposureCategory::SU;
  if (s == "U") return ExposureCategory::U;
  if (s == "M") return ExposureCategory::M;
  if (s == "O") return ExposureCategory::O;
  if (s == "SO") return ExposureCategory::SO;
  return std::nullopt;
}

BrightnessProfile compute_fsb(const GrayImage& image, const SkinMask& mask,
                              std::string image_id) {
  if (image.width != mask.width || image.height != mask.height) {
    throw ValidationError("fsb: image is " + std::to_string(image.width) + "x" +
                          std::to_string(image.height) + " but mask is " +
                          std::to_string(mask.width) + "x" + std::to_string(mask.height));
  }
  if (mask.pixel_count == 0) throw ValidationError("fsb: empty skin mask");

  BrightnessProfile profile;
  profile.image_id = std::move(image_id);
  const std::size_t n = image.pixels.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.included[i]) profile.histogram.add(image.pixels[i]);
  }
  profile.fsb = profile.histogram.mean();
  profile.bim = compute_bim(profile.histogram);
  return profile;
}

BrightnessProfile profile_from_histogram(std::string image_id,
                                         const BrightnessHistogram& histogram) {
  BrightnessProfile profile;
  profile.image_id = std::move(image_id);
  profile.histogram = histogram;
  profile.fsb = histogram.mean();
  profile.bim = compute_bim(histogram);
  return profile;
}

double compute_bim(const BrightnessHistogram& histogram) {
  const double mean = histogram.mean();  // throws when empty
  double acc = 0.0;
  for (std::size_t i = 0; i < histogram.bins.size(); ++i) {
    if (histogram.bins[i] == 0) continue;
    const double p = static_cast<double>(histogram.bins[i]) /
                     static_cast<double>(histogram.total);
    acc += std::abs(static_cast<double>(i) - mean) * p;
  }
  return acc;
}

CategoryScheme fit_category_scheme(std::vector<double> fsb_values,
                                   const std::array<double, 4>& percentiles) {
  constexpr std::size_t kMinSamples = 20;
  if (fsb_values.size() < kMinSamples) {
    throw ValidationError("category scheme: " + std::to_string(fsb_values.size()) +
                          " samples, need at least " + std::to_string(kMinSamples));
  }
  for (std::size_t i = 1; i < percentiles.size(); ++i) {
    if (percentiles[i] < percentiles[i - 1]) {
      throw ValidationError("category scheme: percentile levels must be nondecreasing");
    }
  }
  std::sort(fsb_values.begin(), fsb_values.end());

  const auto n = fsb_values.size();
  auto nearest_rank = [&](double p) {
    // 1-indexed rank ceil(p/100 * n)
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return fsb_values[rank - 1];
  };

  CategoryScheme scheme;
  scheme.b5 = nearest_rank(percentiles[0]);
  scheme.b15 = nearest_rank(percentiles[1]);
  scheme.b85 = nearest_rank(percentiles[2]);
  scheme.b95 = nearest_rank(percentiles[3]);
  scheme.source_count = n;
  return scheme;
}

ExposureCategory categorize(double fsb, const CategoryScheme& scheme) {
  if (fsb < scheme.b5) return ExposureCategory::SU;
  if (fsb < scheme.b15) return ExposureCategory::U;
  if (fsb < scheme.b85) return ExposureCategory::M;
  if (fsb < scheme.b95) return ExposureCategory::O;
  return ExposureCategory::SO;
}

std::map<std::string, GroupBrightnessStats> group_stats(
    const std::vector<std::optional<BrightnessProfile>>& profiles,
    const std::vector<ImageRecord>& records) {
  if (profiles.size() != records.size()) {
    throw ValidationError("group stats: " + std::to_string(profiles.size()) +
                          " profiles for " + std::to_string(records.size()) + " records");
  }
  struct Acc {
    std::uint64_t n = 0;
    double sum = 0.0, sum_sq = 0.0;
  };
  std::map<std::string, Acc> accs;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!profiles[i]) continue;
    auto& a = accs[records[i].group];
    ++a.n;
    a.sum += profiles[i]->fsb;
    a.sum_sq += profiles[i]->fsb * profiles[i]->fsb;
  }

  std::map<std::string, GroupBrightnessStats> out;
  for (const auto& [group, a] : accs) {
    GroupBrightnessStats s;
    s.count = a.n;
    s.mean = a.sum / static_cast<double>(a.n);
    if (a.n >= 2) {
      const double var =
          std::max(0.0, (a.sum_sq - a.sum * a.sum / static_cast<double>(a.n)) /
                            static_cast<double>(a.n - 1));
      s.stddev = std::sqrt(var);
    } else {
      s.stddev = 0.0;
      s.degenerate = true;
    }
    out.emplace(group, s);
  }
  return out;
}

std::vector<BrightnessWindow> sliding_windows(double lo, double hi, double width,
                                              double step, int label_origin,
                                              const std::string& prefix) {
  if (!(width > 0.0) || !(step > 0.0)) {
    throw ValidationError("sliding windows: width and step must be positive");
  }
  if (lo + width > hi) {
    throw ValidationError("sliding windows: lo + width exceeds hi (" +
                          std::to_string(lo) + " + " + std::to_string(width) + " > " +
                          std::to_string(hi) + ")");
  }
  std::vector<BrightnessWindow> windows;
  // Tolerate accumulated floating-point drift on the last window's edge.
  const double eps = 1e-9 * std::max({1.0, std::abs(hi), std::abs(lo)});
  for (int k = 0;; ++k) {
    const double wlo = lo + k * step;
    const double whi = wlo + width;
    if (whi > hi + eps) break;
    BrightnessWindow w;
    w.lo = wlo;
    w.hi = whi;
    w.label = prefix + std::to_string(label_origin + k);
    windows.push_back(std::move(w));
  }
  return windows;
}

void write_profiles_csv(
    const std::filesystem::path& path,
    const std::vector<ImageRecord>& records,
    const std::vector<std::optional<BrightnessProfile>>& profiles,
    const std::optional<CategoryScheme>& scheme) {
  if (profiles.size() != records.size()) {
    throw ValidationError("profiles csv: profile/record count mismatch");
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("profiles csv: cannot write " + path.string());
  out << "image_id,group,fsb,bim,category\n";
  char buf[64];
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!profiles[i]) continue;
    const auto& p = *profiles[i];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", p.fsb, p.bim);
    out << records[i].image_id << ',' << records[i].group << ',' << buf << ',';
    if (scheme) out << to_string(categorize(p.fsb, *scheme));
    out << '\n';
  }
}

std::vector<ProfileRow> read_profiles_csv(const std::filesystem::path& path) {
  auto in = detail::open_text(path, "profiles csv");
  std::string header;
  if (!std::getline(in, header) ||
      detail::strip(header) != "image_id,group,fsb,bim,category") {
    throw ValidationError("profiles csv: malformed header in " + path.string());
  }
  std::vector<ProfileRow> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::strip(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 5) {
      throw ValidationError("profiles csv: line " + std::to_string(line_no) +
                            " has " + std::to_string(fields.size()) + " fields");
    }
    ProfileRow row;
    row.image_id = detail::strip(fields[0]);
    row.group = detail::strip(fields[1]);
    try {
      row.fsb = std::stod(fields[2]);
      row.bim = std::stod(fields[3]);
    } catch (const std::exception&) {
      throw ValidationError("profiles csv: non-numeric fsb/bim on line " +
                            std::to_string(line_no));
    }
    std::string cat = detail::strip(fields[4]);
    if (!cat.empty()) {
      row.category = category_from_string(cat);
      if (!row.category) {
        throw ValidationError("profiles csv: unknown category '" + cat +
                              "' on line " + std::to_string(line_no));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::filesystem::path> write_group_histograms(
    const std::filesystem::path& dir,
    const std::vector<ImageRecord>& records,
    const std::vector<std::optional<BrightnessProfile>>& profiles) {
  std::map<std::string, std::array<std::uint64_t, 256>> pooled;
  for (std::size_t i = 0; i < records.size() && i < profiles.size(); ++i) {
    if (!profiles[i] || profiles[i]->histogram.total == 0) continue;
    auto& bins = pooled[records[i].group];
    for (std::size_t b = 0; b < 256; ++b) bins[b] += profiles[i]->histogram.bins[b];
  }
  std::vector<std::filesystem::path> written;
  for (const auto& [group, bins] : pooled) {
    auto path = dir / ("hist_" + group + ".csv");
    std::ofstream out(path);
    if (!out) throw ValidationError("histogram export: cannot write " + path.string());
    out << "intensity,count\n";
    for (std::size_t b = 0; b < 256; ++b) out << b << ',' << bins[b] << '\n';
    written.push_back(std::move(path));
  }
  return written;
}

}  // namespace facelight
