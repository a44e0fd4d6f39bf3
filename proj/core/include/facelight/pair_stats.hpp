#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facelight/brightness.hpp"

namespace facelight {

/// Bucket address for one (demographic, pair-brightness-category) cell.
/// The category pair is stored in normalized order, so (O, M) and (M, O)
/// address the same bucket.
struct PairKey {
  std::string group;
  ExposureCategory cat_a = ExposureCategory::SU;
  ExposureCategory cat_b = ExposureCategory::SU;

  PairKey() = default;
  PairKey(std::string group_, ExposureCategory c1, ExposureCategory c2)
      : group(std::move(group_)),
        cat_a(c1 <= c2 ? c1 : c2),
        cat_b(c1 <= c2 ? c2 : c1) {}

  auto operator<=>(const PairKey&) const = default;
};

/// Fixed-width score histogram over [lo, hi]. Scores outside the declared
/// range land in the edge bins.
struct ScoreHistogram {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<std::uint64_t> bins;

  ScoreHistogram() = default;
  ScoreHistogram(double lo_, double hi_, std::size_t bin_count)
      : lo(lo_), hi(hi_), bins(bin_count, 0) {}

  std::size_t bin_index(double score) const;
  void add(double score) { ++bins[bin_index(score)]; }
  void merge(const ScoreHistogram& other);
};

/// Mergeable accumulator of score statistics for one bucket. Merging is
/// field-wise addition: associative, commutative, counts exact.
struct PairStats {
  std::uint64_t pair_count = 0;
  std::uint64_t above_threshold_count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  ScoreHistogram score_histogram;

  void add(double score, double threshold) {
    ++pair_count;
    if (score >= threshold) ++above_threshold_count;
    sum += score;
    sum_sq += score * score;
    if (!score_histogram.bins.empty()) score_histogram.add(score);
  }
  void merge(const PairStats& other);

  double mean() const;
  /// Sample (n-1) standard deviation recovered from (count, sum, sum_sq).
  double sample_stddev() const;
};

/// The decision threshold and how it was calibrated.
struct Threshold {
  double value = 0.0;
  std::string calibration_group;
  double target_fmr = 1e-4;
  double achieved_fmr = 0.0;
};

/// Smallest observed score t with (#scores >= t)/n <= target_fmr; the match
/// rule everywhere downstream is score >= t, so achieved_fmr <= target_fmr
/// holds by construction. Throws ValidationError when fewer than
/// ceil(1/target_fmr) scores are given (the minimum is reported) or when no
/// observed score resolves the target.
Threshold calibrate_threshold(std::vector<double> impostor_scores,
                              double target_fmr = 1e-4,
                              std::string calibration_group = {});

/// above_threshold_count / pair_count; empty buckets are undefined and
/// render as a dash in reports.
std::optional<double> fmr(const PairStats& stats);

/// |mean_g - mean_i| / sqrt((var_g + var_i)/2) with sample (n-1) variances.
/// Undefined when either side has fewer than 2 pairs or both deviations are
/// zero.
std::optional<double> d_prime(const PairStats& genuine, const PairStats& impostor);

/// Score-saturation diagnostic for one group: the fraction of impostor
/// scores in the lowest bin and genuine scores in the highest bin.
struct SaturationReport {
  std::uint64_t impostor_count = 0;
  std::uint64_t genuine_count = 0;
  double impostor_low_fraction = 0.0;
  double genuine_high_fraction = 0.0;
  bool flagged = false;
};

/// Pools the per-bucket histograms of each group and flags groups whose
/// extreme-bin mass exceeds `flag_fraction`.
std::map<std::string, SaturationReport> saturation_report(
    const std::map<PairKey, PairStats>& genuine,
    const std::map<PairKey, PairStats>& impostor,
    double flag_fraction = 0.5);

}  // namespace facelight
