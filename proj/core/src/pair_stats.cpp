#include "facelight/pair_stats.hpp"

#include <algorithm>
#include <cmath>

#include "facelight/errors.hpp"

namespace facelight {

std::size_t ScoreHistogram::bin_index(double score) const {
  const auto n = bins.size();
  if (n == 0) throw InternalError("score histogram has no bins");
  if (score <= lo) return 0;
  if (score >= hi) return n - 1;
  const double t = (score - lo) / (hi - lo);
  auto idx = static_cast<std::size_t>(t * static_cast<double>(n));
  return std::min(idx, n - 1);
}

void ScoreHistogram::merge(const ScoreHistogram& other) {
  if (bins.empty()) {
    *this = other;
    return;
  }
  if (other.bins.empty()) return;
  if (other.bins.size() != bins.size() || other.lo != lo || other.hi != hi) {
    throw InternalError("merging score histograms with different geometry");
  }
  for (std::size_t i = 0; i < bins.size(); ++i) bins[i] += other.bins[i];
}

void PairStats::merge(const PairStats& other) {
  pair_count += other.pair_count;
  above_threshold_count += other.above_threshold_count;
  sum += other.sum;
  sum_sq += other.sum_sq;
  score_histogram.merge(other.score_histogram);
}

double PairStats::mean() const {
  if (pair_count == 0) throw ValidationError("pair stats: empty bucket has no mean");
  return sum / static_cast<double>(pair_count);
}

double PairStats::sample_stddev() const {
  if (pair_count < 2) {
    throw ValidationError("pair stats: need at least 2 pairs for a deviation");
  }
  const double n = static_cast<double>(pair_count);
  const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
  return std::sqrt(var);
}

Threshold calibrate_threshold(std::vector<double> impostor_scores,
                              double target_fmr,
                              std::string calibration_group) {
  if (!(target_fmr > 0.0)) {
    throw ValidationError("threshold: target FMR must be positive");
  }
  const auto n = impostor_scores.size();
  const auto required =
      target_fmr >= 1.0 ? std::size_t{1}
                        : static_cast<std::size_t>(std::ceil(1.0 / target_fmr));
  if (n < required) {
    throw ValidationError("threshold: " + std::to_string(n) +
                          " impostor scores cannot resolve target FMR " +
                          std::to_string(target_fmr) + " (need at least " +
                          std::to_string(required) + ")");
  }

  std::sort(impostor_scores.begin(), impostor_scores.end());

  // Max pairs allowed at-or-above the threshold. The epsilon keeps exact
  // integer boundaries (e.g. 1e-4 * 10^6) from flooring one too low.
  const auto allowed = std::min<std::size_t>(
      n, static_cast<std::size_t>(
             std::floor(target_fmr * static_cast<double>(n) + 1e-9)));
  if (allowed == 0) {
    throw ValidationError("threshold: target FMR " + std::to_string(target_fmr) +
                          " is unresolvable below one score with n = " +
                          std::to_string(n));
  }

  // Candidate: the value at position n - allowed. It qualifies unless ties
  // spill below that position; then the next distinct value up is the answer.
  std::size_t pos = n - allowed;
  double value;
  if (pos == 0) {
    value = impostor_scores.front();
  } else {
    const double candidate = impostor_scores[pos];
    const auto first = static_cast<std::size_t>(
        std::lower_bound(impostor_scores.begin(), impostor_scores.end(), candidate) -
        impostor_scores.begin());
    if (first == pos) {
      value = candidate;
    } else {
      const auto next = std::upper_bound(impostor_scores.begin(),
                                         impostor_scores.end(), candidate);
      if (next == impostor_scores.end()) {
        throw ValidationError(
            "threshold: all remaining scores tie; target FMR " +
            std::to_string(target_fmr) + " is unresolvable");
      }
      value = *next;
    }
  }

  const auto at_or_above = static_cast<std::size_t>(
      impostor_scores.end() -
      std::lower_bound(impostor_scores.begin(), impostor_scores.end(), value));

  Threshold t;
  t.value = value;
  t.calibration_group = std::move(calibration_group);
  t.target_fmr = target_fmr;
  t.achieved_fmr = static_cast<double>(at_or_above) / static_cast<double>(n);
  if (t.achieved_fmr > target_fmr) {
    throw InternalError("threshold calibration violated achieved <= target");
  }
  return t;
}

std::optional<double> fmr(const PairStats& stats) {
  if (stats.pair_count == 0) return std::nullopt;
  return static_cast<double>(stats.above_threshold_count) /
         static_cast<double>(stats.pair_count);
}

std::optional<double> d_prime(const PairStats& genuine, const PairStats& impostor) {
  if (genuine.pair_count < 2 || impostor.pair_count < 2) return std::nullopt;
  const double sg = genuine.sample_stddev();
  const double si = impostor.sample_stddev();
  if (sg == 0.0 && si == 0.0) return std::nullopt;
  return std::abs(genuine.mean() - impostor.mean()) /
         std::sqrt((sg * sg + si * si) / 2.0);
}

std::map<std::string, SaturationReport> saturation_report(
    const std::map<PairKey, PairStats>& genuine,
    const std::map<PairKey, PairStats>& impostor,
    double flag_fraction) {
  struct Pooled {
    std::uint64_t count = 0;
    std::uint64_t edge = 0;
  };
  std::map<std::string, Pooled> imp_low, gen_high;
  for (const auto& [key, stats] : impostor) {
    if (stats.score_histogram.bins.empty()) continue;
    auto& p = imp_low[key.group];
    p.count += stats.pair_count;
    p.edge += stats.score_histogram.bins.front();
  }
  for (const auto& [key, stats] : genuine) {
    if (stats.score_histogram.bins.empty()) continue;
    auto& p = gen_high[key.group];
    p.count += stats.pair_count;
    p.edge += stats.score_histogram.bins.back();
  }

  std::map<std::string, SaturationReport> out;
  for (const auto& [group, p] : imp_low) {
    auto& r = out[group];
    r.impostor_count = p.count;
    r.impostor_low_fraction =
        p.count ? static_cast<double>(p.edge) / static_cast<double>(p.count) : 0.0;
  }
  for (const auto& [group, p] : gen_high) {
    auto& r = out[group];
    r.genuine_count = p.count;
    r.genuine_high_fraction =
        p.count ? static_cast<double>(p.edge) / static_cast<double>(p.count) : 0.0;
  }
  for (auto& [group, r] : out) {
    r.flagged = r.impostor_low_fraction > flag_fraction ||
                r.genuine_high_fraction > flag_fraction;
  }
  return out;
}

}  // namespace facelight
