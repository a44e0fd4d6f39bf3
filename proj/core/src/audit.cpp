#include "facelight/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <thread>
#include <unordered_map>

#include "facelight/errors.hpp"
#include "facelight/image_io.hpp"

namespace facelight {

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("digest: cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const auto n = static_cast<std::size_t>(in.gcount());
    for (std::size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void compute_profiles(AuditInputs& inputs, const Config& config) {
  const auto n = inputs.records.size();
  inputs.profiles.assign(n, std::nullopt);

  struct WorkerOut {
    std::vector<std::pair<std::string, std::string>> excluded;
    std::vector<std::string> warnings;
    std::exception_ptr error;
  };

  unsigned threads = config.threads ? config.threads
                                    : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, std::max<std::size_t>(1, n)));
  std::vector<WorkerOut> outs(threads);

  auto work = [&](unsigned w, std::size_t begin, std::size_t end) {
    auto& out = outs[w];
    for (std::size_t i = begin; i < end; ++i) {
      const auto& rec = inputs.records[i];
      try {
        GrayImage img = load_gray_image(rec.image_path);
        LabelMap labels = load_label_map(rec.mask_path, config.labels);
        if (labels.width != img.width || labels.height != img.height) {
          throw ValidationError("image '" + rec.image_id + "': label map is " +
                                std::to_string(labels.width) + "x" +
                                std::to_string(labels.height) + " but image is " +
                                std::to_string(img.width) + "x" +
                                std::to_string(img.height));
        }
        SkinMask mask;
        try {
          mask = derive_skin_mask(labels);
        } catch (const ValidationError& e) {
          out.excluded.emplace_back(rec.image_id, e.what());
          continue;
        }
        if (mask.nose_missing) {
          out.warnings.push_back("image '" + rec.image_id +
                                 "': no nose pixels, row cutoff skipped");
        }
        inputs.profiles[i] = compute_fsb(img, mask, rec.image_id);
      } catch (...) {
        if (!out.error) out.error = std::current_exception();
        return;
      }
    }
  };

  if (threads <= 1) {
    work(0, 0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t begin = std::min<std::size_t>(w * chunk, n);
      const std::size_t end = std::min(begin + chunk, n);
      pool.emplace_back(work, w, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  for (auto& out : outs) {
    if (out.error) std::rethrow_exception(out.error);
  }
  for (auto& out : outs) {
    for (auto& e : out.excluded) inputs.excluded.push_back(std::move(e));
    for (auto& w : out.warnings) inputs.warnings.push_back(std::move(w));
  }
}

void load_profiles_csv(AuditInputs& inputs, const std::filesystem::path& csv) {
  auto rows = read_profiles_csv(csv);
  std::unordered_map<std::string, const ProfileRow*> by_id;
  for (const auto& row : rows) by_id.emplace(row.image_id, &row);

  std::size_t known = 0;
  inputs.profiles.assign(inputs.records.size(), std::nullopt);
  for (std::size_t i = 0; i < inputs.records.size(); ++i) {
    const auto& rec = inputs.records[i];
    auto it = by_id.find(rec.image_id);
    if (it == by_id.end()) {
      inputs.excluded.emplace_back(rec.image_id, "no row in profiles csv");
      continue;
    }
    if (it->second->group != rec.group) {
      throw ValidationError("profiles csv: image '" + rec.image_id + "' has group '" +
                            it->second->group + "' but the manifest says '" +
                            rec.group + "'");
    }
    ++known;
    BrightnessProfile p;
    p.image_id = rec.image_id;
    p.fsb = it->second->fsb;
    p.bim = it->second->bim;
    inputs.profiles[i] = std::move(p);
  }
  if (known < by_id.size()) {
    inputs.warnings.push_back("profiles csv: " + std::to_string(by_id.size() - known) +
                              " row(s) have no manifest record; ignored");
  }
  inputs.input_digests[csv.string()] = file_digest(csv);
}

std::map<std::string, double> coverage_fraction(
    const std::vector<std::optional<BrightnessProfile>>& profiles,
    const std::vector<ImageRecord>& records,
    double lo, double hi) {
  if (!(lo < hi)) throw ValidationError("coverage: lo must be below hi");
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> counts;  // in, total
  for (std::size_t i = 0; i < records.size() && i < profiles.size(); ++i) {
    if (!profiles[i]) continue;
    auto& c = counts[records[i].group];
    ++c.second;
    if (profiles[i]->fsb >= lo && profiles[i]->fsb < hi) ++c.first;
  }
  std::map<std::string, double> out;
  for (const auto& [group, c] : counts) {
    out[group] = c.second ? static_cast<double>(c.first) / static_cast<double>(c.second)
                          : 0.0;
  }
  return out;
}

namespace {

const std::array<ExposureCategory, 5> kAllCategories = {
    ExposureCategory::SU, ExposureCategory::U, ExposureCategory::M,
    ExposureCategory::O, ExposureCategory::SO};

EngineConfig engine_config(const Config& config) {
  EngineConfig ec;
  ec.threads = config.threads;
  ec.score_lo = config.score_min;
  ec.score_hi = config.score_max;
  ec.score_bins = config.score_bins;
  ec.cross_group = config.cross_group;
  return ec;
}

// Genuine/impostor stats over one group's images inside one window, with
// both pair members required to fall inside.
struct WindowStats {
  PairStats genuine, impostor;
  std::uint64_t image_count = 0;
  double bim_sum = 0.0;
};

WindowStats window_stats(const AuditInputs& inputs, const Config& config,
                         const std::string& group,
                         const BrightnessWindow& window,
                         double threshold) {
  WindowStats ws;
  std::vector<ImageRecord> subset;
  for (std::size_t i = 0; i < inputs.records.size(); ++i) {
    if (inputs.records[i].group != group) continue;
    if (!inputs.profiles[i]) continue;
    if (!in_window(inputs.profiles[i]->fsb, window)) continue;
    subset.push_back(inputs.records[i]);
    ++ws.image_count;
    ws.bim_sum += inputs.profiles[i]->bim;
  }
  if (subset.size() < 2) return ws;

  Categories cats(subset.size(), ExposureCategory::M);  // single bucket
  EngineResult res;
  if (inputs.embeddings) {
    res = run_pair_engine(subset, cats, *inputs.embeddings, threshold,
                          engine_config(config));
  } else {
    res = accumulate_score_table(subset, cats, *inputs.scores, threshold,
                                 engine_config(config));
  }
  for (const auto& [key, stats] : res.genuine) ws.genuine.merge(stats);
  for (const auto& [key, stats] : res.impostor) ws.impostor.merge(stats);
  return ws;
}

}  // namespace

void target_range_search(const AuditInputs& inputs, const Config& config,
                         const std::vector<BrightnessWindow>& windows,
                         std::map<std::pair<std::string, std::string>, SlidingCell>& table,
                         TargetRangeResult& result) {
  if (windows.empty()) throw ValidationError("target range: no windows to search");
  if (!inputs.embeddings && !inputs.scores) {
    throw ValidationError("target range: no score source");
  }
  if (inputs.profiles.size() != inputs.records.size()) {
    throw ValidationError("target range: profiles not aligned with records");
  }

  std::vector<std::string> groups = distinct_groups(inputs.records);
  std::sort(groups.begin(), groups.end());

  const double threshold = 0.0;  // d' and BIM do not depend on the threshold
  std::map<std::string, BrightnessWindow> argmax_windows;
  for (const auto& group : groups) {
    std::optional<double> best_bim, best_dprime;
    std::string best_bim_label, best_dprime_label;
    std::optional<BrightnessWindow> best_dprime_window;
    for (const auto& window : windows) {
      WindowStats ws = window_stats(inputs, config, group, window, threshold);
      SlidingCell cell;
      cell.window = window;
      cell.image_count = ws.image_count;
      if (ws.image_count > 0) {
        cell.avg_bim = ws.bim_sum / static_cast<double>(ws.image_count);
      }
      cell.genuine_pairs = ws.genuine.pair_count;
      cell.impostor_pairs = ws.impostor.pair_count;
      cell.dprime = d_prime(ws.genuine, ws.impostor);
      cell.low_support = ws.genuine.pair_count < config.min_genuine_window;
      if (!cell.low_support) {
        if (cell.avg_bim && (!best_bim || *cell.avg_bim > *best_bim)) {
          best_bim = cell.avg_bim;
          best_bim_label = window.label;
        }
        if (cell.dprime && (!best_dprime || *cell.dprime > *best_dprime)) {
          best_dprime = cell.dprime;
          best_dprime_label = window.label;
          best_dprime_window = window;
        }
      }
      table.emplace(std::make_pair(group, window.label), std::move(cell));
    }
    if (best_bim) result.argmax_by_bim[group] = best_bim_label;
    if (best_dprime) {
      result.argmax_by_dprime[group] = best_dprime_label;
      argmax_windows.emplace(group, *best_dprime_window);
    }
  }

  if (!argmax_windows.empty()) {
    BrightnessWindow consensus;
    consensus.lo = argmax_windows.begin()->second.lo;
    consensus.hi = argmax_windows.begin()->second.hi;
    for (const auto& [group, w] : argmax_windows) {
      consensus.lo = std::min(consensus.lo, w.lo);
      consensus.hi = std::max(consensus.hi, w.hi);
    }
    consensus.label = "consensus";
    result.consensus = consensus;
    result.coverage =
        coverage_fraction(inputs.profiles, inputs.records, consensus.lo, consensus.hi);
  }
}

AuditReport run_audit(const AuditInputs& inputs, const Config& config) {
  if (inputs.records.empty()) throw ValidationError("audit: no records");
  if (inputs.profiles.size() != inputs.records.size()) {
    throw ValidationError("audit: profiles not aligned with records (" +
                          std::to_string(inputs.profiles.size()) + " vs " +
                          std::to_string(inputs.records.size()) + ")");
  }
  if (!inputs.embeddings && !inputs.scores) {
    throw ValidationError("audit: no score source (embeddings or score table required)");
  }
  if (inputs.embeddings && inputs.scores) {
    throw ValidationError("audit: both embeddings and a score table given; pick one");
  }

  AuditReport report;
  report.excluded_images = inputs.excluded;
  report.warnings = inputs.warnings;
  report.config_snapshot = config.snapshot();
  report.input_digests = inputs.input_digests;

  // Audited groups: declared (config) or discovered, minus empty ones.
  std::vector<std::string> declared =
      config.groups.empty() ? distinct_groups(inputs.records) : config.groups;
  std::map<std::string, std::uint64_t> usable_per_group;
  for (std::size_t i = 0; i < inputs.records.size(); ++i) {
    if (inputs.profiles[i]) ++usable_per_group[inputs.records[i].group];
  }
  for (const auto& group : declared) {
    if (usable_per_group.count(group) && usable_per_group[group] > 0) {
      report.groups.push_back(group);
    } else {
      report.warnings.push_back("group '" + group + "' has no usable images; omitted");
    }
  }
  std::sort(report.groups.begin(), report.groups.end());
  if (report.groups.empty()) {
    throw ValidationError("audit: no group has usable images");
  }

  // Category scheme: pooled over the whole usable image set by default.
  std::vector<double> pooled;
  std::map<std::string, std::vector<double>> per_group_fsb;
  for (std::size_t i = 0; i < inputs.records.size(); ++i) {
    if (!inputs.profiles[i]) continue;
    pooled.push_back(inputs.profiles[i]->fsb);
    if (config.per_group_scheme) {
      per_group_fsb[inputs.records[i].group].push_back(inputs.profiles[i]->fsb);
    }
  }
  report.scheme = fit_category_scheme(pooled, config.percentiles);
  if (config.per_group_scheme) {
    for (const auto& [group, values] : per_group_fsb) {
      report.per_group_schemes[group] =
          fit_category_scheme(values, config.percentiles);
    }
  }

  auto scheme_for = [&](const std::string& group) -> const CategoryScheme& {
    if (config.per_group_scheme) {
      auto it = report.per_group_schemes.find(group);
      if (it != report.per_group_schemes.end()) return it->second;
    }
    return report.scheme;
  };

  Categories categories(inputs.records.size());
  for (std::size_t i = 0; i < inputs.records.size(); ++i) {
    if (!inputs.profiles[i]) continue;
    categories[i] =
        categorize(inputs.profiles[i]->fsb, scheme_for(inputs.records[i].group));
  }

  report.fsb_stats = group_stats(inputs.profiles, inputs.records);

  // Threshold: fixed by config, or calibrated on the configured group.
  if (config.fixed_threshold) {
    report.threshold.value = *config.fixed_threshold;
    report.threshold.calibration_group = "";
    report.threshold.target_fmr = 0.0;
    report.threshold.achieved_fmr = 0.0;
    report.warnings.push_back("threshold fixed by configuration, not calibrated");
  } else {
    if (config.calibration_group.empty()) {
      throw ValidationError("audit: calibration.group is not configured");
    }
    if (std::find(report.groups.begin(), report.groups.end(),
                  config.calibration_group) == report.groups.end()) {
      throw ValidationError("audit: calibration group '" + config.calibration_group +
                            "' has no usable images");
    }
    std::vector<double> impostor_scores;
    if (inputs.embeddings) {
      impostor_scores =
          collect_impostor_scores(inputs.records, *inputs.embeddings,
                                  config.calibration_group, engine_config(config));
    } else {
      impostor_scores = collect_impostor_scores(inputs.records, *inputs.scores,
                                                config.calibration_group);
    }
    report.threshold = calibrate_threshold(std::move(impostor_scores),
                                           config.target_fmr,
                                           config.calibration_group);
  }

  // Bucket every pair.
  EngineResult engine;
  if (inputs.embeddings) {
    engine = run_pair_engine(inputs.records, categories, *inputs.embeddings,
                             report.threshold.value, engine_config(config));
  } else {
    engine = accumulate_score_table(inputs.records, categories, *inputs.scores,
                                    report.threshold.value, engine_config(config));
  }
  report.skipped_pairs = engine.skipped_pairs;
  report.skipped_ids = engine.skipped_ids;

  // FMR table: all 15 unordered category pairs for every audited group.
  for (const auto& group : report.groups) {
    for (std::size_t a = 0; a < kAllCategories.size(); ++a) {
      for (std::size_t b = a; b < kAllCategories.size(); ++b) {
        PairKey key(group, kAllCategories[a], kAllCategories[b]);
        FmrCell cell;
        auto it = engine.impostor.find(key);
        if (it != engine.impostor.end()) {
          cell.pair_count = it->second.pair_count;
          cell.above_threshold = it->second.above_threshold_count;
          cell.fmr = fmr(it->second);
        }
        cell.low_support = cell.pair_count < config.min_impostor_support;
        report.fmr_table.emplace(std::move(key), cell);
      }
    }
  }

  // BIM table: same-category buckets with per-image average BIM.
  std::map<std::pair<std::string, ExposureCategory>,
           std::pair<std::uint64_t, double>> bim_acc;  // count, sum
  for (std::size_t i = 0; i < inputs.records.size(); ++i) {
    if (!inputs.profiles[i] || !categories[i]) continue;
    auto& acc = bim_acc[{inputs.records[i].group, *categories[i]}];
    ++acc.first;
    acc.second += inputs.profiles[i]->bim;
  }
  for (const auto& group : report.groups) {
    for (auto cat : kAllCategories) {
      BimCell cell;
      auto acc = bim_acc.find({group, cat});
      if (acc != bim_acc.end() && acc->second.first > 0) {
        cell.image_count = acc->second.first;
        cell.avg_bim = acc->second.second / static_cast<double>(acc->second.first);
      }
      PairKey key(group, cat, cat);
      const PairStats* gen = nullptr;
      const PairStats* imp = nullptr;
      if (auto it = engine.genuine.find(key); it != engine.genuine.end()) {
        gen = &it->second;
        cell.genuine_pairs = it->second.pair_count;
      }
      if (auto it = engine.impostor.find(key); it != engine.impostor.end()) {
        imp = &it->second;
        cell.impostor_pairs = it->second.pair_count;
        cell.fmr = fmr(it->second);
      }
      if (gen && imp) cell.dprime = d_prime(*gen, *imp);
      cell.low_support = cell.impostor_pairs < config.min_impostor_support;
      report.bim_table.emplace(std::make_pair(group, cat), cell);
    }
  }

  // Sliding-bin target-range search over the fitted M range by default.
  const double lo = config.window_lo.value_or(report.scheme.b15);
  const double hi = config.window_hi.value_or(report.scheme.b85);
  try {
    auto windows = sliding_windows(lo, hi, config.window_width, config.window_step,
                                   config.window_label_origin);
    target_range_search(inputs, config, windows, report.sliding_table,
                        report.target_range);
    if (!report.target_range.consensus) {
      report.warnings.push_back(
          "target range: no window met the genuine-pair support floor; "
          "consensus undefined");
    }
  } catch (const ValidationError& e) {
    report.warnings.push_back(std::string("target range search skipped: ") + e.what());
  }

  report.saturation = saturation_report(engine.genuine, engine.impostor,
                                        config.saturation_flag_fraction);
  report.genuine_buckets = std::move(engine.genuine);
  report.impostor_buckets = std::move(engine.impostor);
  return report;
}

}  // namespace facelight
