#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "facelight/audit.hpp"
#include "facelight/brightness.hpp"
#include "facelight/config.hpp"
#include "facelight/embeddings.hpp"
#include "facelight/errors.hpp"
#include "facelight/image_io.hpp"
#include "facelight/manifest.hpp"
#include "facelight/pair_engine.hpp"
#include "facelight/score_table.hpp"
#include "facelight/skin_region.hpp"

namespace fl = facelight;

namespace {

// Exit codes: 0 success, 1 usage, 2 input/validation, 3 internal failure.
constexpr int kUsageError = 1;
constexpr int kInputError = 2;
constexpr int kInternalError = 3;

struct CommonOpts {
  std::string config_path;
  std::string manifest;
  std::string profiles;
  std::string embeddings;
  std::string ids;
  std::string scores;
  // Flag overrides recorded as config entries; applied after the config file
  // so that flags always win.
  std::vector<std::pair<std::string, std::string>> overrides;
};

void add_config_flag(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path,
                  "key-value config file (fallback: FACELIGHT_CONFIG env var)");
}

void add_override(CLI::App* cmd, CommonOpts& opts, const std::string& flag,
                  const std::string& key, const std::string& desc) {
  cmd->add_option_function<std::string>(
      flag, [&opts, key](const std::string& v) { opts.overrides.emplace_back(key, v); },
      desc);
}

void add_flag_override(CLI::App* cmd, CommonOpts& opts, const std::string& flag,
                       const std::string& key, const std::string& value,
                       const std::string& desc) {
  cmd->add_flag_callback(
      flag, [&opts, key, value] { opts.overrides.emplace_back(key, value); }, desc);
}

void add_threads_flag(CLI::App* cmd, CommonOpts& opts) {
  add_override(cmd, opts, "--threads", "threads", "worker count (0 = all cores)");
}

fl::Config resolve_config(const CommonOpts& opts) {
  fl::Config config;
  std::string path = opts.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("FACELIGHT_CONFIG")) path = env;
  }
  if (!path.empty()) config = fl::load_config(path);
  for (const auto& [key, value] : opts.overrides) {
    fl::apply_config_entry(config, key, value);
  }
  return config;
}

fl::AuditInputs load_inputs(const CommonOpts& opts, const fl::Config& config,
                            bool need_profiles, bool need_scores) {
  fl::AuditInputs inputs;
  inputs.records = fl::load_manifest(opts.manifest, config.groups);
  inputs.input_digests[opts.manifest] = fl::file_digest(opts.manifest);

  if (!opts.embeddings.empty() || !opts.ids.empty()) {
    if (opts.embeddings.empty() || opts.ids.empty()) {
      throw fl::ValidationError("--embeddings and --ids go together");
    }
    inputs.embeddings =
        fl::load_embeddings(opts.embeddings, opts.ids, config.normalize_embeddings);
    fl::bind_embeddings(inputs.records, *inputs.embeddings);
    inputs.input_digests[opts.embeddings] = fl::file_digest(opts.embeddings);
    inputs.input_digests[opts.ids] = fl::file_digest(opts.ids);
  }
  if (!opts.scores.empty()) {
    inputs.scores = fl::load_score_table(opts.scores);
    inputs.input_digests[opts.scores] = fl::file_digest(opts.scores);
  }
  if (need_scores && !inputs.embeddings && !inputs.scores) {
    throw fl::ValidationError(
        "a score source is required: --embeddings/--ids or --scores");
  }

  if (need_profiles) {
    if (!opts.profiles.empty()) {
      fl::load_profiles_csv(inputs, opts.profiles);
    } else {
      fl::compute_profiles(inputs, config);
    }
  }
  return inputs;
}

void print_scheme(const fl::CategoryScheme& scheme) {
  std::cout << "category scheme: b5=" << scheme.b5 << " b15=" << scheme.b15
            << " b85=" << scheme.b85 << " b95=" << scheme.b95
            << " (n=" << scheme.source_count << ")\n";
}

void print_exclusions(const fl::AuditInputs& inputs) {
  for (const auto& w : inputs.warnings) std::cout << "warning: " << w << "\n";
  if (inputs.excluded.empty()) return;
  std::cout << inputs.excluded.size() << " image(s) excluded:\n";
  for (const auto& [id, reason] : inputs.excluded) {
    std::cout << "  " << id << ": " << reason << "\n";
  }
}

std::vector<double> pooled_fsb(const fl::AuditInputs& inputs) {
  std::vector<double> pooled;
  for (const auto& p : inputs.profiles) {
    if (p) pooled.push_back(p->fsb);
  }
  return pooled;
}

fl::DistributionSelection parse_selection(const std::string& spec) {
  // group:catA,catB:kind with * wildcards, e.g. "G1:M,M:impostor"
  std::vector<std::string> parts;
  std::string cur;
  for (char c : spec) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  if (parts.size() != 3) {
    throw fl::ValidationError("--select needs group:catA,catB:kind, got '" + spec + "'");
  }
  fl::DistributionSelection sel;
  if (parts[0] != "*" && !parts[0].empty()) sel.group = parts[0];
  if (parts[1] != "*" && !parts[1].empty()) {
    auto comma = parts[1].find(',');
    auto parse_cat = [&](const std::string& s) {
      auto cat = fl::category_from_string(s);
      if (!cat) throw fl::ValidationError("--select: unknown category '" + s + "'");
      return *cat;
    };
    if (comma == std::string::npos) {
      sel.cat_a = parse_cat(parts[1]);
    } else {
      sel.cat_a = parse_cat(parts[1].substr(0, comma));
      sel.cat_b = parse_cat(parts[1].substr(comma + 1));
    }
  }
  if (parts[2] == "genuine") {
    sel.kind = fl::PairKind::Genuine;
  } else if (parts[2] == "impostor") {
    sel.kind = fl::PairKind::Impostor;
  } else if (parts[2] != "*" && !parts[2].empty()) {
    throw fl::ValidationError("--select: kind must be genuine, impostor or *");
  }
  return sel;
}

// ---------------------------------------------------------------------------

int run_fsb(const CommonOpts& opts, const std::string& out,
            const std::string& hist_dir, const std::string& mask_dir,
            bool no_categories) {
  auto config = resolve_config(opts);
  auto inputs = load_inputs(opts, config, true, false);

  if (!mask_dir.empty()) {
    std::filesystem::create_directories(mask_dir);
    for (const auto& rec : inputs.records) {
      try {
        auto labels = fl::load_label_map(rec.mask_path, config.labels);
        auto mask = fl::derive_skin_mask(labels);
        fl::write_mask_png(mask, std::filesystem::path(mask_dir) /
                                     ("mask_" + rec.image_id + ".png"));
      } catch (const fl::ValidationError&) {
        // excluded images have no mask to render
      }
    }
  }

  std::optional<fl::CategoryScheme> scheme;
  if (!no_categories) {
    scheme = fl::fit_category_scheme(pooled_fsb(inputs), config.percentiles);
    print_scheme(*scheme);
  }
  fl::write_profiles_csv(out, inputs.records, inputs.profiles, scheme);
  std::cout << "wrote " << out << "\n";

  if (!hist_dir.empty()) {
    std::filesystem::create_directories(hist_dir);
    auto files = fl::write_group_histograms(hist_dir, inputs.records, inputs.profiles);
    std::cout << "wrote " << files.size() << " group histogram file(s)\n";
  }
  print_exclusions(inputs);
  return 0;
}

int run_bim(const CommonOpts& opts, const std::string& out_dir,
            const std::string& out) {
  auto config = resolve_config(opts);
  auto inputs = load_inputs(opts, config, true, false);

  struct Acc {
    std::uint64_t n = 0;
    double bim_sum = 0;
  };
  std::map<std::string, Acc> accs;
  for (std::size_t i = 0; i < inputs.records.size(); ++i) {
    if (!inputs.profiles[i]) continue;
    auto& a = accs[inputs.records[i].group];
    ++a.n;
    a.bim_sum += inputs.profiles[i]->bim;
  }
  std::cout << "group        images     avg BIM\n";
  for (const auto& [group, a] : accs) {
    std::printf("%-12s %7llu %11.4f\n", group.c_str(),
                static_cast<unsigned long long>(a.n),
                a.bim_sum / static_cast<double>(a.n));
  }

  if (!out.empty()) {
    std::ofstream csv(out);
    if (!csv) throw fl::ValidationError("bim: cannot write " + out);
    csv << "group,images,avg_bim\n";
    for (const auto& [group, a] : accs) {
      csv << group << ',' << a.n << ',' << a.bim_sum / static_cast<double>(a.n) << '\n';
    }
    std::cout << "wrote " << out << "\n";
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    auto files = fl::write_group_histograms(out_dir, inputs.records, inputs.profiles);
    if (files.empty()) {
      throw fl::ValidationError(
          "bim: pixel histograms need image inputs (cached --profiles carry none)");
    }
    std::cout << "wrote " << files.size() << " group histogram file(s)\n";
  }
  print_exclusions(inputs);
  return 0;
}

int run_categorize(const CommonOpts& opts, const std::string& out,
                   const std::string& boundaries) {
  auto config = resolve_config(opts);
  auto inputs = load_inputs(opts, config, true, false);

  fl::CategoryScheme scheme;
  if (!boundaries.empty()) {
    std::vector<double> b;
    std::string cur;
    for (char c : boundaries + ",") {
      if (c == ',') {
        if (!cur.empty()) {
          try {
            b.push_back(std::stod(cur));
          } catch (const std::exception&) {
            throw fl::ValidationError("--boundaries: '" + cur + "' is not a number");
          }
        }
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (b.size() != 4 || !(b[0] <= b[1] && b[1] <= b[2] && b[2] <= b[3])) {
      throw fl::ValidationError(
          "--boundaries needs four nondecreasing values b5,b15,b85,b95");
    }
    scheme = fl::CategoryScheme{b[0], b[1], b[2], b[3], 0};
  } else {
    scheme = fl::fit_category_scheme(pooled_fsb(inputs), config.percentiles);
  }
  print_scheme(scheme);
  fl::write_profiles_csv(out, inputs.records, inputs.profiles, scheme);
  std::cout << "wrote " << out << "\n";
  print_exclusions(inputs);
  return 0;
}

int run_stats(const CommonOpts& opts, const std::string& out) {
  auto config = resolve_config(opts);
  auto inputs = load_inputs(opts, config, true, false);
  auto stats = fl::group_stats(inputs.profiles, inputs.records);

  std::cout << "group        images        mean      stddev\n";
  for (const auto& [group, s] : stats) {
    std::printf("%-12s %7llu %11.4f %11.4f%s\n", group.c_str(),
                static_cast<unsigned long long>(s.count), s.mean, s.stddev,
                s.degenerate ? "  (single image)" : "");
  }
  if (!out.empty()) {
    std::ofstream csv(out);
    if (!csv) throw fl::ValidationError("stats: cannot write " + out);
    csv << "group,count,mean,stddev,degenerate\n";
    for (const auto& [group, s] : stats) {
      csv << group << ',' << s.count << ',' << s.mean << ',' << s.stddev << ','
          << (s.degenerate ? 1 : 0) << '\n';
    }
    std::cout << "wrote " << out << "\n";
  }
  print_exclusions(inputs);
  return 0;
}

int run_audit_cmd(const CommonOpts& opts, const std::string& out_dir) {
  auto config = resolve_config(opts);
  auto inputs = load_inputs(opts, config, true, true);

  auto report = fl::run_audit(inputs, config);
  auto files = fl::write_report(report, inputs, out_dir);

  print_scheme(report.scheme);
  std::cout << "threshold " << report.threshold.value;
  if (!report.threshold.calibration_group.empty()) {
    std::cout << " (group " << report.threshold.calibration_group << ", target FMR "
              << report.threshold.target_fmr << ", achieved "
              << report.threshold.achieved_fmr << ")";
  }
  std::cout << "\n";
  if (report.target_range.consensus) {
    std::cout << "consensus target range: " << report.target_range.consensus->lo
              << " - " << report.target_range.consensus->hi << "\n";
  }
  for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
  std::cout << "wrote " << files.size() << " file(s) under " << out_dir << "\n";
  return 0;
}

int run_target_range(const CommonOpts& opts, const std::string& out) {
  auto config = resolve_config(opts);
  auto inputs = load_inputs(opts, config, true, true);

  double lo, hi;
  if (config.window_lo && config.window_hi) {
    lo = *config.window_lo;
    hi = *config.window_hi;
  } else {
    auto scheme = fl::fit_category_scheme(pooled_fsb(inputs), config.percentiles);
    print_scheme(scheme);
    lo = config.window_lo.value_or(scheme.b15);
    hi = config.window_hi.value_or(scheme.b85);
  }
  auto windows = fl::sliding_windows(lo, hi, config.window_width, config.window_step,
                                     config.window_label_origin);

  std::map<std::pair<std::string, std::string>, fl::SlidingCell> table;
  fl::TargetRangeResult result;
  fl::target_range_search(inputs, config, windows, table, result);

  for (const auto& [group, label] : result.argmax_by_bim) {
    std::cout << "argmax BIM  " << group << ": " << label << "\n";
  }
  for (const auto& [group, label] : result.argmax_by_dprime) {
    std::cout << "argmax d'   " << group << ": " << label << "\n";
  }
  if (result.consensus) {
    std::cout << "consensus target range: " << result.consensus->lo << " - "
              << result.consensus->hi << "\n";
    for (const auto& [group, f] : result.coverage) {
      std::cout << "  coverage " << group << ": " << f << "\n";
    }
  } else {
    std::cout << "consensus target range: undefined (no window met the "
                 "genuine-pair floor)\n";
  }
  if (!out.empty()) {
    fl::write_sliding_csv(table, out);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int run_export_dist(const CommonOpts& opts, const std::string& out_dir,
                    const std::vector<std::string>& selects, double threshold) {
  auto config = resolve_config(opts);
  auto inputs = load_inputs(opts, config, true, true);

  auto scheme = fl::fit_category_scheme(pooled_fsb(inputs), config.percentiles);
  fl::Categories categories(inputs.records.size());
  for (std::size_t i = 0; i < inputs.records.size(); ++i) {
    if (inputs.profiles[i]) {
      categories[i] = fl::categorize(inputs.profiles[i]->fsb, scheme);
    }
  }

  fl::EngineConfig ec;
  ec.threads = config.threads;
  ec.score_lo = config.score_min;
  ec.score_hi = config.score_max;
  ec.score_bins = config.score_bins;
  ec.cross_group = config.cross_group;
  fl::EngineResult engine;
  if (inputs.embeddings) {
    engine = fl::run_pair_engine(inputs.records, categories, *inputs.embeddings,
                                 threshold, ec);
  } else {
    engine = fl::accumulate_score_table(inputs.records, categories, *inputs.scores,
                                        threshold, ec);
  }

  fl::AuditReport holder;
  holder.genuine_buckets = std::move(engine.genuine);
  holder.impostor_buckets = std::move(engine.impostor);

  std::vector<fl::DistributionSelection> selections;
  for (const auto& s : selects) selections.push_back(parse_selection(s));
  auto files = fl::export_distributions(holder, out_dir, selections);
  std::cout << "wrote " << files.size() << " distribution file(s) under " << out_dir
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"facelight: face-skin brightness and false-match-rate audit toolkit"};
  app.require_subcommand(1);

  CommonOpts fsb_o, bim_o, cat_o, stats_o, audit_o, range_o, dist_o;

  // fsb
  auto* fsb = app.add_subcommand(
      "fsb", "compute per-image FSB/BIM and exposure categories to a CSV");
  std::string fsb_out, fsb_hist_dir, fsb_mask_dir;
  bool fsb_no_categories = false;
  add_config_flag(fsb, fsb_o);
  fsb->add_option("--manifest", fsb_o.manifest, "dataset manifest CSV")->required();
  fsb->add_option("--profiles", fsb_o.profiles, "reuse a cached profile CSV");
  fsb->add_option("--out", fsb_out, "output profile CSV")->required();
  fsb->add_option("--hist-dir", fsb_hist_dir, "also write per-group histograms here");
  fsb->add_option("--mask-dir", fsb_mask_dir, "debug-export skin masks as 1-bit PNGs");
  fsb->add_flag("--no-categories", fsb_no_categories,
                "skip scheme fitting; leave the category column empty");
  add_override(fsb, fsb_o, "--percentiles", "percentiles",
               "four percentile levels, e.g. 5,15,85,95");
  add_threads_flag(fsb, fsb_o);

  // bim
  auto* bim = app.add_subcommand(
      "bim", "per-group average BIM and pooled 256-bin brightness histograms");
  std::string bim_out_dir, bim_out;
  add_config_flag(bim, bim_o);
  bim->add_option("--manifest", bim_o.manifest, "dataset manifest CSV")->required();
  bim->add_option("--profiles", bim_o.profiles, "reuse a cached profile CSV");
  bim->add_option("--out", bim_out, "per-group BIM summary CSV");
  bim->add_option("--out-dir", bim_out_dir, "write hist_<group>.csv files here");
  add_threads_flag(bim, bim_o);

  // categorize
  auto* cat = app.add_subcommand(
      "categorize", "assign exposure categories from fitted or explicit boundaries");
  std::string cat_out, cat_boundaries;
  add_config_flag(cat, cat_o);
  cat->add_option("--manifest", cat_o.manifest, "dataset manifest CSV")->required();
  cat->add_option("--profiles", cat_o.profiles, "reuse a cached profile CSV");
  cat->add_option("--out", cat_out, "output profile CSV with categories")->required();
  cat->add_option("--boundaries", cat_boundaries, "explicit b5,b15,b85,b95");
  add_override(cat, cat_o, "--percentiles", "percentiles",
               "four percentile levels, e.g. 5,15,85,95");
  add_threads_flag(cat, cat_o);

  // stats
  auto* stats = app.add_subcommand("stats", "per-group FSB count/mean/stddev");
  std::string stats_out;
  add_config_flag(stats, stats_o);
  stats->add_option("--manifest", stats_o.manifest, "dataset manifest CSV")->required();
  stats->add_option("--profiles", stats_o.profiles, "reuse a cached profile CSV");
  stats->add_option("--out", stats_out, "optional stats CSV");
  add_threads_flag(stats, stats_o);

  // audit
  auto* audit = app.add_subcommand(
      "audit", "full pipeline: scheme, threshold, FMR/BIM/sliding tables, exports");
  std::string audit_out_dir;
  add_config_flag(audit, audit_o);
  audit->add_option("--manifest", audit_o.manifest, "dataset manifest CSV")->required();
  audit->add_option("--profiles", audit_o.profiles, "reuse a cached profile CSV");
  audit->add_option("--embeddings", audit_o.embeddings, "FLEB embedding matrix");
  audit->add_option("--ids", audit_o.ids, "embedding ids sidecar");
  audit->add_option("--scores", audit_o.scores, "precomputed score table CSV");
  audit->add_option("--out", audit_out_dir, "report output directory")->required();
  add_override(audit, audit_o, "--calibration-group", "calibration.group",
               "demographic whose impostors calibrate the threshold");
  add_override(audit, audit_o, "--target-fmr", "calibration.target_fmr",
               "calibration target FMR (default 1e-4)");
  add_override(audit, audit_o, "--threshold", "calibration.threshold",
               "fixed decision threshold; skips calibration");
  add_override(audit, audit_o, "--min-support", "support.min_impostor",
               "low-support floor for FMR cells (default 1000000)");
  add_override(audit, audit_o, "--min-genuine", "support.min_genuine_window",
               "genuine-pair floor for window argmax (default 1000)");
  add_override(audit, audit_o, "--percentiles", "percentiles",
               "four percentile levels, e.g. 5,15,85,95");
  add_override(audit, audit_o, "--window-width", "window.width",
               "sliding band width (default 40)");
  add_override(audit, audit_o, "--window-step", "window.step",
               "sliding band step (default 5)");
  add_override(audit, audit_o, "--window-lo", "window.lo",
               "sweep start (default: fitted b15)");
  add_override(audit, audit_o, "--window-hi", "window.hi",
               "sweep end (default: fitted b85)");
  add_override(audit, audit_o, "--label-origin", "window.label_origin",
               "numeric label of the first band (default 1)");
  add_override(audit, audit_o, "--score-min", "score.min", "score histogram low edge");
  add_override(audit, audit_o, "--score-max", "score.max", "score histogram high edge");
  add_override(audit, audit_o, "--score-bins", "score.bins",
               "score histogram bins (default 2000)");
  add_flag_override(audit, audit_o, "--cross-group", "impostor.cross_group", "true",
                    "also pair impostors across groups");
  add_flag_override(audit, audit_o, "--per-group-scheme", "scheme.per_group", "true",
                    "fit one category scheme per group");
  add_flag_override(audit, audit_o, "--no-normalize", "embeddings.normalize", "false",
                    "skip L2 normalization of embedding rows");
  add_threads_flag(audit, audit_o);

  // target-range
  auto* range = app.add_subcommand(
      "target-range", "sliding-bin search for the brightness range maximizing d'");
  std::string range_out;
  add_config_flag(range, range_o);
  range->add_option("--manifest", range_o.manifest, "dataset manifest CSV")->required();
  range->add_option("--profiles", range_o.profiles, "reuse a cached profile CSV");
  range->add_option("--embeddings", range_o.embeddings, "FLEB embedding matrix");
  range->add_option("--ids", range_o.ids, "embedding ids sidecar");
  range->add_option("--scores", range_o.scores, "precomputed score table CSV");
  range->add_option("--out", range_out, "sliding table CSV");
  add_override(range, range_o, "--window", "window.width",
               "sliding band width (default 40)");
  add_override(range, range_o, "--step", "window.step", "sliding band step (default 5)");
  add_override(range, range_o, "--lo", "window.lo", "sweep start (default: fitted b15)");
  add_override(range, range_o, "--hi", "window.hi", "sweep end (default: fitted b85)");
  add_override(range, range_o, "--label-origin", "window.label_origin",
               "numeric label of the first band (default 1)");
  add_override(range, range_o, "--min-genuine", "support.min_genuine_window",
               "genuine-pair floor for window argmax (default 1000)");
  add_override(range, range_o, "--percentiles", "percentiles",
               "four percentile levels, e.g. 5,15,85,95");
  add_threads_flag(range, range_o);

  // export-dist
  auto* dist = app.add_subcommand(
      "export-dist", "export genuine/impostor score distributions as CSVs");
  std::string dist_out_dir;
  std::vector<std::string> dist_selects;
  double dist_threshold = 0.0;
  add_config_flag(dist, dist_o);
  dist->add_option("--manifest", dist_o.manifest, "dataset manifest CSV")->required();
  dist->add_option("--profiles", dist_o.profiles, "reuse a cached profile CSV");
  dist->add_option("--embeddings", dist_o.embeddings, "FLEB embedding matrix");
  dist->add_option("--ids", dist_o.ids, "embedding ids sidecar");
  dist->add_option("--scores", dist_o.scores, "precomputed score table CSV");
  dist->add_option("--out", dist_out_dir, "output directory")->required();
  dist->add_option("--select", dist_selects,
                   "bucket selection group:catA,catB:kind (repeatable, * wildcards)");
  dist->add_option("--threshold", dist_threshold,
                   "threshold recorded in the bucket stats (default 0)");
  add_override(dist, dist_o, "--score-bins", "score.bins",
               "score histogram bins (default 2000)");
  add_threads_flag(dist, dist_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (fsb->parsed()) {
      return run_fsb(fsb_o, fsb_out, fsb_hist_dir, fsb_mask_dir, fsb_no_categories);
    }
    if (bim->parsed()) return run_bim(bim_o, bim_out_dir, bim_out);
    if (cat->parsed()) return run_categorize(cat_o, cat_out, cat_boundaries);
    if (stats->parsed()) return run_stats(stats_o, stats_out);
    if (audit->parsed()) return run_audit_cmd(audit_o, audit_out_dir);
    if (range->parsed()) return run_target_range(range_o, range_out);
    if (dist->parsed()) {
      return run_export_dist(dist_o, dist_out_dir, dist_selects, dist_threshold);
    }
    std::cerr << "no subcommand\n";
    return kUsageError;
  } catch (const fl::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const fl::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternalError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
}
