#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "facelight/audit.hpp"
#include "facelight/errors.hpp"

namespace facelight {

namespace {

using nlohmann::json;

// Floats are serialized at 6 significant digits so reports are byte-stable.
json real6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return json(std::stod(buf));
}

json real6_opt(const std::optional<double>& v) {
  if (!v) return json(nullptr);
  return real6(*v);
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v, const char* dash = "-") {
  return v ? fmt6(*v) : std::string(dash);
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c == '|' ) c = '+';
    if (c == '/' || c == '\\' || c == ' ') c = '_';
  }
  return out;
}

std::string bucket_filename(const PairKey& key, PairKind kind) {
  return "dist_" + sanitize(key.group) + "_" + to_string(key.cat_a) + "-" +
         to_string(key.cat_b) + "_" +
         (kind == PairKind::Genuine ? "genuine" : "impostor") + ".csv";
}

void write_bucket_csv(const PairStats& stats, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("distribution export: cannot write " + path.string());
  out << "bin_low,bin_high,count,density\n";
  const auto& h = stats.score_histogram;
  const auto n = h.bins.size();
  const double width = (h.hi - h.lo) / static_cast<double>(n);
  const double total = static_cast<double>(stats.pair_count);
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = h.lo + width * static_cast<double>(i);
    const double hi = i + 1 == n ? h.hi : h.lo + width * static_cast<double>(i + 1);
    const double density =
        total > 0.0 ? static_cast<double>(h.bins[i]) / (total * width) : 0.0;
    out << fmt6(lo) << ',' << fmt6(hi) << ',' << h.bins[i] << ',' << fmt6(density)
        << '\n';
  }
}

bool matches(const DistributionSelection& sel, const PairKey& key, PairKind kind) {
  if (sel.group && *sel.group != key.group) return false;
  if (sel.kind && *sel.kind != kind) return false;
  if (sel.cat_a || sel.cat_b) {
    // Selection categories are unordered, like the key itself.
    auto a = sel.cat_a, b = sel.cat_b;
    if (a && b) {
      auto lo = std::min(*a, *b), hi = std::max(*a, *b);
      return key.cat_a == lo && key.cat_b == hi;
    }
    auto single = a ? *a : *b;
    return key.cat_a == single || key.cat_b == single;
  }
  return true;
}

json scheme_json(const CategoryScheme& s) {
  json j;
  j["b5"] = real6(s.b5);
  j["b15"] = real6(s.b15);
  j["b85"] = real6(s.b85);
  j["b95"] = real6(s.b95);
  j["source_count"] = s.source_count;
  return j;
}

}  // namespace

void write_sliding_csv(
    const std::map<std::pair<std::string, std::string>, SlidingCell>& table,
    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("report: cannot write " + path.string());
  out << "group,label,lo,hi,image_count,avg_bim,genuine_pairs,impostor_pairs,"
         "d_prime,low_support\n";
  std::vector<const std::pair<const std::pair<std::string, std::string>, SlidingCell>*>
      rows;
  rows.reserve(table.size());
  for (const auto& entry : table) rows.push_back(&entry);
  std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
    if (a->first.first != b->first.first) return a->first.first < b->first.first;
    return a->second.window.lo < b->second.window.lo;
  });
  for (const auto* row : rows) {
    const auto& cell = row->second;
    out << row->first.first << ',' << row->first.second << ',' << fmt6(cell.window.lo)
        << ',' << fmt6(cell.window.hi) << ',' << cell.image_count << ','
        << fmt_opt(cell.avg_bim) << ',' << cell.genuine_pairs << ','
        << cell.impostor_pairs << ',' << fmt_opt(cell.dprime) << ','
        << (cell.low_support ? 1 : 0) << '\n';
  }
}

std::vector<std::filesystem::path> export_distributions(
    const AuditReport& report, const std::filesystem::path& dir,
    const std::vector<DistributionSelection>& selections) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;

  auto export_matching = [&](const DistributionSelection* sel) {
    bool any = false;
    for (int k = 0; k < 2; ++k) {
      const auto kind = k == 0 ? PairKind::Genuine : PairKind::Impostor;
      const auto& buckets =
          kind == PairKind::Genuine ? report.genuine_buckets : report.impostor_buckets;
      for (const auto& [key, stats] : buckets) {
        if (sel && !matches(*sel, key, kind)) continue;
        if (stats.pair_count == 0 || stats.score_histogram.bins.empty()) continue;
        auto path = dir / bucket_filename(key, kind);
        if (std::find(written.begin(), written.end(), path) == written.end()) {
          write_bucket_csv(stats, path);
          written.push_back(path);
        }
        any = true;
      }
    }
    return any;
  };

  if (selections.empty()) {
    export_matching(nullptr);
  } else {
    for (const auto& sel : selections) {
      if (!export_matching(&sel)) {
        std::string desc = sel.group.value_or("*");
        desc += ":";
        desc += sel.cat_a ? to_string(*sel.cat_a) : "*";
        desc += ",";
        desc += sel.cat_b ? to_string(*sel.cat_b) : "*";
        desc += ":";
        desc += sel.kind ? (*sel.kind == PairKind::Genuine ? "genuine" : "impostor")
                         : "*";
        throw ValidationError("distribution export: no bucket matches '" + desc + "'");
      }
    }
  }
  std::sort(written.begin(), written.end());
  return written;
}

std::vector<std::filesystem::path> write_report(
    const AuditReport& report, const AuditInputs& inputs,
    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  // Distributions for the same-category buckets that exist.
  std::vector<std::filesystem::path> dist_files;
  {
    const auto dir = out_dir / "distributions";
    std::filesystem::create_directories(dir);
    for (int k = 0; k < 2; ++k) {
      const auto kind = k == 0 ? PairKind::Genuine : PairKind::Impostor;
      const auto& buckets =
          kind == PairKind::Genuine ? report.genuine_buckets : report.impostor_buckets;
      for (const auto& [key, stats] : buckets) {
        if (key.cat_a != key.cat_b) continue;
        if (stats.pair_count == 0 || stats.score_histogram.bins.empty()) continue;
        auto path = dir / bucket_filename(key, kind);
        write_bucket_csv(stats, path);
        dist_files.push_back(path);
      }
    }
    std::sort(dist_files.begin(), dist_files.end());
  }

  // Group-pooled brightness histograms, when pixel histograms are present.
  auto hist_files = write_group_histograms(out_dir, inputs.records, inputs.profiles);
  std::sort(hist_files.begin(), hist_files.end());

  // --- report.json ---
  json j;
  j["scheme"] = scheme_json(report.scheme);
  if (!report.per_group_schemes.empty()) {
    json pg;
    for (const auto& [group, s] : report.per_group_schemes) pg[group] = scheme_json(s);
    j["per_group_schemes"] = pg;
  }
  {
    json t;
    t["value"] = real6(report.threshold.value);
    t["calibration_group"] = report.threshold.calibration_group;
    t["target_fmr"] = real6(report.threshold.target_fmr);
    t["achieved_fmr"] = real6(report.threshold.achieved_fmr);
    j["threshold"] = t;
  }
  j["groups"] = report.groups;
  {
    json s;
    for (const auto& [group, st] : report.fsb_stats) {
      json g;
      g["count"] = st.count;
      g["mean"] = real6(st.mean);
      g["stddev"] = real6(st.stddev);
      g["degenerate"] = st.degenerate;
      s[group] = g;
    }
    j["fsb_stats"] = s;
  }
  {
    json rows = json::array();
    for (const auto& [key, cell] : report.fmr_table) {
      json r;
      r["group"] = key.group;
      r["cat_a"] = to_string(key.cat_a);
      r["cat_b"] = to_string(key.cat_b);
      r["pair_count"] = cell.pair_count;
      r["above_threshold"] = cell.above_threshold;
      r["fmr"] = real6_opt(cell.fmr);
      r["low_support"] = cell.low_support;
      rows.push_back(r);
    }
    j["fmr_table"] = rows;
  }
  {
    json rows = json::array();
    for (const auto& [key, cell] : report.bim_table) {
      json r;
      r["group"] = key.first;
      r["category"] = to_string(key.second);
      r["image_count"] = cell.image_count;
      r["avg_bim"] = real6_opt(cell.avg_bim);
      r["genuine_pairs"] = cell.genuine_pairs;
      r["impostor_pairs"] = cell.impostor_pairs;
      r["fmr"] = real6_opt(cell.fmr);
      r["d_prime"] = real6_opt(cell.dprime);
      r["low_support"] = cell.low_support;
      rows.push_back(r);
    }
    j["bim_table"] = rows;
  }
  {
    json rows = json::array();
    for (const auto& [key, cell] : report.sliding_table) {
      json r;
      r["group"] = key.first;
      r["label"] = key.second;
      r["lo"] = real6(cell.window.lo);
      r["hi"] = real6(cell.window.hi);
      r["image_count"] = cell.image_count;
      r["avg_bim"] = real6_opt(cell.avg_bim);
      r["genuine_pairs"] = cell.genuine_pairs;
      r["impostor_pairs"] = cell.impostor_pairs;
      r["d_prime"] = real6_opt(cell.dprime);
      r["low_support"] = cell.low_support;
      rows.push_back(r);
    }
    j["sliding_table"] = rows;
  }
  {
    json tr;
    tr["argmax_by_bim"] = report.target_range.argmax_by_bim;
    tr["argmax_by_dprime"] = report.target_range.argmax_by_dprime;
    if (report.target_range.consensus) {
      json c;
      c["lo"] = real6(report.target_range.consensus->lo);
      c["hi"] = real6(report.target_range.consensus->hi);
      tr["consensus"] = c;
      json cov;
      for (const auto& [group, f] : report.target_range.coverage) {
        cov[group] = real6(f);
      }
      tr["coverage"] = cov;
    } else {
      tr["consensus"] = nullptr;
    }
    j["target_range"] = tr;
  }
  {
    json s;
    for (const auto& [group, r] : report.saturation) {
      json g;
      g["impostor_count"] = r.impostor_count;
      g["genuine_count"] = r.genuine_count;
      g["impostor_low_fraction"] = real6(r.impostor_low_fraction);
      g["genuine_high_fraction"] = real6(r.genuine_high_fraction);
      g["flagged"] = r.flagged;
      s[group] = g;
    }
    j["saturation"] = s;
  }
  j["skipped_pairs"] = report.skipped_pairs;
  j["skipped_ids"] = report.skipped_ids;
  {
    json ex = json::array();
    for (const auto& [id, reason] : report.excluded_images) {
      json e;
      e["image_id"] = id;
      e["reason"] = reason;
      ex.push_back(e);
    }
    j["excluded_images"] = ex;
  }
  j["warnings"] = report.warnings;
  {
    json prov;
    prov["config"] = report.config_snapshot;
    prov["inputs"] = report.input_digests;
    j["provenance"] = prov;
  }
  {
    json files = json::array();
    for (const auto& p : dist_files) {
      files.push_back("distributions/" + p.filename().string());
    }
    for (const auto& p : hist_files) files.push_back(p.filename().string());
    j["distributions"] = files;
  }

  {
    auto path = out_dir / "report.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("report: cannot write " + path.string());
    out << j.dump(2) << '\n';
    written.push_back(path);
  }

  // --- fmr_table.csv ---
  {
    auto path = out_dir / "fmr_table.csv";
    std::ofstream out(path);
    if (!out) throw ValidationError("report: cannot write " + path.string());
    out << "group,cat_a,cat_b,pair_count,above_threshold,fmr,low_support\n";
    for (const auto& [key, cell] : report.fmr_table) {
      out << key.group << ',' << to_string(key.cat_a) << ',' << to_string(key.cat_b)
          << ',' << cell.pair_count << ',' << cell.above_threshold << ','
          << fmt_opt(cell.fmr) << ',' << (cell.low_support ? 1 : 0) << '\n';
    }
    written.push_back(path);
  }

  // --- bim_table.csv ---
  {
    auto path = out_dir / "bim_table.csv";
    std::ofstream out(path);
    if (!out) throw ValidationError("report: cannot write " + path.string());
    out << "group,category,image_count,avg_bim,impostor_pairs,genuine_pairs,fmr,"
           "d_prime,low_support\n";
    for (const auto& [key, cell] : report.bim_table) {
      out << key.first << ',' << to_string(key.second) << ',' << cell.image_count
          << ',' << fmt_opt(cell.avg_bim) << ',' << cell.impostor_pairs << ','
          << cell.genuine_pairs << ',' << fmt_opt(cell.fmr) << ','
          << fmt_opt(cell.dprime) << ',' << (cell.low_support ? 1 : 0) << '\n';
    }
    written.push_back(path);
  }

  write_sliding_csv(report.sliding_table, out_dir / "sliding_table.csv");
  written.push_back(out_dir / "sliding_table.csv");

  // --- report.txt ---
  {
    auto path = out_dir / "report.txt";
    std::ofstream out(path);
    if (!out) throw ValidationError("report: cannot write " + path.string());
    char line[256];

    out << "facelight audit report\n";
    out << "======================\n\n";
    std::snprintf(line, sizeof line,
                  "category scheme: b5=%s b15=%s b85=%s b95=%s  (n=%zu)\n",
                  fmt6(report.scheme.b5).c_str(), fmt6(report.scheme.b15).c_str(),
                  fmt6(report.scheme.b85).c_str(), fmt6(report.scheme.b95).c_str(),
                  report.scheme.source_count);
    out << line;
    std::snprintf(line, sizeof line,
                  "threshold: %s  (group %s, target FMR %s, achieved %s)\n\n",
                  fmt6(report.threshold.value).c_str(),
                  report.threshold.calibration_group.empty()
                      ? "-"
                      : report.threshold.calibration_group.c_str(),
                  fmt6(report.threshold.target_fmr).c_str(),
                  fmt6(report.threshold.achieved_fmr).c_str());
    out << line;

    out << "FSB statistics\n";
    std::snprintf(line, sizeof line, "  %-12s %10s %10s %10s\n", "group", "images",
                  "mean", "stddev");
    out << line;
    for (const auto& [group, st] : report.fsb_stats) {
      std::snprintf(line, sizeof line, "  %-12s %10llu %10s %10s%s\n", group.c_str(),
                    static_cast<unsigned long long>(st.count), fmt6(st.mean).c_str(),
                    fmt6(st.stddev).c_str(), st.degenerate ? "  (single image)" : "");
      out << line;
    }
    out << '\n';

    out << "FMR by pair brightness category (impostor pairs; * = below "
           "min support)\n";
    for (const auto& group : report.groups) {
      out << "  group " << group << "\n";
      std::snprintf(line, sizeof line, "    %-9s %16s %12s %10s\n", "pair",
                    "impostors", "above", "FMR");
      out << line;
      for (const auto& [key, cell] : report.fmr_table) {
        if (key.group != group) continue;
        const std::string pair_label = std::string("(") + to_string(key.cat_a) + "," +
                                       to_string(key.cat_b) + ")";
        std::snprintf(line, sizeof line, "    %-9s %16llu %12llu %10s%s\n",
                      pair_label.c_str(),
                      static_cast<unsigned long long>(cell.pair_count),
                      static_cast<unsigned long long>(cell.above_threshold),
                      fmt_opt(cell.fmr).c_str(), cell.low_support ? " *" : "");
        out << line;
      }
    }
    out << '\n';

    out << "BIM / FMR / d' for same-category pairs (- = undefined or below "
           "min support)\n";
    for (const auto& group : report.groups) {
      out << "  group " << group << "\n";
      std::snprintf(line, sizeof line, "    %-9s %10s %10s %10s\n", "pair", "BIM",
                    "FMR", "d'");
      out << line;
      for (const auto& [key, cell] : report.bim_table) {
        if (key.first != group) continue;
        const std::string pair_label = std::string("(") + to_string(key.second) + "," +
                                       to_string(key.second) + ")";
        const bool dash = cell.low_support;
        std::snprintf(line, sizeof line, "    %-9s %10s %10s %10s\n",
                      pair_label.c_str(), fmt_opt(cell.avg_bim).c_str(),
                      dash ? "-" : fmt_opt(cell.fmr).c_str(),
                      dash ? "-" : fmt_opt(cell.dprime).c_str());
        out << line;
      }
    }
    out << '\n';

    if (!report.sliding_table.empty()) {
      out << "Sliding brightness bands (BIM and d' over in-band pairs)\n";
      std::vector<const std::pair<const std::pair<std::string, std::string>,
                                  SlidingCell>*> rows;
      for (const auto& entry : report.sliding_table) rows.push_back(&entry);
      std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
        if (a->first.first != b->first.first) return a->first.first < b->first.first;
        return a->second.window.lo < b->second.window.lo;
      });
      std::string current;
      for (const auto* row : rows) {
        if (row->first.first != current) {
          current = row->first.first;
          out << "  group " << current << "\n";
          std::snprintf(line, sizeof line, "    %-6s %9s %9s %8s %10s %12s %8s\n",
                        "band", "lo", "hi", "images", "BIM", "genuine", "d'");
          out << line;
        }
        const auto& cell = row->second;
        std::snprintf(line, sizeof line, "    %-6s %9s %9s %8llu %10s %12llu %8s%s\n",
                      row->first.second.c_str(), fmt6(cell.window.lo).c_str(),
                      fmt6(cell.window.hi).c_str(),
                      static_cast<unsigned long long>(cell.image_count),
                      fmt_opt(cell.avg_bim).c_str(),
                      static_cast<unsigned long long>(cell.genuine_pairs),
                      fmt_opt(cell.dprime).c_str(),
                      cell.low_support ? "  (low support)" : "");
        out << line;
      }
      for (const auto& [group, label] : report.target_range.argmax_by_bim) {
        out << "  argmax BIM  " << group << ": " << label << "\n";
      }
      for (const auto& [group, label] : report.target_range.argmax_by_dprime) {
        out << "  argmax d'   " << group << ": " << label << "\n";
      }
      if (report.target_range.consensus) {
        std::snprintf(line, sizeof line, "  consensus target range: %s - %s\n",
                      fmt6(report.target_range.consensus->lo).c_str(),
                      fmt6(report.target_range.consensus->hi).c_str());
        out << line;
        for (const auto& [group, f] : report.target_range.coverage) {
          std::snprintf(line, sizeof line, "    coverage %s: %s\n", group.c_str(),
                        fmt6(f).c_str());
          out << line;
        }
      } else {
        out << "  consensus target range: undefined\n";
      }
      out << '\n';
    }

    out << "Score saturation\n";
    for (const auto& [group, r] : report.saturation) {
      std::snprintf(line, sizeof line,
                    "  %-12s impostor lowest-bin %s, genuine highest-bin %s%s\n",
                    group.c_str(), fmt6(r.impostor_low_fraction).c_str(),
                    fmt6(r.genuine_high_fraction).c_str(),
                    r.flagged ? "  [saturated]" : "");
      out << line;
    }
    out << '\n';

    std::snprintf(line, sizeof line, "skipped pairs: %llu\n",
                  static_cast<unsigned long long>(report.skipped_pairs));
    out << line;
    std::snprintf(line, sizeof line, "excluded images: %zu\n",
                  report.excluded_images.size());
    out << line;
    if (!report.warnings.empty()) {
      out << "warnings:\n";
      for (const auto& w : report.warnings) out << "  - " << w << "\n";
    }
    written.push_back(path);
  }

  for (const auto& p : dist_files) written.push_back(p);
  for (const auto& p : hist_files) written.push_back(p);
  return written;
}

}  // namespace facelight
