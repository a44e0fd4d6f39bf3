#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facelight/image.hpp"

namespace facelight {

/// All tunables of the pipeline. Populated from a key-value config file
/// (`key = value`, `#` comments) and/or CLI flags; flags win.
///
/// Documented keys:
///   groups                    comma list restricting manifest groups
///   percentiles               four comma-separated levels (default 5,15,85,95)
///   scheme.per_group          fit one scheme per group instead of pooled (default false)
///   calibration.group         demographic whose impostors fix the threshold
///   calibration.target_fmr    default 1e-4
///   calibration.threshold     fixed threshold, skips calibration entirely
///   support.min_impostor      low-support flag floor for FMR cells (default 1000000)
///   support.min_genuine_window window argmax support floor (default 1000)
///   window.width window.step  sliding band geometry (default 40 / 5)
///   window.lo window.hi       sweep range (default: fitted b15 / b85)
///   window.label_origin       first window's numeric label (default 1)
///   embeddings.normalize      L2-normalize rows on load (default true)
///   score.min score.max       score histogram range (default -1 / 1)
///   score.bins                histogram resolution (default 2000)
///   saturation.flag_fraction  extreme-bin mass that flags a group (default 0.5)
///   impostor.cross_group      also pair across groups (default false)
///   threads                   worker count, 0 = all cores
///   label.<index>             region name for a parsing label index;
///                             any label.* key replaces the default scheme
struct Config {
  std::vector<std::string> groups;
  std::array<double, 4> percentiles{5, 15, 85, 95};
  bool per_group_scheme = false;

  std::string calibration_group;
  double target_fmr = 1e-4;
  std::optional<double> fixed_threshold;

  std::uint64_t min_impostor_support = 1'000'000;
  std::uint64_t min_genuine_window = 1'000;

  double window_width = 40.0;
  double window_step = 5.0;
  std::optional<double> window_lo;
  std::optional<double> window_hi;
  int window_label_origin = 1;

  bool normalize_embeddings = true;
  double score_min = -1.0;
  double score_max = 1.0;
  std::size_t score_bins = 2000;
  double saturation_flag_fraction = 0.5;
  bool cross_group = false;
  unsigned threads = 0;

  LabelSemantics labels = default_label_semantics();

  /// The raw key-value view, echoed into report provenance.
  std::map<std::string, std::string> snapshot() const;
};

/// Parses a config file. Unknown keys (other than label.*) are rejected.
Config load_config(const std::filesystem::path& path);

/// Applies `key = value` pairs on top of an existing config (flag overrides
/// reuse the same parser).
void apply_config_entry(Config& config, const std::string& key,
                        const std::string& value);

}  // namespace facelight
