#include "facelight/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "facelight/errors.hpp"
#include "csv_util.hpp"

namespace facelight {

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config: key '" + key + "' needs a number, got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("config: key '" + key + "' needs a nonnegative integer, got '" +
                          value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ValidationError("config: key '" + key + "' needs true/false, got '" + value + "'");
}

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::strip(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

void apply_config_entry(Config& config, const std::string& key,
                        const std::string& value) {
  if (key == "groups") {
    config.groups = parse_list(value);
  } else if (key == "percentiles") {
    auto parts = parse_list(value);
    if (parts.size() != 4) {
      throw ValidationError("config: 'percentiles' needs four comma-separated levels");
    }
    for (std::size_t i = 0; i < 4; ++i) {
      config.percentiles[i] = parse_double(key, parts[i]);
    }
  } else if (key == "scheme.per_group") {
    config.per_group_scheme = parse_bool(key, value);
  } else if (key == "calibration.group") {
    config.calibration_group = value;
  } else if (key == "calibration.target_fmr") {
    config.target_fmr = parse_double(key, value);
  } else if (key == "calibration.threshold") {
    config.fixed_threshold = parse_double(key, value);
  } else if (key == "support.min_impostor") {
    config.min_impostor_support = parse_u64(key, value);
  } else if (key == "support.min_genuine_window") {
    config.min_genuine_window = parse_u64(key, value);
  } else if (key == "window.width") {
    config.window_width = parse_double(key, value);
  } else if (key == "window.step") {
    config.window_step = parse_double(key, value);
  } else if (key == "window.lo") {
    config.window_lo = parse_double(key, value);
  } else if (key == "window.hi") {
    config.window_hi = parse_double(key, value);
  } else if (key == "window.label_origin") {
    config.window_label_origin = static_cast<int>(parse_double(key, value));
  } else if (key == "embeddings.normalize") {
    config.normalize_embeddings = parse_bool(key, value);
  } else if (key == "score.min") {
    config.score_min = parse_double(key, value);
  } else if (key == "score.max") {
    config.score_max = parse_double(key, value);
  } else if (key == "score.bins") {
    config.score_bins = parse_u64(key, value);
    if (config.score_bins == 0) {
      throw ValidationError("config: 'score.bins' must be positive");
    }
  } else if (key == "saturation.flag_fraction") {
    config.saturation_flag_fraction = parse_double(key, value);
  } else if (key == "impostor.cross_group") {
    config.cross_group = parse_bool(key, value);
  } else if (key == "threads") {
    config.threads = static_cast<unsigned>(parse_u64(key, value));
  } else if (key.rfind("label.", 0) == 0) {
    const std::string idx_str = key.substr(6);
    const std::uint64_t idx = parse_u64(key, idx_str);
    if (idx > 255) {
      throw ValidationError("config: label index " + idx_str + " out of range");
    }
    // First label.* key replaces the default scheme entirely.
    if (!config.labels.names.empty() &&
        config.labels.names == default_label_semantics().names) {
      config.labels.names.clear();
    }
    config.labels.names[static_cast<std::uint8_t>(idx)] = value;
  } else {
    throw ValidationError("config: unknown key '" + key + "'");
  }
}

Config load_config(const std::filesystem::path& path) {
  auto in = detail::open_text(path, "config");
  Config config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::strip(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config: line " + std::to_string(line_no) +
                            " is not 'key = value'");
    }
    apply_config_entry(config, detail::strip(line.substr(0, eq)),
                       detail::strip(line.substr(eq + 1)));
  }
  return config;
}

std::map<std::string, std::string> Config::snapshot() const {
  std::map<std::string, std::string> snap;
  if (!groups.empty()) {
    std::string joined;
    for (const auto& g : groups) {
      if (!joined.empty()) joined += ",";
      joined += g;
    }
    snap["groups"] = joined;
  }
  snap["percentiles"] = format_double(percentiles[0]) + "," + format_double(percentiles[1]) +
                        "," + format_double(percentiles[2]) + "," +
                        format_double(percentiles[3]);
  snap["scheme.per_group"] = per_group_scheme ? "true" : "false";
  snap["calibration.group"] = calibration_group;
  snap["calibration.target_fmr"] = format_double(target_fmr);
  if (fixed_threshold) snap["calibration.threshold"] = format_double(*fixed_threshold);
  snap["support.min_impostor"] = std::to_string(min_impostor_support);
  snap["support.min_genuine_window"] = std::to_string(min_genuine_window);
  snap["window.width"] = format_double(window_width);
  snap["window.step"] = format_double(window_step);
  if (window_lo) snap["window.lo"] = format_double(*window_lo);
  if (window_hi) snap["window.hi"] = format_double(*window_hi);
  snap["window.label_origin"] = std::to_string(window_label_origin);
  snap["embeddings.normalize"] = normalize_embeddings ? "true" : "false";
  snap["score.min"] = format_double(score_min);
  snap["score.max"] = format_double(score_max);
  snap["score.bins"] = std::to_string(score_bins);
  snap["saturation.flag_fraction"] = format_double(saturation_flag_fraction);
  snap["impostor.cross_group"] = cross_group ? "true" : "false";
  snap["threads"] = std::to_string(threads);
  for (const auto& [idx, name] : labels.names) {
    snap["label." + std::to_string(idx)] = name;
  }
  return snap;
}

}  // namespace facelight
