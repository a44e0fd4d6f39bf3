#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace facelight {

/// 8-bit grayscale image, row-major.
struct GrayImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::uint32_t row, std::uint32_t col) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
};

/// Region-index -> region-name mapping for a face-parsing scheme.
/// Multiple indices may share a name (e.g. two ids both meaning "skin").
struct LabelSemantics {
  std::map<std::uint8_t, std::string> names;

  std::set<std::uint8_t> ids_named(const std::string& name) const;
  bool has_name(const std::string& name) const;
};

/// The 19-class face-parsing scheme common to BiSeNet-style parsers,
/// under this project's canonical region names.
LabelSemantics default_label_semantics();

/// Face-parsing label map: one region index per pixel, row-major,
/// same geometry as the paired GrayImage.
struct LabelMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> labels;
  LabelSemantics semantics;

  std::uint8_t at(std::uint32_t row, std::uint32_t col) const {
    return labels[static_cast<std::size_t>(row) * width + col];
  }
};

}  // namespace facelight
