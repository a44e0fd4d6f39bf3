#pragma once

#include <cstdint>
#include <vector>

#include "facelight/image.hpp"

namespace facelight {

/// The recognition-relevant face-skin region: skin pixels with the eyes,
/// eyebrows, lips, mouth interior and nose removed, cut off below the level
/// of the nose (mustache/beard territory).
struct SkinMask {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> included;  // 0/1 per pixel, row-major
  std::uint64_t pixel_count = 0;
  // Set when the map had no nose pixels and the row cutoff was skipped.
  bool nose_missing = false;

  bool at(std::uint32_t row, std::uint32_t col) const {
    return included[static_cast<std::size_t>(row) * width + col] != 0;
  }
};

/// Region names removed from the skin area before brightness is measured.
const std::vector<std::string>& excluded_region_names();

/// Derives the skin mask from a parsing label map:
///   included = `skin` pixels, minus pixels under any excluded region name,
///   minus skin pixels strictly below the lowest `nose` row.
/// If the map has no nose pixels the cutoff is skipped and the mask carries
/// `nose_missing = true`. Throws ValidationError when the semantics lack a
/// `skin` region or the result has zero pixels (callers drop the record).
SkinMask derive_skin_mask(const LabelMap& labels);

}  // namespace facelight
