#include "facelight/skin_region.hpp"

#include <array>
#include <optional>

#include "facelight/errors.hpp"

namespace facelight {

std::set<std::uint8_t> LabelSemantics::ids_named(const std::string& name) const {
  std::set<std::uint8_t> ids;
  for (const auto& [idx, n] : names) {
    if (n == name) ids.insert(idx);
  }
  return ids;
}

bool LabelSemantics::has_name(const std::string& name) const {
  for (const auto& [idx, n] : names) {
    if (n == name) return true;
  }
  return false;
}

LabelSemantics default_label_semantics() {
  LabelSemantics s;
  s.names = {
      {0, "background"},  {1, "skin"},           {2, "left_brow"},
      {3, "right_brow"},  {4, "left_eye"},       {5, "right_eye"},
      {6, "eye_glasses"}, {7, "left_ear"},       {8, "right_ear"},
      {9, "earring"},     {10, "nose"},          {11, "mouth_interior"},
      {12, "upper_lip"},  {13, "lower_lip"},     {14, "neck"},
      {15, "necklace"},   {16, "cloth"},         {17, "hair"},
      {18, "hat"},
  };
  return s;
}

const std::vector<std::string>& excluded_region_names() {
  static const std::vector<std::string> names = {
      "left_eye",  "right_eye", "left_brow",      "right_brow",
      "upper_lip", "lower_lip", "mouth_interior", "nose",
  };
  return names;
}

SkinMask derive_skin_mask(const LabelMap& labels) {
  if (!labels.semantics.has_name("skin")) {
    throw ValidationError("skin mask: label semantics have no 'skin' region");
  }

  std::array<bool, 256> is_skin{};
  std::array<bool, 256> is_excluded{};
  for (std::uint8_t idx : labels.semantics.ids_named("skin")) is_skin[idx] = true;
  for (const auto& name : excluded_region_names()) {
    for (std::uint8_t idx : labels.semantics.ids_named(name)) is_excluded[idx] = true;
  }

  // "Level of the nose" = the lowest-on-screen (maximum) nose row index.
  std::array<bool, 256> is_nose{};
  for (std::uint8_t idx : labels.semantics.ids_named("nose")) is_nose[idx] = true;
  std::optional<std::uint32_t> nose_max_row;
  for (std::uint32_t r = 0; r < labels.height; ++r) {
    for (std::uint32_t c = 0; c < labels.width; ++c) {
      if (is_nose[labels.at(r, c)]) nose_max_row = r;
    }
  }

  SkinMask mask;
  mask.width = labels.width;
  mask.height = labels.height;
  mask.included.assign(static_cast<std::size_t>(labels.width) * labels.height, 0);
  mask.nose_missing = !nose_max_row.has_value();

  for (std::uint32_t r = 0; r < labels.height; ++r) {
    if (nose_max_row && r > *nose_max_row) break;
    for (std::uint32_t c = 0; c < labels.width; ++c) {
      const std::uint8_t label = labels.at(r, c);
      if (is_skin[label] && !is_excluded[label]) {
        mask.included[static_cast<std::size_t>(r) * labels.width + c] = 1;
        ++mask.pixel_count;
      }
    }
  }

  if (mask.pixel_count == 0) {
    throw ValidationError("skin mask: zero usable skin pixels");
  }
  return mask;
}

}  // namespace facelight
