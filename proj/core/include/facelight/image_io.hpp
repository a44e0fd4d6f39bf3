#pragma once

#include <filesystem>

#include "facelight/image.hpp"
#include "facelight/skin_region.hpp"

namespace facelight {

/// Loads a PNG/JPEG as 8-bit grayscale. Color inputs are converted with the
/// integer-rounded Rec.601 weighting round(0.299 R + 0.587 G + 0.114 B);
/// grayscale inputs pass through unchanged, so identical input bytes always
/// produce identical pixels. Throws ValidationError on unreadable files or
/// unsupported bit depths.
GrayImage load_gray_image(const std::filesystem::path& path);

/// Loads a face-parsing label map stored as a single-channel 8-bit image
/// whose pixel values are region indices. Every index present in the image
/// must have an entry in `semantics`.
LabelMap load_label_map(const std::filesystem::path& path,
                        const LabelSemantics& semantics);

/// Debug export: the mask rendered as a 1-bit PNG for visual inspection.
void write_mask_png(const SkinMask& mask, const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG (test fixtures, synthetic renders).
void write_gray_png(const GrayImage& image, const std::filesystem::path& path);

}  // namespace facelight
