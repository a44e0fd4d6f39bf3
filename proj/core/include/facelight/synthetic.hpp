#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "facelight/brightness.hpp"
#include "facelight/embeddings.hpp"
#include "facelight/manifest.hpp"

namespace facelight {

/// Synthetic dataset generator with a planted brightness effect.
///
/// Brightness is drawn hierarchically (group mean -> subject mean -> image)
/// so images of one subject share an exposure tendency. Each embedding is
///
///   normalize( id_weight(b) * identity + shared_coeff * s(b) * common
///              + noise_weight(b) * noise )
///
/// with s(b) = (b - peak_center)/peak_halfwidth, a signed extremity in
/// roughly [-1, 1]. The identity term fades and the noise term grows as |s|
/// grows, and the `common` direction is shared by every image, so impostor
/// pairs on the same dark/bright side gain similarity while pairs on
/// opposite sides lose it. Information therefore peaks at `peak_center`,
/// which is what the audit is expected to recover.
///
/// The per-image histogram is a discretized normal around b whose spread
/// also fades with |s|, so the BIM peaks at `peak_center` too.
struct SynthConfig {
  std::uint64_t seed = 1;
  std::vector<std::string> group_names = {"G1", "G2", "G3", "G4"};
  std::vector<double> group_means = {150, 162, 175, 188};
  std::vector<double> group_sigmas = {32, 30, 28, 26};
  std::size_t subjects_per_group = 100;
  std::size_t images_per_subject = 12;
  double subject_sigma_fraction = 0.80;  // of the group sigma
  double image_sigma = 14.0;

  std::uint32_t dim = 64;
  double peak_center = 170.0;
  double peak_halfwidth = 110.0;
  double identity_base = 1.0;
  double identity_fade = 0.55;
  double shared_coeff = 0.90;
  double noise_base = 0.35;
  double noise_extra = 0.40;

  double hist_sigma_max = 45.0;
  double hist_sigma_fade = 0.80;
  std::uint32_t pixels_per_image = 4096;
};

struct SynthDataset {
  std::vector<ImageRecord> records;
  std::vector<std::optional<BrightnessProfile>> profiles;
  EmbeddingStore embeddings;
};

SynthDataset generate_synthetic(const SynthConfig& config);

/// Writes manifest.csv, profiles.csv, embeddings.bin and embeddings.ids
/// under `dir`; returns the manifest path. Profile rows carry no category
/// (the audit fits its own scheme).
std::filesystem::path write_synthetic(const SynthDataset& dataset,
                                      const std::filesystem::path& dir);

/// Renders each image as a flat-intensity PNG plus a matching label map so
/// the image pipeline itself can be exercised end-to-end: a skin block, two
/// eye pixels, a nose row, and skin below it that the cutoff must remove.
/// Rewrites image/mask paths in `dataset.records`; write the manifest after
/// rendering.
void render_synthetic_images(SynthDataset& dataset,
                             const std::filesystem::path& dir,
                             std::uint32_t width = 24,
                             std::uint32_t height = 24);

}  // namespace facelight
