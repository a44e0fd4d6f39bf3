// Synthetic fixture generator: a dataset with a planted brightness effect,
// usable as audit input (manifest + profiles + embeddings, optionally
// rendered PNGs). See facelight/synthetic.hpp for the construction.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "facelight/errors.hpp"
#include "facelight/synthetic.hpp"

namespace fl = facelight;

int main(int argc, char** argv) {
  CLI::App app{"facelight-synth: generate a synthetic brightness-effect dataset"};

  std::string out_dir;
  fl::SynthConfig config;
  bool render = false;
  unsigned render_size = 24;

  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--seed", config.seed, "RNG seed (default 1)");
  app.add_option("--subjects", config.subjects_per_group,
                 "subjects per group (default 100)");
  app.add_option("--images", config.images_per_subject,
                 "images per subject (default 12)");
  app.add_option("--dim", config.dim, "embedding dimension (default 64)");
  app.add_option("--peak", config.peak_center,
                 "brightness of maximum information (default 170)");
  app.add_option("--means", config.group_means, "per-group brightness means")
      ->expected(-1);
  app.add_option("--sigmas", config.group_sigmas, "per-group brightness sigmas")
      ->expected(-1);
  app.add_option("--subject-sigma-frac", config.subject_sigma_fraction,
                 "between-subject share of the group sigma (default 0.8)");
  app.add_option("--image-sigma", config.image_sigma,
                 "within-subject brightness sigma (default 14)");
  app.add_flag("--render", render, "also write flat PNGs and label maps");
  app.add_option("--render-size", render_size, "rendered image edge (default 24)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto dataset = fl::generate_synthetic(config);
    if (render) {
      fl::render_synthetic_images(dataset, out_dir, render_size, render_size);
    }
    auto manifest = fl::write_synthetic(dataset, out_dir);
    std::cout << "wrote " << manifest.string() << " (" << dataset.records.size()
              << " images, " << config.group_names.size() << " groups)\n";
    return 0;
  } catch (const fl::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
