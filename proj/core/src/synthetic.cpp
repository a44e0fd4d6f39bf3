#include "facelight/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "facelight/errors.hpp"
#include "facelight/image_io.hpp"

namespace facelight {

namespace {

std::vector<double> unit_gaussian_vector(std::mt19937_64& rng, std::uint32_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm_sq = 0.0;
  for (auto& x : v) {
    x = normal(rng);
    norm_sq += x * x;
  }
  if (norm_sq == 0.0) {
    v[0] = 1.0;
    norm_sq = 1.0;
  }
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (auto& x : v) x *= inv;
  return v;
}

}  // namespace

SynthDataset generate_synthetic(const SynthConfig& config) {
  const auto n_groups = config.group_names.size();
  if (n_groups == 0 || config.group_means.size() != n_groups ||
      config.group_sigmas.size() != n_groups) {
    throw ValidationError("synthetic: group names/means/sigmas must align");
  }
  if (config.subjects_per_group == 0 || config.images_per_subject == 0) {
    throw ValidationError("synthetic: need at least one subject and image");
  }
  if (config.dim < 2) throw ValidationError("synthetic: dim must be >= 2");

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto common = unit_gaussian_vector(rng, config.dim);

  SynthDataset out;
  out.embeddings.dim = config.dim;
  out.embeddings.normalized = true;

  const auto total_images = n_groups * config.subjects_per_group *
                            config.images_per_subject;
  out.records.reserve(total_images);
  out.profiles.reserve(total_images);
  out.embeddings.rows.reserve(total_images * config.dim);
  out.embeddings.ids.reserve(total_images);

  std::vector<double> row(config.dim);
  for (std::size_t g = 0; g < n_groups; ++g) {
    for (std::size_t s = 0; s < config.subjects_per_group; ++s) {
      const std::string subject_id =
          config.group_names[g] + "_s" + std::to_string(s);
      const auto identity = unit_gaussian_vector(rng, config.dim);
      const double subject_mean =
          config.group_means[g] +
          normal(rng) * config.group_sigmas[g] * config.subject_sigma_fraction;

      for (std::size_t k = 0; k < config.images_per_subject; ++k) {
        const std::string image_id = subject_id + "_i" + std::to_string(k);
        const double b =
            std::clamp(subject_mean + normal(rng) * config.image_sigma, 2.0, 253.0);

        // Signed extremity relative to the information peak.
        const double s_raw = (b - config.peak_center) / config.peak_halfwidth;
        const double s_used = std::clamp(s_raw, -1.2, 1.2);
        const double e = std::min(std::abs(s_raw), 1.0);

        const double id_w = config.identity_base * (1.0 - config.identity_fade * e);
        const double sh_w = config.shared_coeff * s_used;
        const double nz_w = config.noise_base + config.noise_extra * e;

        const auto eta = unit_gaussian_vector(rng, config.dim);
        double norm_sq = 0.0;
        for (std::uint32_t d = 0; d < config.dim; ++d) {
          row[d] = id_w * identity[d] + sh_w * common[d] + nz_w * eta[d];
          norm_sq += row[d] * row[d];
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::uint32_t d = 0; d < config.dim; ++d) {
          out.embeddings.rows.push_back(static_cast<float>(row[d] * inv));
        }
        out.embeddings.ids.push_back(image_id);

        // Pixel histogram: a discretized normal whose spread fades with
        // extremity, so per-image BIM also peaks at peak_center.
        const double sigma_pix =
            std::max(2.0, config.hist_sigma_max * (1.0 - config.hist_sigma_fade * e));
        BrightnessHistogram hist;
        std::normal_distribution<double> pixel(b, sigma_pix);
        for (std::uint32_t p = 0; p < config.pixels_per_image; ++p) {
          const double v = std::clamp(pixel(rng), 0.0, 255.0);
          hist.add(static_cast<std::uint8_t>(std::lround(v)));
        }

        ImageRecord rec;
        rec.image_id = image_id;
        rec.subject_id = subject_id;
        rec.group = config.group_names[g];
        rec.image_path = "-";
        rec.mask_path = "-";
        rec.embedding_index = static_cast<std::uint32_t>(out.records.size());
        out.records.push_back(std::move(rec));
        out.profiles.emplace_back(profile_from_histogram(image_id, hist));
      }
    }
  }
  return out;
}

std::filesystem::path write_synthetic(const SynthDataset& dataset,
                                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  auto manifest_path = dir / "manifest.csv";
  {
    std::ofstream out(manifest_path);
    if (!out) {
      throw ValidationError("synthetic: cannot write " + manifest_path.string());
    }
    out << "image_id,subject_id,group,image_path,mask_path,embedding_index\n";
    for (const auto& rec : dataset.records) {
      out << rec.image_id << ',' << rec.subject_id << ',' << rec.group << ','
          << rec.image_path << ',' << rec.mask_path << ',';
      if (rec.embedding_index) out << *rec.embedding_index;
      out << '\n';
    }
  }

  write_profiles_csv(dir / "profiles.csv", dataset.records, dataset.profiles,
                     std::nullopt);
  save_embeddings(dataset.embeddings, dir / "embeddings.bin", dir / "embeddings.ids");
  return manifest_path;
}

void render_synthetic_images(SynthDataset& dataset,
                             const std::filesystem::path& dir,
                             std::uint32_t width, std::uint32_t height) {
  if (width < 8 || height < 8) {
    throw ValidationError("synthetic render: images must be at least 8x8");
  }
  const auto img_dir = dir / "img";
  const auto mask_dir = dir / "mask";
  std::filesystem::create_directories(img_dir);
  std::filesystem::create_directories(mask_dir);

  // One shared label map: a skin block with two eye pixels and a nose row
  // near the bottom; everything below the nose is skin that the mask rules
  // must cut off.
  const std::uint32_t nose_row = height * 2 / 3;
  LabelMap labels;
  labels.width = width;
  labels.height = height;
  labels.labels.assign(static_cast<std::size_t>(width) * height, 0);
  labels.semantics = default_label_semantics();
  auto put = [&](std::uint32_t r, std::uint32_t c, std::uint8_t v) {
    labels.labels[static_cast<std::size_t>(r) * width + c] = v;
  };
  for (std::uint32_t r = 1; r + 1 < height; ++r) {
    for (std::uint32_t c = 2; c + 2 < width; ++c) put(r, c, 1);
  }
  put(height / 4, width / 4, 4);            // left_eye
  put(height / 4, width - width / 4, 5);    // right_eye
  put(nose_row, width / 2 - 1, 10);
  put(nose_row, width / 2, 10);

  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    auto& rec = dataset.records[i];
    const double fsb = dataset.profiles[i] ? dataset.profiles[i]->fsb : 128.0;
    const auto v = static_cast<std::uint8_t>(
        std::clamp<long>(std::lround(fsb), 0, 255));

    GrayImage img;
    img.width = width;
    img.height = height;
    img.pixels.assign(static_cast<std::size_t>(width) * height, v);

    const auto img_path = img_dir / (rec.image_id + ".png");
    const auto mask_path = mask_dir / (rec.image_id + ".png");
    write_gray_png(img, img_path);

    GrayImage label_img;
    label_img.width = width;
    label_img.height = height;
    label_img.pixels = labels.labels;
    write_gray_png(label_img, mask_path);

    rec.image_path = img_path.string();
    rec.mask_path = mask_path.string();
  }
}

}  // namespace facelight
