#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "facelight/brightness.hpp"
#include "facelight/image.hpp"
#include "facelight/manifest.hpp"
#include "facelight/skin_region.hpp"

namespace facelight::test {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    auto base = std::filesystem::temp_directory_path();
    path_ = base / ("facelight_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline GrayImage make_image(std::uint32_t w, std::uint32_t h, std::uint8_t fill = 0) {
  GrayImage img;
  img.width = w;
  img.height = h;
  img.pixels.assign(static_cast<std::size_t>(w) * h, fill);
  return img;
}

inline SkinMask full_mask(std::uint32_t w, std::uint32_t h) {
  SkinMask mask;
  mask.width = w;
  mask.height = h;
  mask.included.assign(static_cast<std::size_t>(w) * h, 1);
  mask.pixel_count = static_cast<std::uint64_t>(w) * h;
  return mask;
}

inline LabelMap make_label_map(std::uint32_t w, std::uint32_t h,
                               std::uint8_t fill = 0) {
  LabelMap map;
  map.width = w;
  map.height = h;
  map.labels.assign(static_cast<std::size_t>(w) * h, fill);
  map.semantics = default_label_semantics();
  return map;
}

inline ImageRecord make_record(std::string id, std::string subject, std::string group,
                               std::optional<std::uint32_t> emb = {}) {
  ImageRecord rec;
  rec.image_id = std::move(id);
  rec.subject_id = std::move(subject);
  rec.group = std::move(group);
  rec.image_path = "-";
  rec.mask_path = "-";
  rec.embedding_index = emb;
  return rec;
}

inline BrightnessProfile profile_at(std::string id, double fsb) {
  // A spike histogram at round(fsb) keeps the invariants approximately; for
  // tests that only consume .fsb the exact value below is what matters.
  BrightnessProfile p;
  p.image_id = std::move(id);
  p.fsb = fsb;
  p.bim = 0.0;
  return p;
}

}  // namespace facelight::test
