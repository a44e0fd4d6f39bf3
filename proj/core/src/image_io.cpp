#include "facelight/image_io.hpp"

#include <cmath>
#include <set>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "facelight/errors.hpp"

namespace facelight {

namespace {

cv::Mat read_raw(const std::filesystem::path& path, const char* what) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) {
    throw ValidationError(std::string(what) + ": cannot read " + path.string());
  }
  if (raw.depth() != CV_8U) {
    throw ValidationError(std::string(what) + ": unsupported bit depth in " +
                          path.string() + " (8-bit required)");
  }
  return raw;
}

}  // namespace

GrayImage load_gray_image(const std::filesystem::path& path) {
  cv::Mat raw = read_raw(path, "image");

  GrayImage img;
  img.width = static_cast<std::uint32_t>(raw.cols);
  img.height = static_cast<std::uint32_t>(raw.rows);
  img.pixels.resize(static_cast<std::size_t>(raw.cols) * raw.rows);

  if (raw.channels() == 1) {
    for (int r = 0; r < raw.rows; ++r) {
      const auto* src = raw.ptr<std::uint8_t>(r);
      std::copy(src, src + raw.cols, img.pixels.begin() + static_cast<std::size_t>(r) * raw.cols);
    }
    return img;
  }
  if (raw.channels() != 3 && raw.channels() != 4) {
    throw ValidationError("image: unsupported channel count in " + path.string());
  }

  // OpenCV decodes color as BGR(A); alpha, when present, is ignored.
  const int ch = raw.channels();
  for (int r = 0; r < raw.rows; ++r) {
    const std::uint8_t* src = raw.ptr<std::uint8_t>(r);
    auto* dst = img.pixels.data() + static_cast<std::size_t>(r) * raw.cols;
    for (int c = 0; c < raw.cols; ++c) {
      const double b = src[c * ch + 0];
      const double g = src[c * ch + 1];
      const double rr = src[c * ch + 2];
      dst[c] = static_cast<std::uint8_t>(
          std::lround(0.299 * rr + 0.587 * g + 0.114 * b));
    }
  }
  return img;
}

LabelMap load_label_map(const std::filesystem::path& path,
                        const LabelSemantics& semantics) {
  cv::Mat raw = read_raw(path, "label map");
  if (raw.channels() != 1) {
    throw ValidationError("label map: " + path.string() +
                          " must be single-channel 8-bit (region indices)");
  }

  LabelMap map;
  map.width = static_cast<std::uint32_t>(raw.cols);
  map.height = static_cast<std::uint32_t>(raw.rows);
  map.labels.resize(static_cast<std::size_t>(raw.cols) * raw.rows);
  map.semantics = semantics;
  for (int r = 0; r < raw.rows; ++r) {
    const auto* src = raw.ptr<std::uint8_t>(r);
    std::copy(src, src + raw.cols, map.labels.begin() + static_cast<std::size_t>(r) * raw.cols);
  }

  std::set<std::uint8_t> present(map.labels.begin(), map.labels.end());
  for (std::uint8_t idx : present) {
    if (!map.semantics.names.count(idx)) {
      throw ValidationError("label map: index " + std::to_string(idx) + " in " +
                            path.string() + " has no entry in the label semantics");
    }
  }
  return map;
}

void write_mask_png(const SkinMask& mask, const std::filesystem::path& path) {
  cv::Mat out(static_cast<int>(mask.height), static_cast<int>(mask.width), CV_8UC1);
  for (std::uint32_t r = 0; r < mask.height; ++r) {
    auto* dst = out.ptr<std::uint8_t>(static_cast<int>(r));
    for (std::uint32_t c = 0; c < mask.width; ++c) {
      dst[c] = mask.at(r, c) ? 255 : 0;
    }
  }
  if (!cv::imwrite(path.string(), out,
                   {cv::IMWRITE_PNG_BILEVEL, 1})) {
    throw ValidationError("mask export: cannot write " + path.string());
  }
}

void write_gray_png(const GrayImage& image, const std::filesystem::path& path) {
  cv::Mat out(static_cast<int>(image.height), static_cast<int>(image.width), CV_8UC1);
  for (std::uint32_t r = 0; r < image.height; ++r) {
    auto* dst = out.ptr<std::uint8_t>(static_cast<int>(r));
    for (std::uint32_t c = 0; c < image.width; ++c) {
      dst[c] = image.at(r, c);
    }
  }
  if (!cv::imwrite(path.string(), out)) {
    throw ValidationError("image export: cannot write " + path.string());
  }
}

}  // namespace facelight
