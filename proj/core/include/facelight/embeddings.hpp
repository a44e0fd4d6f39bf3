#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "facelight/manifest.hpp"

namespace facelight {

/// Dense float32 feature matrix plus the image ids its rows belong to.
///
/// On-disk matrix format (little-endian): magic "FLEB", u16 version (=1),
/// u32 dim, u64 count, then count*dim float32 values row-major. Ids live in
/// a sidecar text file, one image_id per line, same order as the rows.
struct EmbeddingStore {
  std::uint32_t dim = 0;
  std::vector<std::string> ids;
  std::vector<float> rows;  // count * dim, row-major
  bool normalized = false;

  std::size_t count() const { return ids.size(); }
  std::span<const float> row(std::size_t i) const {
    return {rows.data() + i * dim, dim};
  }
};

/// Loads the matrix + ids pair. With `normalize` every row is scaled to unit
/// Euclidean norm (within 1e-6). Throws ValidationError on magic/version
/// mismatch, count disagreement between the two files, or non-finite values
/// (the offending row is named).
EmbeddingStore load_embeddings(const std::filesystem::path& matrix_path,
                               const std::filesystem::path& ids_path,
                               bool normalize = true);

/// Writes the FLEB matrix and the ids sidecar. Round-trips bit-identically.
void save_embeddings(const EmbeddingStore& store,
                     const std::filesystem::path& matrix_path,
                     const std::filesystem::path& ids_path);

/// Binds manifest records to store rows. Explicit embedding_index values are
/// validated (in range, sidecar id agrees with the record); missing ones are
/// filled by id lookup. Store ids must be unique and every one must belong
/// to a manifest record.
void bind_embeddings(std::vector<ImageRecord>& records, const EmbeddingStore& store);

}  // namespace facelight
