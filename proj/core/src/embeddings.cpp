#include "facelight/embeddings.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "facelight/errors.hpp"
#include "csv_util.hpp"

static_assert(std::endian::native == std::endian::little,
              "FLEB matrix I/O assumes a little-endian host");

namespace facelight {

namespace {

constexpr char kMagic[4] = {'F', 'L', 'E', 'B'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void read_value(std::ifstream& in, T& value, const char* what) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError(std::string("embeddings: truncated ") + what);
}

}  // namespace

EmbeddingStore load_embeddings(const std::filesystem::path& matrix_path,
                               const std::filesystem::path& ids_path,
                               bool normalize) {
  std::ifstream in(matrix_path, std::ios::binary);
  if (!in) {
    throw ValidationError("embeddings: cannot open " + matrix_path.string());
  }

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError("embeddings: bad magic in " + matrix_path.string() +
                          " (expected FLEB)");
  }
  std::uint16_t version = 0;
  read_value(in, version, "version");
  if (version != kVersion) {
    throw ValidationError("embeddings: unsupported version " +
                          std::to_string(version) + " in " + matrix_path.string());
  }

  EmbeddingStore store;
  std::uint64_t count = 0;
  read_value(in, store.dim, "dim");
  read_value(in, count, "count");
  if (store.dim == 0) {
    throw ValidationError("embeddings: dim is zero in " + matrix_path.string());
  }

  store.rows.resize(count * store.dim);
  in.read(reinterpret_cast<char*>(store.rows.data()),
          static_cast<std::streamsize>(store.rows.size() * sizeof(float)));
  if (!in) {
    throw ValidationError("embeddings: matrix data truncated in " +
                          matrix_path.string());
  }

  auto ids_in = detail::open_text(ids_path, "embedding ids");
  std::string line;
  while (std::getline(ids_in, line)) {
    line = detail::strip(line);
    if (!line.empty()) store.ids.push_back(line);
  }
  if (store.ids.size() != count) {
    throw ValidationError("embeddings: matrix declares " + std::to_string(count) +
                          " rows but ids file has " + std::to_string(store.ids.size()) +
                          " lines");
  }

  for (std::size_t i = 0; i < count; ++i) {
    const float* row = store.rows.data() + i * store.dim;
    for (std::uint32_t d = 0; d < store.dim; ++d) {
      if (!std::isfinite(row[d])) {
        throw ValidationError("embeddings: non-finite value in row " +
                              std::to_string(i) + " (id '" + store.ids[i] + "')");
      }
    }
  }

  if (normalize) {
    for (std::size_t i = 0; i < count; ++i) {
      float* row = store.rows.data() + i * store.dim;
      double norm_sq = 0.0;
      for (std::uint32_t d = 0; d < store.dim; ++d) {
        norm_sq += static_cast<double>(row[d]) * row[d];
      }
      if (norm_sq == 0.0) {
        throw ValidationError("embeddings: zero-norm row " + std::to_string(i) +
                              " (id '" + store.ids[i] + "') cannot be normalized");
      }
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (std::uint32_t d = 0; d < store.dim; ++d) {
        row[d] = static_cast<float>(row[d] * inv);
      }
    }
    store.normalized = true;
  }
  return store;
}

void save_embeddings(const EmbeddingStore& store,
                     const std::filesystem::path& matrix_path,
                     const std::filesystem::path& ids_path) {
  std::ofstream out(matrix_path, std::ios::binary);
  if (!out) {
    throw ValidationError("embeddings: cannot write " + matrix_path.string());
  }
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  out.write(reinterpret_cast<const char*>(&store.dim), sizeof(store.dim));
  const std::uint64_t count = store.count();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(store.rows.data()),
            static_cast<std::streamsize>(store.rows.size() * sizeof(float)));
  if (!out) {
    throw ValidationError("embeddings: write failed for " + matrix_path.string());
  }

  std::ofstream ids_out(ids_path);
  if (!ids_out) {
    throw ValidationError("embeddings: cannot write " + ids_path.string());
  }
  for (const auto& id : store.ids) ids_out << id << '\n';
}

void bind_embeddings(std::vector<ImageRecord>& records, const EmbeddingStore& store) {
  auto by_id = index_by_image_id(records);

  std::unordered_map<std::string, std::uint32_t> row_of;
  row_of.reserve(store.count());
  for (std::size_t i = 0; i < store.count(); ++i) {
    auto [it, inserted] = row_of.emplace(store.ids[i], static_cast<std::uint32_t>(i));
    if (!inserted) {
      throw ValidationError("embeddings: duplicate id '" + store.ids[i] +
                            "' in the ids sidecar");
    }
    if (!by_id.count(store.ids[i])) {
      throw ValidationError("embeddings: id '" + store.ids[i] +
                            "' has no manifest record");
    }
  }

  for (auto& rec : records) {
    if (rec.embedding_index) {
      if (*rec.embedding_index >= store.count()) {
        throw ValidationError("manifest: image '" + rec.image_id +
                              "' embedding_index " +
                              std::to_string(*rec.embedding_index) +
                              " is outside the store (count " +
                              std::to_string(store.count()) + ")");
      }
      if (store.ids[*rec.embedding_index] != rec.image_id) {
        throw ValidationError("manifest: image '" + rec.image_id +
                              "' embedding_index " +
                              std::to_string(*rec.embedding_index) +
                              " points at id '" + store.ids[*rec.embedding_index] + "'");
      }
    } else if (auto it = row_of.find(rec.image_id); it != row_of.end()) {
      rec.embedding_index = it->second;
    }
  }
}

}  // namespace facelight
