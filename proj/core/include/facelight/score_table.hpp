#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace facelight {

/// Precomputed matcher scores, an alternative input to embeddings.
/// Each unordered image pair appears at most once and a != b.
struct ScoreTable {
  struct Entry {
    std::string image_id_a;
    std::string image_id_b;
    double score = 0.0;
  };
  std::vector<Entry> entries;
};

/// Parses a `image_id_a,image_id_b,score` CSV (with that header).
ScoreTable load_score_table(const std::filesystem::path& path);

}  // namespace facelight
