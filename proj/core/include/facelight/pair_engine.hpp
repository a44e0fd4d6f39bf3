#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facelight/brightness.hpp"
#include "facelight/embeddings.hpp"
#include "facelight/manifest.hpp"
#include "facelight/pair_stats.hpp"
#include "facelight/score_table.hpp"

namespace facelight {

enum class PairKind { Genuine, Impostor };

using IndexPair = std::pair<std::uint32_t, std::uint32_t>;

/// Streams every unordered pair of the requested kind exactly once, in
/// blocks, without materializing the O(N^2) list.
///   genuine  - distinct images sharing subject_id
///   impostor - images of different subjects within the same group
///              (plus cross-group pairs when `cross_group` is set)
class PairStream {
 public:
  PairStream(const std::vector<ImageRecord>& records, PairKind kind,
             bool cross_group = false);

  /// Fills `out` with up to `max_pairs` pairs; returns false when the
  /// stream is exhausted and `out` is empty.
  bool next_block(std::vector<IndexPair>& out, std::size_t max_pairs = 1 << 20);

  void reset();

 private:
  void advance();

  PairKind kind_;
  bool cross_group_ = false;
  std::vector<std::uint32_t> subject_of_;
  // genuine: images grouped per subject; impostor: images per group (with a
  // trailing all-images list when cross_group spans groups pairwise).
  std::vector<std::vector<std::uint32_t>> cells_;
  // cross-group impostor cell pairs (cell index a, cell index b)
  std::vector<std::pair<std::size_t, std::size_t>> cross_cells_;
  std::size_t cell_ = 0, cross_ = 0;
  std::size_t i_ = 0, j_ = 1;
  bool in_cross_phase_ = false;
};

/// Cosine similarity with double accumulation. Throws ValidationError on a
/// zero-norm vector or mismatched dims. When rows are pre-normalized the
/// engine skips the denominator; both routes agree within 1e-6.
double cosine_score(std::span<const float> x, std::span<const float> y);

struct EngineConfig {
  std::size_t block = 768;         // images per block edge
  unsigned threads = 0;            // 0 = all hardware threads
  double score_lo = -1.0;
  double score_hi = 1.0;
  std::size_t score_bins = 2000;
  bool cross_group = false;
};

/// Accumulated buckets for one run plus the skip tally. Pairs whose images
/// lack a category or an embedding row are skipped, counted, and a sample of
/// the offending ids is kept for diagnostics.
struct EngineResult {
  std::map<PairKey, PairStats> genuine;
  std::map<PairKey, PairStats> impostor;
  std::uint64_t skipped_pairs = 0;
  std::vector<std::string> skipped_ids;  // first few offenders
};

/// Category per record index; empty optional = image excluded upstream.
using Categories = std::vector<std::optional<ExposureCategory>>;

/// Scores every genuine and impostor pair from embeddings and buckets them
/// by (group, category pair). Data-parallel over rectangular index blocks;
/// block GEMM in double precision; counts are independent of the worker
/// count and sums are reproducible within 1e-9 relative.
EngineResult run_pair_engine(const std::vector<ImageRecord>& records,
                             const Categories& categories,
                             const EmbeddingStore& store,
                             double threshold,
                             const EngineConfig& config = {});

/// Same bucketing driven by a precomputed score table instead of embeddings.
/// Table pairs with unknown ids, identical subjects listed as impostors, or
/// missing categories are skipped and tallied.
EngineResult accumulate_score_table(const std::vector<ImageRecord>& records,
                                    const Categories& categories,
                                    const ScoreTable& table,
                                    double threshold,
                                    const EngineConfig& config = {});

/// Generic streaming accumulation over an explicit pair stream: each scored
/// pair lands in exactly one normalized bucket. Used by the score-table path
/// and as the reference route in oracle tests.
std::map<PairKey, PairStats> accumulate(
    PairStream& stream,
    const std::function<double(std::uint32_t, std::uint32_t)>& score_of,
    const std::vector<ImageRecord>& records,
    const Categories& categories,
    double threshold,
    const EngineConfig& config,
    std::uint64_t* skipped = nullptr,
    std::vector<std::string>* skipped_ids = nullptr);

/// Impostor scores of one group, collected for threshold calibration.
std::vector<double> collect_impostor_scores(
    const std::vector<ImageRecord>& records,
    const EmbeddingStore& store,
    const std::string& group,
    const EngineConfig& config = {});

std::vector<double> collect_impostor_scores(
    const std::vector<ImageRecord>& records,
    const ScoreTable& table,
    const std::string& group);

}  // namespace facelight
