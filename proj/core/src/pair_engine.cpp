#include "facelight/pair_engine.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <thread>
#include <unordered_map>

#include "facelight/errors.hpp"

namespace facelight {

namespace {

constexpr std::size_t kCatPairCount = 15;  // unordered pairs of 5 categories
constexpr std::size_t kSkippedIdSample = 16;

// Canonical index of the unordered category pair (a, b) in [0, 15).
std::size_t catpair_index(std::uint8_t a, std::uint8_t b) {
  if (a > b) std::swap(a, b);
  return static_cast<std::size_t>(a) * 5 - a * (a - 1) / 2 + (b - a);
}

std::pair<ExposureCategory, ExposureCategory> catpair_from_index(std::size_t idx) {
  for (std::uint8_t a = 0; a < 5; ++a) {
    for (std::uint8_t b = a; b < 5; ++b) {
      if (catpair_index(a, b) == idx) {
        return {static_cast<ExposureCategory>(a), static_cast<ExposureCategory>(b)};
      }
    }
  }
  throw InternalError("bad category pair index");
}

std::uint64_t pairs_of(std::uint64_t n) { return n * (n - 1) / 2; }

// Bucket label of a pair: its group, or "A|B" in name order across groups.
std::string pair_group_label(const std::string& a, const std::string& b) {
  if (a == b) return a;
  const std::string& lo = a < b ? a : b;
  const std::string& hi = a < b ? b : a;
  std::string label;
  label.reserve(lo.size() + hi.size() + 1);
  label += lo;
  label += '|';
  label += hi;
  return label;
}

}  // namespace

// ---------------------------------------------------------------------------
// PairStream

PairStream::PairStream(const std::vector<ImageRecord>& records, PairKind kind,
                       bool cross_group)
    : kind_(kind), cross_group_(cross_group) {
  std::unordered_map<std::string, std::uint32_t> subject_index;
  subject_of_.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = subject_index.emplace(
        records[i].subject_id, static_cast<std::uint32_t>(subject_index.size()));
    subject_of_[i] = it->second;
  }

  std::unordered_map<std::string, std::size_t> cell_index;
  if (kind == PairKind::Genuine) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto [it, inserted] =
          cell_index.emplace(records[i].subject_id, cells_.size());
      if (inserted) cells_.emplace_back();
      cells_[it->second].push_back(static_cast<std::uint32_t>(i));
    }
  } else {
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto [it, inserted] = cell_index.emplace(records[i].group, cells_.size());
      if (inserted) cells_.emplace_back();
      cells_[it->second].push_back(static_cast<std::uint32_t>(i));
    }
    if (cross_group_) {
      for (std::size_t a = 0; a < cells_.size(); ++a) {
        for (std::size_t b = a + 1; b < cells_.size(); ++b) {
          cross_cells_.emplace_back(a, b);
        }
      }
    }
  }
  reset();
}

void PairStream::reset() {
  cell_ = 0;
  cross_ = 0;
  i_ = 0;
  j_ = 1;
  in_cross_phase_ = false;
}

bool PairStream::next_block(std::vector<IndexPair>& out, std::size_t max_pairs) {
  out.clear();
  while (out.size() < max_pairs) {
    if (!in_cross_phase_) {
      if (cell_ >= cells_.size()) {
        if (!cross_cells_.empty() && cross_ < cross_cells_.size()) {
          in_cross_phase_ = true;
          i_ = 0;
          j_ = 0;
          continue;
        }
        break;
      }
      const auto& cell = cells_[cell_];
      if (i_ + 1 >= cell.size()) {
        ++cell_;
        i_ = 0;
        j_ = 1;
        continue;
      }
      if (j_ >= cell.size()) {
        ++i_;
        j_ = i_ + 1;
        continue;
      }
      const std::uint32_t a = cell[i_];
      const std::uint32_t b = cell[j_];
      ++j_;
      if (kind_ == PairKind::Impostor && subject_of_[a] == subject_of_[b]) continue;
      out.emplace_back(a, b);
    } else {
      if (cross_ >= cross_cells_.size()) break;
      const auto& [ca, cb] = cross_cells_[cross_];
      const auto& left = cells_[ca];
      const auto& right = cells_[cb];
      if (i_ >= left.size()) {
        ++cross_;
        i_ = 0;
        j_ = 0;
        continue;
      }
      if (j_ >= right.size()) {
        ++i_;
        j_ = 0;
        continue;
      }
      const std::uint32_t a = left[i_];
      const std::uint32_t b = right[j_];
      ++j_;
      if (subject_of_[a] == subject_of_[b]) continue;
      out.emplace_back(a, b);
    }
  }
  return !out.empty();
}

// ---------------------------------------------------------------------------
// scoring

double cosine_score(std::span<const float> x, std::span<const float> y) {
  if (x.size() != y.size()) {
    throw ValidationError("cosine: dimension mismatch (" + std::to_string(x.size()) +
                          " vs " + std::to_string(y.size()) + ")");
  }
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += static_cast<double>(x[i]) * y[i];
    nx += static_cast<double>(x[i]) * x[i];
    ny += static_cast<double>(y[i]) * y[i];
  }
  if (nx == 0.0 || ny == 0.0) {
    throw ValidationError("cosine: zero-norm vector");
  }
  return dot / std::sqrt(nx * ny);
}

// ---------------------------------------------------------------------------
// blocked engine

namespace {

struct GroupData {
  std::string name;
  std::vector<std::uint32_t> rec;   // record index per member
  std::vector<std::uint32_t> subj;  // subject index per member
  std::vector<std::uint8_t> cat;    // category per member
  Eigen::MatrixXd emb;              // members x dim, unit rows
};

struct Task {
  std::size_t group_a, group_b;  // same for within-group tasks
  std::size_t row_block, col_block;
};

// Per-worker bucket accumulators, lazily allocated per group.
struct GroupAcc {
  std::array<std::array<PairStats, kCatPairCount>, 2> stats;  // [kind][catpair]
  GroupAcc(double lo, double hi, std::size_t bins) {
    for (auto& per_kind : stats) {
      for (auto& s : per_kind) s.score_histogram = ScoreHistogram(lo, hi, bins);
    }
  }
};

struct WorkerState {
  std::vector<std::unique_ptr<GroupAcc>> within;  // per group
  std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<GroupAcc>> cross;
  Eigen::MatrixXd score_block;
};

std::uint32_t subject_index_of(
    std::unordered_map<std::string, std::uint32_t>& table, const std::string& id) {
  auto [it, inserted] =
      table.emplace(id, static_cast<std::uint32_t>(table.size()));
  return it->second;
}

}  // namespace

EngineResult run_pair_engine(const std::vector<ImageRecord>& records,
                             const Categories& categories,
                             const EmbeddingStore& store,
                             double threshold,
                             const EngineConfig& config) {
  if (categories.size() != records.size()) {
    throw ValidationError("pair engine: category list does not match record count");
  }
  const std::size_t block = std::max<std::size_t>(1, config.block);

  // Subjects must not span groups; the pair-group of a genuine pair would be
  // ambiguous otherwise.
  std::unordered_map<std::string, std::uint32_t> subject_table;
  std::unordered_map<std::uint32_t, std::string> subject_group;
  for (const auto& rec : records) {
    const auto s = subject_index_of(subject_table, rec.subject_id);
    auto [it, inserted] = subject_group.emplace(s, rec.group);
    if (!inserted && it->second != rec.group) {
      throw ValidationError("pair engine: subject '" + rec.subject_id +
                            "' spans groups '" + it->second + "' and '" + rec.group + "'");
    }
  }

  EngineResult result;

  // Partition usable images per group; everything else feeds the skip tally.
  std::vector<GroupData> groups;
  std::unordered_map<std::string, std::size_t> group_index;
  std::unordered_map<std::string, std::uint64_t> full_count;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    ++full_count[rec.group];
    auto [it, inserted] = group_index.emplace(rec.group, groups.size());
    if (inserted) {
      groups.emplace_back();
      groups.back().name = rec.group;
    }
    bool usable = categories[i].has_value() && rec.embedding_index.has_value() &&
                  *rec.embedding_index < store.count();
    if (!usable) {
      if (result.skipped_ids.size() < kSkippedIdSample) {
        result.skipped_ids.push_back(rec.image_id);
      }
      continue;
    }
    auto& g = groups[it->second];
    g.rec.push_back(static_cast<std::uint32_t>(i));
    g.subj.push_back(subject_table.at(rec.subject_id));
    g.cat.push_back(static_cast<std::uint8_t>(*categories[i]));
  }

  // Gather unit-norm rows in double precision.
  const auto dim = static_cast<Eigen::Index>(store.dim);
  for (auto& g : groups) {
    g.emb.resize(static_cast<Eigen::Index>(g.rec.size()), dim);
    std::size_t kept = 0;
    for (std::size_t m = 0; m < g.rec.size(); ++m) {
      const auto row = store.row(*records[g.rec[m]].embedding_index);
      double norm_sq = 0.0;
      for (Eigen::Index d = 0; d < dim; ++d) {
        norm_sq += static_cast<double>(row[d]) * row[d];
      }
      if (norm_sq == 0.0) {
        if (result.skipped_ids.size() < kSkippedIdSample) {
          result.skipped_ids.push_back(records[g.rec[m]].image_id);
        }
        continue;
      }
      const double inv = store.normalized ? 1.0 : 1.0 / std::sqrt(norm_sq);
      for (Eigen::Index d = 0; d < dim; ++d) {
        g.emb(static_cast<Eigen::Index>(kept), d) = row[d] * inv;
      }
      g.rec[kept] = g.rec[m];
      g.subj[kept] = g.subj[m];
      g.cat[kept] = g.cat[m];
      ++kept;
    }
    g.rec.resize(kept);
    g.subj.resize(kept);
    g.cat.resize(kept);
    g.emb.conservativeResize(static_cast<Eigen::Index>(kept), dim);
  }

  // Arithmetic skip tally: every unordered pair that lost at least one image.
  for (const auto& g : groups) {
    result.skipped_pairs +=
        pairs_of(full_count.at(g.name)) - pairs_of(g.rec.size());
  }

  // Deterministic task list: within-group upper-triangle block pairs, then
  // cross-group rectangles when enabled.
  std::vector<Task> tasks;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const std::size_t nb = (groups[gi].rec.size() + block - 1) / block;
    for (std::size_t bi = 0; bi < nb; ++bi) {
      for (std::size_t bj = bi; bj < nb; ++bj) {
        tasks.push_back({gi, gi, bi, bj});
      }
    }
  }
  if (config.cross_group) {
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      for (std::size_t gj = gi + 1; gj < groups.size(); ++gj) {
        const std::size_t nbi = (groups[gi].rec.size() + block - 1) / block;
        const std::size_t nbj = (groups[gj].rec.size() + block - 1) / block;
        for (std::size_t bi = 0; bi < nbi; ++bi) {
          for (std::size_t bj = 0; bj < nbj; ++bj) {
            tasks.push_back({gi, gj, bi, bj});
          }
        }
        result.skipped_pairs += full_count.at(groups[gi].name) * full_count.at(groups[gj].name) -
                                groups[gi].rec.size() * groups[gj].rec.size();
      }
    }
  }

  unsigned thread_count = config.threads;
  if (thread_count == 0) {
    thread_count = std::max(1u, std::thread::hardware_concurrency());
  }
  thread_count = static_cast<unsigned>(
      std::min<std::size_t>(thread_count, std::max<std::size_t>(1, tasks.size())));

  std::vector<WorkerState> workers(thread_count);
  for (auto& w : workers) {
    w.within.resize(groups.size());
    w.score_block.resize(static_cast<Eigen::Index>(block),
                         static_cast<Eigen::Index>(block));
  }

  auto run_task = [&](WorkerState& w, const Task& task) {
    const auto& ga = groups[task.group_a];
    const auto& gb = groups[task.group_b];
    const std::size_t r0 = task.row_block * block;
    const std::size_t c0 = task.col_block * block;
    const std::size_t m = std::min(block, ga.rec.size() - r0);
    const std::size_t n = std::min(block, gb.rec.size() - c0);
    if (m == 0 || n == 0) return;

    auto S = w.score_block.topLeftCorner(static_cast<Eigen::Index>(m),
                                         static_cast<Eigen::Index>(n));
    S.noalias() = ga.emb.middleRows(static_cast<Eigen::Index>(r0),
                                    static_cast<Eigen::Index>(m)) *
                  gb.emb.middleRows(static_cast<Eigen::Index>(c0),
                                    static_cast<Eigen::Index>(n))
                      .transpose();

    GroupAcc* acc;
    if (task.group_a == task.group_b) {
      auto& slot = w.within[task.group_a];
      if (!slot) {
        slot = std::make_unique<GroupAcc>(config.score_lo, config.score_hi,
                                          config.score_bins);
      }
      acc = slot.get();
    } else {
      auto& slot = w.cross[{task.group_a, task.group_b}];
      if (!slot) {
        slot = std::make_unique<GroupAcc>(config.score_lo, config.score_hi,
                                          config.score_bins);
      }
      acc = slot.get();
    }

    const bool diagonal =
        task.group_a == task.group_b && task.row_block == task.col_block;
    for (std::size_t i = 0; i < m; ++i) {
      const std::uint32_t subj_i = ga.subj[r0 + i];
      const std::uint8_t cat_i = ga.cat[r0 + i];
      const std::size_t j_begin = diagonal ? i + 1 : 0;
      for (std::size_t j = j_begin; j < n; ++j) {
        const bool genuine = gb.subj[c0 + j] == subj_i;
        const std::size_t cp = catpair_index(cat_i, gb.cat[c0 + j]);
        acc->stats[genuine ? 0 : 1][cp].add(
            S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
            threshold);
      }
    }
  };

  if (thread_count == 1) {
    for (const auto& task : tasks) run_task(workers[0], task);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (unsigned w = 0; w < thread_count; ++w) {
      pool.emplace_back([&, w] {
        // Static round-robin keeps the per-worker merge order fixed.
        for (std::size_t t = w; t < tasks.size(); t += thread_count) {
          run_task(workers[w], tasks[t]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  // Merge worker results in worker order, then surface non-empty buckets.
  auto emit = [&](const std::string& label, const GroupAcc& acc) {
    for (std::size_t kind = 0; kind < 2; ++kind) {
      for (std::size_t cp = 0; cp < kCatPairCount; ++cp) {
        const auto& s = acc.stats[kind][cp];
        if (s.pair_count == 0) continue;
        auto [ca, cb] = catpair_from_index(cp);
        PairKey key(label, ca, cb);
        auto& dst = kind == 0 ? result.genuine : result.impostor;
        auto it = dst.find(key);
        if (it == dst.end()) {
          dst.emplace(std::move(key), s);
        } else {
          it->second.merge(s);
        }
      }
    }
  };
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (const auto& w : workers) {
      if (w.within[gi]) emit(groups[gi].name, *w.within[gi]);
    }
  }
  if (config.cross_group) {
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      for (std::size_t gj = gi + 1; gj < groups.size(); ++gj) {
        const std::string label = pair_group_label(groups[gi].name, groups[gj].name);
        for (const auto& w : workers) {
          auto it = w.cross.find({gi, gj});
          if (it != w.cross.end()) emit(label, *it->second);
        }
      }
    }
  }
  return result;
}

std::map<PairKey, PairStats> accumulate(
    PairStream& stream,
    const std::function<double(std::uint32_t, std::uint32_t)>& score_of,
    const std::vector<ImageRecord>& records,
    const Categories& categories,
    double threshold,
    const EngineConfig& config,
    std::uint64_t* skipped,
    std::vector<std::string>* skipped_ids) {
  std::map<PairKey, PairStats> buckets;
  std::vector<IndexPair> blockbuf;
  while (stream.next_block(blockbuf)) {
    for (const auto& [a, b] : blockbuf) {
      if (!categories[a] || !categories[b]) {
        if (skipped) ++*skipped;
        if (skipped_ids && skipped_ids->size() < kSkippedIdSample) {
          skipped_ids->push_back(!categories[a] ? records[a].image_id
                                                : records[b].image_id);
        }
        continue;
      }
      PairKey key(pair_group_label(records[a].group, records[b].group),
                  *categories[a], *categories[b]);
      auto it = buckets.find(key);
      if (it == buckets.end()) {
        PairStats fresh;
        fresh.score_histogram =
            ScoreHistogram(config.score_lo, config.score_hi, config.score_bins);
        it = buckets.emplace(std::move(key), std::move(fresh)).first;
      }
      it->second.add(score_of(a, b), threshold);
    }
  }
  return buckets;
}

EngineResult accumulate_score_table(const std::vector<ImageRecord>& records,
                                    const Categories& categories,
                                    const ScoreTable& table,
                                    double threshold,
                                    const EngineConfig& config) {
  if (categories.size() != records.size()) {
    throw ValidationError("pair engine: category list does not match record count");
  }
  auto index = index_by_image_id(records);

  EngineResult result;
  auto bucket_of = [&](std::map<PairKey, PairStats>& dst, PairKey key) -> PairStats& {
    auto it = dst.find(key);
    if (it == dst.end()) {
      PairStats fresh;
      fresh.score_histogram =
          ScoreHistogram(config.score_lo, config.score_hi, config.score_bins);
      it = dst.emplace(std::move(key), std::move(fresh)).first;
    }
    return it->second;
  };

  for (const auto& entry : table.entries) {
    auto ia = index.find(entry.image_id_a);
    auto ib = index.find(entry.image_id_b);
    if (ia == index.end() || ib == index.end()) {
      ++result.skipped_pairs;
      if (result.skipped_ids.size() < kSkippedIdSample) {
        result.skipped_ids.push_back(ia == index.end() ? entry.image_id_a
                                                       : entry.image_id_b);
      }
      continue;
    }
    const std::size_t a = ia->second, b = ib->second;
    if (!categories[a] || !categories[b]) {
      ++result.skipped_pairs;
      if (result.skipped_ids.size() < kSkippedIdSample) {
        result.skipped_ids.push_back(!categories[a] ? records[a].image_id
                                                    : records[b].image_id);
      }
      continue;
    }
    const bool genuine = records[a].subject_id == records[b].subject_id;
    const std::string& ga = records[a].group;
    const std::string& gb = records[b].group;
    if (ga != gb && (genuine || !config.cross_group)) {
      ++result.skipped_pairs;
      if (result.skipped_ids.size() < kSkippedIdSample) {
        result.skipped_ids.push_back(records[a].image_id);
      }
      continue;
    }
    PairKey key(pair_group_label(ga, gb), *categories[a], *categories[b]);
    bucket_of(genuine ? result.genuine : result.impostor, std::move(key))
        .add(entry.score, threshold);
  }
  return result;
}

std::vector<double> collect_impostor_scores(
    const std::vector<ImageRecord>& records,
    const EmbeddingStore& store,
    const std::string& group,
    const EngineConfig& config) {
  const std::size_t block = std::max<std::size_t>(1, config.block);

  std::unordered_map<std::string, std::uint32_t> subject_table;
  std::vector<std::uint32_t> members, subj;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].group != group) continue;
    if (!records[i].embedding_index || *records[i].embedding_index >= store.count()) {
      continue;
    }
    members.push_back(static_cast<std::uint32_t>(i));
    subj.push_back(subject_index_of(subject_table, records[i].subject_id));
  }

  const auto dim = static_cast<Eigen::Index>(store.dim);
  Eigen::MatrixXd emb(static_cast<Eigen::Index>(members.size()), dim);
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto row = store.row(*records[members[m]].embedding_index);
    double norm_sq = 0.0;
    for (Eigen::Index d = 0; d < dim; ++d) {
      norm_sq += static_cast<double>(row[d]) * row[d];
    }
    if (norm_sq == 0.0) {
      throw ValidationError("calibration: zero-norm embedding for image '" +
                            records[members[m]].image_id + "'");
    }
    const double inv = store.normalized ? 1.0 : 1.0 / std::sqrt(norm_sq);
    for (Eigen::Index d = 0; d < dim; ++d) {
      emb(static_cast<Eigen::Index>(m), d) = row[d] * inv;
    }
  }

  std::vector<double> scores;
  scores.reserve(pairs_of(members.size()));
  const std::size_t nb = (members.size() + block - 1) / block;
  Eigen::MatrixXd S(static_cast<Eigen::Index>(block), static_cast<Eigen::Index>(block));
  for (std::size_t bi = 0; bi < nb; ++bi) {
    for (std::size_t bj = bi; bj < nb; ++bj) {
      const std::size_t r0 = bi * block, c0 = bj * block;
      const std::size_t m = std::min(block, members.size() - r0);
      const std::size_t n = std::min(block, members.size() - c0);
      auto blk = S.topLeftCorner(static_cast<Eigen::Index>(m),
                                 static_cast<Eigen::Index>(n));
      blk.noalias() = emb.middleRows(static_cast<Eigen::Index>(r0),
                                     static_cast<Eigen::Index>(m)) *
                      emb.middleRows(static_cast<Eigen::Index>(c0),
                                     static_cast<Eigen::Index>(n))
                          .transpose();
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j_begin = bi == bj ? i + 1 : 0;
        for (std::size_t j = j_begin; j < n; ++j) {
          if (subj[r0 + i] == subj[c0 + j]) continue;
          scores.push_back(blk(static_cast<Eigen::Index>(i),
                               static_cast<Eigen::Index>(j)));
        }
      }
    }
  }
  return scores;
}

std::vector<double> collect_impostor_scores(
    const std::vector<ImageRecord>& records,
    const ScoreTable& table,
    const std::string& group) {
  auto index = index_by_image_id(records);
  std::vector<double> scores;
  for (const auto& entry : table.entries) {
    auto ia = index.find(entry.image_id_a);
    auto ib = index.find(entry.image_id_b);
    if (ia == index.end() || ib == index.end()) continue;
    const auto& ra = records[ia->second];
    const auto& rb = records[ib->second];
    if (ra.group != group || rb.group != group) continue;
    if (ra.subject_id == rb.subject_id) continue;
    scores.push_back(entry.score);
  }
  return scores;
}

}  // namespace facelight
