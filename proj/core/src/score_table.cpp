#include "facelight/score_table.hpp"

#include <charconv>
#include <unordered_set>

#include "facelight/errors.hpp"
#include "csv_util.hpp"

namespace facelight {

ScoreTable load_score_table(const std::filesystem::path& path) {
  auto in = detail::open_text(path, "score table");

  std::string header;
  if (!std::getline(in, header) ||
      detail::strip(header) != "image_id_a,image_id_b,score") {
    throw ValidationError("score table: malformed header in " + path.string() +
                          " (expected 'image_id_a,image_id_b,score')");
  }

  ScoreTable table;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::strip(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 3) {
      throw ValidationError("score table: line " + std::to_string(line_no) +
                            " has " + std::to_string(fields.size()) + " fields");
    }
    ScoreTable::Entry e;
    e.image_id_a = detail::strip(fields[0]);
    e.image_id_b = detail::strip(fields[1]);
    if (e.image_id_a == e.image_id_b) {
      throw ValidationError("score table: line " + std::to_string(line_no) +
                            " pairs image '" + e.image_id_a + "' with itself");
    }
    std::string sv = detail::strip(fields[2]);
    try {
      std::size_t used = 0;
      e.score = std::stod(sv, &used);
      if (used != sv.size()) throw std::invalid_argument(sv);
    } catch (const std::exception&) {
      throw ValidationError("score table: line " + std::to_string(line_no) +
                            " has a non-numeric score '" + sv + "'");
    }

    std::string key = e.image_id_a < e.image_id_b
                          ? e.image_id_a + "\x1f" + e.image_id_b
                          : e.image_id_b + "\x1f" + e.image_id_a;
    if (!seen.insert(std::move(key)).second) {
      throw ValidationError("score table: pair (" + e.image_id_a + ", " +
                            e.image_id_b + ") appears more than once (line " +
                            std::to_string(line_no) + ")");
    }
    table.entries.push_back(std::move(e));
  }
  return table;
}

}  // namespace facelight
