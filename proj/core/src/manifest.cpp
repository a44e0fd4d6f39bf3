#include "facelight/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_set>

#include "facelight/errors.hpp"
#include "csv_util.hpp"

namespace facelight {

namespace {

constexpr const char* kBaseHeader = "image_id,subject_id,group,image_path,mask_path";

}  // namespace

std::vector<ImageRecord> load_manifest(const std::filesystem::path& path,
                                       const std::vector<std::string>& allowed_groups) {
  auto in = detail::open_text(path, "manifest");

  std::string header;
  if (!std::getline(in, header)) {
    throw ValidationError("manifest: empty file " + path.string());
  }
  header = detail::strip(header);
  bool with_embedding = false;
  if (header == kBaseHeader) {
    with_embedding = false;
  } else if (header == std::string(kBaseHeader) + ",embedding_index") {
    with_embedding = true;
  } else {
    throw ValidationError("manifest: malformed header in " + path.string() +
                          " (expected '" + kBaseHeader + "[,embedding_index]', got '" +
                          header + "')");
  }

  std::vector<ImageRecord> records;
  std::unordered_map<std::string, std::size_t> first_line;  // image_id -> line no
  std::unordered_set<std::string> allowed(allowed_groups.begin(), allowed_groups.end());

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::strip(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    const std::size_t expected = with_embedding ? 6 : 5;
    if (fields.size() != expected && !(with_embedding && fields.size() == 5)) {
      throw ValidationError("manifest: line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(expected));
    }

    ImageRecord rec;
    rec.image_id = detail::strip(fields[0]);
    rec.subject_id = detail::strip(fields[1]);
    rec.group = detail::strip(fields[2]);
    rec.image_path = detail::strip(fields[3]);
    rec.mask_path = detail::strip(fields[4]);
    if (rec.image_id.empty() || rec.subject_id.empty() || rec.group.empty()) {
      throw ValidationError("manifest: line " + std::to_string(line_no) +
                            " has an empty image_id/subject_id/group");
    }
    if (with_embedding && fields.size() == 6) {
      std::string idx = detail::strip(fields[5]);
      if (!idx.empty()) {
        std::uint32_t value = 0;
        auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), value);
        if (ec != std::errc() || ptr != idx.data() + idx.size()) {
          throw ValidationError("manifest: line " + std::to_string(line_no) +
                                " has a non-integer embedding_index '" + idx + "'");
        }
        rec.embedding_index = value;
      }
    }
    if (!allowed.empty() && !allowed.count(rec.group)) {
      throw ValidationError("manifest: line " + std::to_string(line_no) + " group '" +
                            rec.group + "' is not among the declared groups");
    }

    auto [it, inserted] = first_line.emplace(rec.image_id, line_no);
    if (!inserted) {
      throw ValidationError("manifest: duplicate image_id '" + rec.image_id +
                            "' on lines " + std::to_string(it->second) + " and " +
                            std::to_string(line_no));
    }
    records.push_back(std::move(rec));
  }

  if (records.empty()) {
    throw ValidationError("manifest: no data rows in " + path.string());
  }
  return records;
}

std::unordered_map<std::string, std::size_t> index_by_image_id(
    const std::vector<ImageRecord>& records) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = index.emplace(records[i].image_id, i);
    if (!inserted) {
      throw ValidationError("duplicate image_id '" + records[i].image_id + "'");
    }
  }
  return index;
}

std::vector<std::string> distinct_groups(const std::vector<ImageRecord>& records) {
  std::vector<std::string> groups;
  for (const auto& rec : records) {
    if (std::find(groups.begin(), groups.end(), rec.group) == groups.end()) {
      groups.push_back(rec.group);
    }
  }
  return groups;
}

}  // namespace facelight
