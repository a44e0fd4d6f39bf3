#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace facelight {

/// One dataset row. `group` is the demographic label the audit is keyed on
/// (e.g. "CF", "CM", "AAF", "AAM").
struct ImageRecord {
  std::string image_id;
  std::string subject_id;
  std::string group;
  std::string image_path;
  std::string mask_path;
  std::optional<std::uint32_t> embedding_index;
};

/// Parses a manifest CSV with header
///   image_id,subject_id,group,image_path,mask_path[,embedding_index]
/// Row order is preserved. Throws ValidationError on a missing file,
/// malformed header, duplicate image_id (named, with both line numbers),
/// or an empty manifest.
///
/// When `allowed_groups` is non-empty, any record whose group is not in the
/// set is rejected.
std::vector<ImageRecord> load_manifest(
    const std::filesystem::path& path,
    const std::vector<std::string>& allowed_groups = {});

/// image_id -> index into the record vector. Throws on duplicates.
std::unordered_map<std::string, std::size_t> index_by_image_id(
    const std::vector<ImageRecord>& records);

/// Distinct groups in first-appearance order.
std::vector<std::string> distinct_groups(const std::vector<ImageRecord>& records);

}  // namespace facelight
