#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "facelight/errors.hpp"

namespace facelight::detail {

// Plain comma splitting; fields in our formats never contain commas.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::ifstream open_text(const std::filesystem::path& path,
                               const char* what) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError(std::string(what) + ": cannot open " + path.string());
  }
  return in;
}

}  // namespace facelight::detail
