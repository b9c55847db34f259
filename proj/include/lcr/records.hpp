#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lcr/error.hpp"

namespace lcr {

// All dataset files are line-delimited UTF-8 JSON records. Every record
// carries a mandatory "schema_version" field; readers reject records without
// one or with a version they do not understand.
inline constexpr int kSchemaVersion = 1;

inline nlohmann::json parse_record_line(const std::string& line,
                                        const std::string& context) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw_data(context + ": malformed record line");
  }
  if (!j.contains("schema_version") ||
      !j["schema_version"].is_number_integer()) {
    throw_data(context + ": record missing schema_version");
  }
  if (j["schema_version"].get<int>() != kSchemaVersion) {
    throw_data(context + ": unsupported schema_version");
  }
  return j;
}

// Streams records from `path`, one JSON object per line. Blank lines are
// skipped. Throws ErrorCode::kData on unreadable files or malformed records.
inline void for_each_record(const std::string& path,
                            const std::function<void(const nlohmann::json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    fn(parse_record_line(line, path));
  }
}

class RecordWriter {
 public:
  explicit RecordWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw_data("cannot open " + path + " for writing");
  }

  void write(nlohmann::json j) {
    j["schema_version"] = kSchemaVersion;
    out_ << j.dump() << '\n';
    if (!out_) throw_data("write failed");
  }

 private:
  std::ofstream out_;
};

}  // namespace lcr
