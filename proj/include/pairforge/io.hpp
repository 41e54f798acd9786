#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pairforge/core.hpp"

namespace pairforge {

using json = nlohmann::json;

/// Writes `content` to a sibling temp file and renames it over `path`, so
/// readers never observe a partially written file.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Calls `fn(line_number, object)` for each non-blank line; line numbers are
/// 1-based. Malformed JSON raises ParseError naming the file and line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const json&)>& fn);

/// Streaming line reader that keeps track of line numbers.
class JsonlReader {
 public:
  explicit JsonlReader(const std::filesystem::path& path);

  /// Next parsed object, or nullopt at end of file.
  std::optional<json> next();
  std::size_t line_number() const noexcept { return line_no_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

[[noreturn]] void fail_at_line(const std::filesystem::path& path, std::size_t line,
                               const std::string& what);

/// One line of an EMB-JSONL file. `prompt_id` and `uri` are optional extension
/// fields used for generated-sample files; other unknown fields are ignored.
struct EmbeddingLine {
  Embedding embedding;
  std::optional<std::string> prompt_id;
  std::optional<std::string> uri;
};

/// Reads EMB-JSONL, normalizing every vector. `dim == 0` takes the dimension
/// from the first line; every line must then match it.
std::vector<EmbeddingLine> read_emb_jsonl(const std::filesystem::path& path, std::size_t dim);

std::string emb_jsonl_line(const EmbeddingLine& line);
void write_emb_jsonl(const std::filesystem::path& path, const std::vector<EmbeddingLine>& lines);

/// Required-field accessors that raise ParseError with context.
std::string get_string(const json& obj, std::string_view key);
double get_number(const json& obj, std::string_view key);
std::optional<std::string> get_optional_string(const json& obj, std::string_view key);
std::optional<double> get_optional_number(const json& obj, std::string_view key);

}  // namespace pairforge
