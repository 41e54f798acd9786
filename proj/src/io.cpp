#include "pairforge/io.hpp"

#include <cmath>
#include <sstream>

namespace pairforge {

namespace fs = std::filesystem;

void atomic_write(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail(ErrorKind::IoError, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::IoError, "cannot rename onto '" + path.string() + "': " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void fail_at_line(const fs::path& path, std::size_t line, const std::string& what) {
  fail(ErrorKind::ParseError, path.string() + ":" + std::to_string(line) + ": " + what);
}

JsonlReader::JsonlReader(const fs::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
}

std::optional<json> JsonlReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      json obj = json::parse(line);
      if (!obj.is_object()) fail_at_line(path_, line_no_, "expected a JSON object");
      return obj;
    } catch (const json::exception& e) {
      fail_at_line(path_, line_no_, std::string("malformed JSON: ") + e.what());
    }
  }
  return std::nullopt;
}

void for_each_jsonl(const fs::path& path, const std::function<void(std::size_t, const json&)>& fn) {
  JsonlReader reader(path);
  while (auto obj = reader.next()) {
    try {
      fn(reader.line_number(), *obj);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ParseError || e.kind() == ErrorKind::ZeroVector ||
          e.kind() == ErrorKind::DimensionMismatch) {
        throw Error(e.kind(), path.string() + ":" + std::to_string(reader.line_number()) + ": " +
                                  e.what());
      }
      throw;
    }
  }
}

std::string get_string(const json& obj, std::string_view key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    fail(ErrorKind::ParseError, "missing or non-string field '" + std::string(key) + "'");
  }
  return it->get<std::string>();
}

double get_number(const json& obj, std::string_view key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    fail(ErrorKind::ParseError, "missing or non-numeric field '" + std::string(key) + "'");
  }
  return it->get<double>();
}

std::optional<std::string> get_optional_string(const json& obj, std::string_view key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail(ErrorKind::ParseError, "field '" + std::string(key) + "' is not a string");
  return it->get<std::string>();
}

std::optional<double> get_optional_number(const json& obj, std::string_view key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) fail(ErrorKind::ParseError, "field '" + std::string(key) + "' is not a number");
  return it->get<double>();
}

std::vector<EmbeddingLine> read_emb_jsonl(const fs::path& path, std::size_t dim) {
  std::vector<EmbeddingLine> out;
  for_each_jsonl(path, [&](std::size_t, const json& obj) {
    auto id = get_string(obj, "id");
    auto kind = embedding_kind_from_string(get_string(obj, "kind"));
    auto it = obj.find("vector");
    if (it == obj.end() || !it->is_array()) fail(ErrorKind::ParseError, "missing array field 'vector'");
    std::vector<double> raw;
    raw.reserve(it->size());
    for (const auto& v : *it) {
      if (!v.is_number()) fail(ErrorKind::ParseError, "non-numeric vector entry");
      raw.push_back(v.get<double>());
    }
    if (dim == 0) dim = raw.size();
    if (raw.size() != dim) {
      fail(ErrorKind::DimensionMismatch, "vector '" + id + "' has " + std::to_string(raw.size()) +
                                             " entries, expected " + std::to_string(dim));
    }
    out.push_back({make_embedding(std::move(id), kind, raw), get_optional_string(obj, "prompt_id"),
                   get_optional_string(obj, "uri")});
  });
  return out;
}

std::string emb_jsonl_line(const EmbeddingLine& line) {
  json obj = {{"id", line.embedding.id},
              {"kind", std::string(to_string(line.embedding.kind))},
              {"vector", line.embedding.vector}};
  if (line.prompt_id) obj["prompt_id"] = *line.prompt_id;
  if (line.uri) obj["uri"] = *line.uri;
  return obj.dump();
}

void write_emb_jsonl(const fs::path& path, const std::vector<EmbeddingLine>& lines) {
  std::string buf;
  for (const auto& l : lines) {
    buf += emb_jsonl_line(l);
    buf += '\n';
  }
  atomic_write(path, buf);
}

}  // namespace pairforge
