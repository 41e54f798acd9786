#include <doctest.h>

#include <fstream>

#include "pairforge/io.hpp"
#include "support.hpp"

using namespace pairforge;
using testsupport::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

std::string error_text(auto&& fn, ErrorKind expected) {
  try {
    fn();
  } catch (const Error& e) {
    CHECK(e.kind() == expected);
    return e.what();
  }
  FAIL("expected an error");
  return {};
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("atomic_write replaces content and leaves no temp file") {
    TempDir dir;
    const auto p = dir / "nested/out.txt";
    atomic_write(p, "first");
    atomic_write(p, "second");
    CHECK(read_file(p) == "second");
    CHECK_FALSE(std::filesystem::exists(dir / "nested/out.txt.tmp"));
  }

  TEST_CASE("EMB-JSONL round trip keeps doubles exactly") {
    TempDir dir;
    SeededRng rng(3);
    std::vector<EmbeddingLine> lines;
    for (int i = 0; i < 20; ++i) {
      EmbeddingLine l{testsupport::random_embedding(rng, "e" + std::to_string(i), EmbeddingKind::image, 7),
                      std::nullopt, std::nullopt};
      if (i % 2) l.prompt_id = "p" + std::to_string(i);
      if (i % 3 == 0) l.uri = "img/" + std::to_string(i) + ".png";
      lines.push_back(l);
    }
    write_emb_jsonl(dir / "e.jsonl", lines);
    const auto back = read_emb_jsonl(dir / "e.jsonl", 7);
    REQUIRE(back.size() == lines.size());
    std::size_t row = 0;
    for_each_jsonl(dir / "e.jsonl", [&](std::size_t, const json& j) {
      CHECK(j.at("vector").get<std::vector<double>>() == lines[row++].embedding.vector);
    });
    for (std::size_t i = 0; i < lines.size(); ++i) {
      CHECK(back[i].embedding.id == lines[i].embedding.id);
      CHECK(back[i].embedding.vector == normalize(lines[i].embedding.vector));
      CHECK(back[i].prompt_id == lines[i].prompt_id);
      CHECK(back[i].uri == lines[i].uri);
    }
  }

  TEST_CASE("EMB-JSONL normalizes and infers the dimension") {
    TempDir dir;
    write_text(dir / "e.jsonl",
               "{\"id\":\"a\",\"kind\":\"text\",\"vector\":[3,4]}\n\n{\"id\":\"b\",\"kind\":\"image\",\"vector\":[0,2]}\n");
    const auto lines = read_emb_jsonl(dir / "e.jsonl", 0);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].embedding.kind == EmbeddingKind::text);
    CHECK(lines[0].embedding.vector[0] == doctest::Approx(0.6));
    CHECK(lines[1].embedding.vector == std::vector<double>{0.0, 1.0});
  }

  TEST_CASE("EMB-JSONL rejects wrong arity with the line number") {
    TempDir dir;
    write_text(dir / "e.jsonl",
               "{\"id\":\"a\",\"kind\":\"image\",\"vector\":[1,0,0]}\n{\"id\":\"b\",\"kind\":\"image\",\"vector\":[1,0]}\n");
    const auto msg = error_text([&] { read_emb_jsonl(dir / "e.jsonl", 0); }, ErrorKind::DimensionMismatch);
    CHECK(msg.find(":2:") != std::string::npos);
    error_text([&] { read_emb_jsonl(dir / "e.jsonl", 4); }, ErrorKind::DimensionMismatch);
  }

  TEST_CASE("malformed lines are reported with their line number") {
    TempDir dir;
    write_text(dir / "bad.jsonl", "{\"id\":\"a\",\"kind\":\"image\",\"vector\":[1]}\n{not json\n");
    const auto msg = error_text([&] { read_emb_jsonl(dir / "bad.jsonl", 0); }, ErrorKind::ParseError);
    CHECK(msg.find("bad.jsonl:2:") != std::string::npos);

    write_text(dir / "zero.jsonl", "{\"id\":\"a\",\"kind\":\"image\",\"vector\":[0,0]}\n");
    error_text([&] { read_emb_jsonl(dir / "zero.jsonl", 0); }, ErrorKind::ZeroVector);
    write_text(dir / "kind.jsonl", "{\"id\":\"a\",\"kind\":\"audio\",\"vector\":[1]}\n");
    error_text([&] { read_emb_jsonl(dir / "kind.jsonl", 0); }, ErrorKind::ParseError);
    write_text(dir / "arr.jsonl", "[1,2]\n");
    error_text([&] { read_emb_jsonl(dir / "arr.jsonl", 0); }, ErrorKind::ParseError);
    error_text([&] { read_emb_jsonl(dir / "missing.jsonl", 0); }, ErrorKind::IoError);
  }

  TEST_CASE("field accessors") {
    const json obj = {{"s", "x"}, {"n", 2.5}, {"z", nullptr}};
    CHECK(get_string(obj, "s") == "x");
    CHECK(get_number(obj, "n") == 2.5);
    CHECK_FALSE(get_optional_string(obj, "z").has_value());
    CHECK_FALSE(get_optional_number(obj, "missing").has_value());
    error_text([&] { get_string(obj, "n"); }, ErrorKind::ParseError);
    error_text([&] { get_number(obj, "s"); }, ErrorKind::ParseError);
  }
}
