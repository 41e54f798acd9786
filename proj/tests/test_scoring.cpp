#include <doctest.h>

#include <cmath>

#include "support.hpp"

using namespace pairforge;
using testsupport::TempDir;

namespace {

Embedding emb(std::string id, std::vector<double> v, EmbeddingKind k = EmbeddingKind::image) {
  return make_embedding(std::move(id), k, v);
}

// Unit vector in the plane spanned by e0 and e1 with cosine c to e0.
std::vector<double> at_cos(double c) { return {c, std::sqrt(1 - c * c), 0.0}; }

}  // namespace

TEST_SUITE("scoring") {
  TEST_CASE("image similarity examples") {
    const auto x = emb("x", {1, 0, 0});
    CHECK(image_similarity(x, ConceptRefSet("c", {emb("a", {1, 0, 0}), emb("b", {2, 0, 0})})) == 1.0);
    CHECK(image_similarity(x, ConceptRefSet("c", {emb("a", {0, 1, 0}), emb("b", {0, 0, 1})})) == 0.0);
    const ConceptRefSet mixed("c", {emb("r1", at_cos(0.8)), emb("r2", at_cos(0.6))});
    CHECK(image_similarity(x, mixed) == doctest::Approx(0.7).epsilon(1e-14));
    CHECK_THROWS_AS(image_similarity(emb("y", {1, 0}), mixed), Error);
  }

  TEST_CASE("image similarity ignores member order") {
    SeededRng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Embedding> members;
      for (int i = 0; i < 6; ++i) {
        members.push_back(testsupport::random_embedding(rng, "m" + std::to_string(i), EmbeddingKind::image, 32));
      }
      const auto x = testsupport::random_embedding(rng, "x", EmbeddingKind::image, 32);
      const double base = image_similarity(x, ConceptRefSet("c", members));
      std::reverse(members.begin(), members.end());
      CHECK(image_similarity(x, ConceptRefSet("c", members)) == base);
      std::swap(members[1], members[4]);
      CHECK(image_similarity(x, ConceptRefSet("c", members)) == base);
    }
  }

  TEST_CASE("text similarity examples and oracle") {
    const PromptRecord p{"p", "a [V*]", emb("p", {1, 0, 0}, EmbeddingKind::text), PromptSource::custom};
    CHECK(text_similarity(emb("x", {1, 0, 0}), p) == 1.0);
    CHECK(text_similarity(emb("x", {0, 1, 0}), p) == 0.0);

    SeededRng rng(22);
    for (int trial = 0; trial < 100; ++trial) {
      const auto a = testsupport::random_vector(rng, 512), b = testsupport::random_vector(rng, 512);
      const PromptRecord q{"q", "t", emb("q", b, EmbeddingKind::text), PromptSource::custom};
      CHECK(std::fabs(text_similarity(emb("x", a), q) - static_cast<double>(testsupport::oracle_cosine(a, b))) <=
            1e-12);
    }
  }

  TEST_CASE("weighted score examples and linearity in lambda") {
    CHECK(weighted_score(0.9, 0.1, 1.0) == 0.9);
    CHECK(weighted_score(0.9, 0.1, 0.0) == 0.1);
    CHECK(weighted_score(0.3, 0.2, 0.5) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(weighted_score(0.1, 0.2, 1.5), Error);
    CHECK_THROWS_AS(weighted_score(0.1, 0.2, -0.01), Error);
    CHECK_THROWS_AS(weighted_score(0.1, 0.2, std::nan("")), Error);

    SeededRng rng(23);
    for (int trial = 0; trial < 1000; ++trial) {
      const double ts = 2 * rng.uniform01() - 1, is = 2 * rng.uniform01() - 1;
      const double l1 = rng.uniform01(), l2 = rng.uniform01(), l3 = rng.uniform01();
      const double s1 = weighted_score(ts, is, l1), s2 = weighted_score(ts, is, l2), s3 = weighted_score(ts, is, l3);
      // Collinear points (l, s) with slope ts - is.
      CHECK(std::fabs((s2 - s1) * (l3 - l1) - (s3 - s1) * (l2 - l1)) <= 1e-12);
      CHECK(std::fabs(s1 - (is + l1 * (ts - is))) <= 1e-12);
    }
  }

  TEST_CASE("score_batch matches single-sample scoring and the serial path") {
    SeededRng rng(24);
    std::vector<Embedding> refs;
    for (int i = 0; i < 5; ++i) refs.push_back(testsupport::random_embedding(rng, "r" + std::to_string(i), EmbeddingKind::image, 64));
    const ConceptRefSet ref_set("c", refs);
    PromptLookup prompts;
    for (int p = 0; p < 10; ++p) {
      const std::string id = "p" + std::to_string(p);
      prompts.emplace(id, PromptRecord{id, "t", testsupport::random_embedding(rng, id, EmbeddingKind::text, 64), PromptSource::llm});
    }
    std::vector<GenerationSample> samples;
    for (int i = 0; i < 100; ++i) {
      GenerationSample g;
      g.sample_id = "s" + std::to_string(i);
      g.prompt_id = "p" + std::to_string(i % 10);
      g.image_embedding = testsupport::random_embedding(rng, g.sample_id, EmbeddingKind::image, 64);
      samples.push_back(g);
    }
    const auto batch = score_batch(samples, ref_set, prompts, 0.25);
    const auto serial = score_batch_reference(samples, ref_set, prompts, 0.25);
    REQUIRE(batch.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto one = score_sample(samples[i], ref_set, prompts, 0.25);
      CHECK(batch[i].sample_id == samples[i].sample_id);
      CHECK(batch[i].ts == one.ts);
      CHECK(batch[i].is == one.is);
      CHECK(batch[i].ts == serial[i].ts);
      CHECK(batch[i].is == serial[i].is);
      CHECK(std::fabs(*batch[i].weighted - (0.25 * one.ts + 0.75 * one.is)) <= 1e-12);
      // Independent oracle on the stored unit vectors.
      long double is = 0;
      for (const auto& r : ref_set.members()) is += testsupport::oracle_cosine(samples[i].image_embedding.vector, r.vector);
      CHECK(std::fabs(batch[i].is - static_cast<double>(is / 5)) <= 1e-12);
    }
    CHECK(score_batch({}, ref_set, prompts, std::nullopt).empty());
    const auto no_lambda = score_batch(samples, ref_set, prompts, std::nullopt);
    CHECK_FALSE(no_lambda[0].weighted.has_value());

    samples[37].prompt_id = "nope";
    try {
      score_batch(samples, ref_set, prompts, std::nullopt);
      FAIL("expected UnknownPrompt");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UnknownPrompt);
      CHECK(std::string(e.what()).find("s37") != std::string::npos);
    }
  }

  TEST_CASE("lambda presets") {
    CHECK(lambda_preset("coarse") == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
    CHECK(lambda_preset("fine") == std::vector<double>{0.625, 0.6875, 0.71875});
    CHECK_THROWS_AS(lambda_preset("other"), Error);
  }

  TEST_CASE("SCORES-JSONL is sorted and round-trips") {
    TempDir dir;
    std::vector<ScoredSample> s{testsupport::scored("b", "p2", 0.1, 0.2), testsupport::scored("a", "p2", 0.3, 0.4),
                                testsupport::scored("z", "p1", 0.1 / 3, -0.7)};
    s[0].weighted = 0.15;
    s[0].lambda = 0.5;
    s[1].round_index = 2;
    s[1].artifact_uri = "x.png";
    write_scores_jsonl(dir / "s.jsonl", s);
    const auto back = read_scores_jsonl(dir / "s.jsonl");
    REQUIRE(back.size() == 3);
    CHECK(back[0].sample_id == "z");
    CHECK(back[0].ts == 0.1 / 3);
    CHECK(back[1].sample_id == "a");
    CHECK(back[1].round_index == 2);
    CHECK(back[1].artifact_uri == std::optional<std::string>("x.png"));
    CHECK(back[2].weighted == std::optional<double>(0.15));
    CHECK(scores_jsonl(back) == read_file(dir / "s.jsonl"));

    std::ofstream(dir / "bad.jsonl") << "{\"sample_id\":\"a\",\"prompt_id\":\"p\",\"ts\":1.5,\"is\":0}\n";
    CHECK_THROWS_AS(read_scores_jsonl(dir / "bad.jsonl"), Error);
  }
}
