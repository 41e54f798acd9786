#include <doctest.h>

#include <set>

#include "pairforge/prompts.hpp"
#include "support.hpp"

using namespace pairforge;

namespace {

CaptionVerdict verdict(std::string caption, std::string word = "dog") {
  return filter_caption({std::move(caption), std::move(word), "id", {}});
}

}  // namespace

TEST_SUITE("prompts") {
  TEST_CASE("caption filter examples") {
    CHECK(verdict("a black dog").accepted);
    const auto multi = verdict("a black dog and a white dog");
    CHECK_FALSE(multi.accepted);
    CHECK(multi.reason == RejectReason::multiple_occurrences);
    const auto plural = verdict("black dogs");
    CHECK_FALSE(plural.accepted);
    CHECK(plural.reason == RejectReason::plural_form);
    CHECK(verdict("a cat on a mat").reason == RejectReason::no_occurrence);
  }

  TEST_CASE("caption filter token boundaries and case") {
    CHECK(verdict("A Dog, running.").accepted);
    CHECK(verdict("the dog's bowl").accepted);
    CHECK(verdict("a hotdog stand").reason == RejectReason::no_occurrence);
    CHECK(verdict("a dog with two dogs").reason == RejectReason::plural_form);
    CHECK(verdict("a glass on a table", "glass").accepted);
    CHECK(verdict("two glasses on a table", "glass").reason == RejectReason::plural_form);
    CHECK(verdict("a brown teddy bear on a bed", "teddy bear").accepted);
    CHECK(verdict("two teddy bears", "teddy bear").reason == RejectReason::plural_form);
    CHECK(filter_caption({"three mice", "mouse", "x", {"mice"}}).reason == RejectReason::plural_form);
  }

  TEST_CASE("placeholder substitution") {
    CHECK(substitute_placeholder("a black dog", "dog") == "a black [V*]");
    CHECK(substitute_placeholder("a dog that is holding a bowl", "dog") == "a [V*] that is holding a bowl");
    CHECK(substitute_placeholder("A Dog, running.", "dog") == "A [V*], running.");
    CHECK(substitute_placeholder("a brown teddy bear on a bed", "teddy bear") == "a brown [V*] on a bed");
    try {
      substitute_placeholder("two dogs play", "dog");
      FAIL("expected NotSingleOccurrence");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NotSingleOccurrence);
    }
    CHECK_THROWS_AS(substitute_placeholder("a dog and a dog", "dog"), Error);
  }

  TEST_CASE("substitution is total on accepted captions") {
    std::size_t accepted = 0;
    for (const auto& row : testsupport::dog_caption_corpus(500)) {
      const CaptionCandidate c{row.caption, "dog", row.source_id, {}};
      if (!filter_caption(c).accepted) continue;
      ++accepted;
      const auto out = substitute_placeholder(c.caption, "dog");
      CHECK(count_placeholders(out) == 1);
    }
    CHECK(accepted == 501);
  }

  TEST_CASE("dedup key") {
    CHECK(dedup_key("  A   Black\tDog ") == "a black dog");
    CHECK(dedup_key("") == "");
    CHECK(count_placeholders("a [V*] and [V*]") == 2);
  }

  TEST_CASE("prompt set counts, uniqueness and determinism") {
    const auto candidates = captions_for_concept(testsupport::dog_caption_corpus(5000),
                                                 ConceptCategoryMap::dreambench_default().at("dog"));
    const auto llm = testsupport::llm_prompt_pool(1200);
    const auto set = build_prompt_set(candidates, llm, {3000, 1000, 42});
    REQUIRE(set.size() == 4000);
    std::set<std::string> keys;
    std::size_t coco = 0;
    for (const auto& p : set) {
      CHECK(count_placeholders(p.text) == 1);
      keys.insert(dedup_key(p.text));
      coco += p.source == PromptSource::coco;
    }
    CHECK(keys.size() == 4000);
    CHECK(coco == 3000);
    CHECK(set.front().prompt_id == "coco-00000");
    CHECK(set.back().prompt_id == "llm-00999");
    CHECK(prompts_jsonl(set) == prompts_jsonl(build_prompt_set(candidates, llm, {3000, 1000, 42})));
    CHECK(prompts_jsonl(set) != prompts_jsonl(build_prompt_set(candidates, llm, {3000, 1000, 43})));

    CHECK(build_prompt_set({}, llm, {0, 1000, 1}).size() == 1000);
  }

  TEST_CASE("prompt set contract errors") {
    const auto llm = testsupport::llm_prompt_pool(1000);
    auto candidates = captions_for_concept(testsupport::dog_caption_corpus(2999),
                                           ConceptCategoryMap::dreambench_default().at("dog"));
    // The case variant duplicates an existing caption, so 2999 remain.
    try {
      build_prompt_set(candidates, llm, {3000, 1000, 0});
      FAIL("expected InsufficientCaptions");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InsufficientCaptions);
      CHECK(std::string(e.what()).find("2999") != std::string::npos);
    }
    auto bad = llm;
    bad[17] = "a dog without placeholder";
    try {
      build_prompt_set({}, bad, {0, 10, 0});
      FAIL("expected InvalidLlmPrompt");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidLlmPrompt);
      CHECK(std::string(e.what()).find("17") != std::string::npos);
    }
    try {
      build_prompt_set({}, llm, {0, 1001, 0});
      FAIL("expected InsufficientPrompts");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InsufficientPrompts);
    }
  }

  TEST_CASE("concept map") {
    const auto def = ConceptCategoryMap::dreambench_default();
    CHECK(def.entries().size() == 15);
    CHECK(def.at("cartoon").category == "teddy_bear");
    CHECK(def.at("boot").matches("accessory", "handbag"));
    CHECK_FALSE(def.at("dog").matches("animal", "cat"));
    try {
      def.at("dinosaur");
      FAIL("expected UnknownConcept");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UnknownConcept);
      CHECK(std::string(e.what()).find("dinosaur") != std::string::npos);
    }
    const auto shipped = ConceptCategoryMap::from_json(json::parse(read_file(PAIRFORGE_DATA "/concept_map.json")));
    CHECK(shipped.to_json() == def.to_json());
    CHECK(ConceptCategoryMap::from_json(def.to_json()).to_json() == def.to_json());

    const auto custom = ConceptCategoryMap::from_json(json::parse(
        R"({"mouse": {"supercategory": "animal", "category": "*", "words": ["mouse"], "extra_plurals": ["mice"]}})"));
    const auto rows = captions_for_concept({{"1", "a mouse on a desk", "animal", "cat"}, {"2", "three mice", "animal", "x"}},
                                           custom.at("mouse"));
    REQUIRE(rows.size() == 2);
    CHECK(filter_caption(rows[0]).accepted);
    CHECK(filter_caption(rows[1]).reason == RejectReason::plural_form);
  }

  TEST_CASE("wildcard entries use the row's category word") {
    const auto rows = captions_for_concept(
        {{"1", "a red handbag on a chair", "accessory", "handbag"}, {"2", "a blue tie", "accessory", "tie"},
         {"3", "a teddy bear", "indoor", "teddy_bear"}},
        ConceptCategoryMap::dreambench_default().at("boot"));
    REQUIRE(rows.size() == 2);
    CHECK(substitute_placeholder(rows[0].caption, rows[0].category_word) == "a red [V*] on a chair");
    CHECK(rows[1].category_word == "tie");
    const auto bears = captions_for_concept({{"3", "a teddy bear on a bed", "indoor", "teddy_bear"}},
                                            ConceptCategoryMap::dreambench_default().at("toy"));
    REQUIRE(bears.size() == 1);
    CHECK(substitute_placeholder(bears[0].caption, bears[0].category_word) == "a [V*] on a bed");
  }

  TEST_CASE("shipped long prompts each carry one placeholder") {
    for (const char* f : {"/long_prompts_live.txt", "/long_prompts_object.txt"}) {
      const auto lines = read_prompt_lines(std::string(PAIRFORGE_DATA) + f);
      CHECK(lines.size() == 10);
      for (const auto& l : lines) CHECK(count_placeholders(l) == 1);
    }
    for (const auto& p : read_prompts_jsonl(PAIRFORGE_DATA "/prompt_examples_dog.jsonl")) {
      CHECK(count_placeholders(p.text) == 1);
    }
  }
}
