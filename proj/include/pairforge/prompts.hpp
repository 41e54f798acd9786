#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pairforge/io.hpp"
#include "pairforge/scoring.hpp"

namespace pairforge {

inline constexpr std::string_view kPlaceholder = "[V*]";

/// One concept class mapped onto a COCO supercategory/category. `category` may
/// be "*" to accept any category of the supercategory.
struct ConceptCategoryEntry {
  std::string supercategory;
  std::string category;
  /// Words to look for in captions. Empty means the COCO category name with
  /// underscores read as spaces.
  std::vector<std::string> words;
  /// Irregular plural forms in addition to the "+s" / "+es" rule.
  std::vector<std::string> extra_plurals;

  bool matches(std::string_view supercat, std::string_view cat) const;
};

class ConceptCategoryMap {
 public:
  ConceptCategoryMap() = default;
  explicit ConceptCategoryMap(std::map<std::string, ConceptCategoryEntry> entries)
      : entries_(std::move(entries)) {}

  /// The DreamBench class -> COCO mapping used for prompt collection.
  static ConceptCategoryMap dreambench_default();
  static ConceptCategoryMap from_json(const json& doc);
  json to_json() const;

  /// Throws UnknownConcept naming the class when it has no entry.
  const ConceptCategoryEntry& at(const std::string& concept_class) const;
  bool contains(const std::string& concept_class) const { return entries_.count(concept_class) != 0; }
  const std::map<std::string, ConceptCategoryEntry>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, ConceptCategoryEntry> entries_;
};

struct CaptionCandidate {
  std::string caption;
  std::string category_word;
  std::string source_id;
  std::vector<std::string> extra_plurals;
};

enum class RejectReason { none, multiple_occurrences, plural_form, no_occurrence };

std::string_view to_string(RejectReason r);

struct CaptionVerdict {
  bool accepted = false;
  RejectReason reason = RejectReason::none;
  std::size_t singular_count = 0;
  std::size_t plural_count = 0;
};

/// Accepts iff the caption has exactly one whole-token, case-insensitive
/// occurrence of the category word and no plural occurrence.
CaptionVerdict filter_caption(const CaptionCandidate& c);

/// Replaces the single occurrence of `category_word` with "[V*]", leaving
/// every other character untouched. Throws NotSingleOccurrence unless the
/// caption passes filter_caption.
std::string substitute_placeholder(std::string_view caption, std::string_view category_word,
                                   const std::vector<std::string>& extra_plurals = {});

std::size_t count_placeholders(std::string_view text);

/// Lowercased, whitespace-collapsed, trimmed form used for duplicate detection.
std::string dedup_key(std::string_view text);

struct PromptSpec {
  std::string prompt_id;
  std::string text;
  PromptSource source = PromptSource::custom;
};

struct PromptSetOptions {
  std::size_t n_coco = 3000;
  std::size_t n_llm = 1000;
  std::uint64_t seed = 0;
};

/// Builds the per-concept prompt set: `n_coco` sampled accepted captions with
/// the placeholder substituted, followed by `n_llm` concept-agnostic prompts.
std::vector<PromptSpec> build_prompt_set(const std::vector<CaptionCandidate>& captions,
                                         const std::vector<std::string>& llm_prompts,
                                         const PromptSetOptions& options);

/// A row of the COCO captions JSONL.
struct CocoCaption {
  std::string source_id;
  std::string caption;
  std::string supercategory;
  std::string category;
};

std::vector<CocoCaption> read_coco_captions(const std::filesystem::path& path);

/// Turns rows matching the concept class into caption candidates, choosing
/// the first configured word that occurs in each caption.
std::vector<CaptionCandidate> captions_for_concept(const std::vector<CocoCaption>& rows,
                                                   const ConceptCategoryEntry& entry);

std::vector<std::string> read_prompt_lines(const std::filesystem::path& path);

// PROMPTS-JSONL
std::string prompts_jsonl(const std::vector<PromptSpec>& prompts);
std::vector<PromptSpec> read_prompts_jsonl(const std::filesystem::path& path);

}  // namespace pairforge
