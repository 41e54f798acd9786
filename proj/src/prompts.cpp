#include "pairforge/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <unordered_set>

namespace pairforge {

namespace {

struct Token {
  std::string text;  // lowercased
  std::size_t begin = 0;
  std::size_t end = 0;
};

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_word_byte(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    Token t;
    t.begin = i;
    while (i < s.size() && is_word_byte(static_cast<unsigned char>(s[i]))) {
      t.text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
      ++i;
    }
    t.end = i;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::string> phrase_tokens(std::string_view phrase) {
  std::vector<std::string> out;
  for (auto& t : tokenize(phrase)) out.push_back(std::move(t.text));
  return out;
}

// Start indices (into `tokens`) of every occurrence of `phrase`.
std::vector<std::size_t> find_phrase(const std::vector<Token>& tokens,
                                     const std::vector<std::string>& phrase) {
  std::vector<std::size_t> hits;
  if (phrase.empty() || phrase.size() > tokens.size()) return hits;
  for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < phrase.size() && match; ++k) match = tokens[i + k].text == phrase[k];
    if (match) hits.push_back(i);
  }
  return hits;
}

std::vector<std::vector<std::string>> plural_phrases(std::string_view word,
                                                     const std::vector<std::string>& extra) {
  std::vector<std::vector<std::string>> out;
  auto base = phrase_tokens(word);
  if (base.empty()) return out;
  for (const char* suffix : {"s", "es"}) {
    auto p = base;
    p.back() += suffix;
    out.push_back(std::move(p));
  }
  for (const auto& e : extra) {
    auto p = phrase_tokens(e);
    if (!p.empty() && p != base) out.push_back(std::move(p));
  }
  return out;
}

struct Occurrences {
  std::vector<std::size_t> singular;
  std::size_t plural = 0;
  std::size_t phrase_len = 0;
};

Occurrences count_occurrences(const std::vector<Token>& tokens, std::string_view word,
                              const std::vector<std::string>& extra_plurals) {
  Occurrences occ;
  const auto base = phrase_tokens(word);
  occ.phrase_len = base.size();
  occ.singular = find_phrase(tokens, base);
  for (const auto& p : plural_phrases(word, extra_plurals)) occ.plural += find_phrase(tokens, p).size();
  return occ;
}

std::string format_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%05zu", prefix, i);
  return buf;
}

}  // namespace

bool ConceptCategoryEntry::matches(std::string_view supercat, std::string_view cat) const {
  return supercat == supercategory && (category == "*" || cat == category);
}

ConceptCategoryMap ConceptCategoryMap::dreambench_default() {
  auto e = [](std::string super, std::string cat) {
    return ConceptCategoryEntry{std::move(super), std::move(cat), {}, {}};
  };
  return ConceptCategoryMap({
      {"backpack", e("accessory", "backpack")},
      {"boot", e("accessory", "*")},
      {"bowl", e("kitchen", "bowl")},
      {"can", e("kitchen", "bottle")},
      {"candle", e("indoor", "*")},
      {"cartoon", e("indoor", "teddy_bear")},
      {"cat", e("animal", "cat")},
      {"clock", e("indoor", "clock")},
      {"dog", e("animal", "dog")},
      {"glasses", e("accessory", "*")},
      {"sneaker", e("accessory", "*")},
      {"stuffed animal", e("indoor", "teddy_bear")},
      {"teapot", e("kitchen", "bottle")},
      {"toy", e("indoor", "teddy_bear")},
      {"vase", e("indoor", "vase")},
  });
}

ConceptCategoryMap ConceptCategoryMap::from_json(const json& doc) {
  const json& concepts = doc.contains("concepts") ? doc.at("concepts") : doc;
  if (!concepts.is_object()) fail(ErrorKind::ParseError, "concept map must be a JSON object");
  std::map<std::string, ConceptCategoryEntry> entries;
  for (auto it = concepts.begin(); it != concepts.end(); ++it) {
    const json& v = it.value();
    ConceptCategoryEntry entry;
    if (v.is_string()) {
      // Compact "supercategory/category" form.
      const auto s = v.get<std::string>();
      const auto slash = s.find('/');
      if (slash == std::string::npos) {
        fail(ErrorKind::ParseError, "concept '" + it.key() + "': expected 'supercategory/category'");
      }
      entry.supercategory = s.substr(0, slash);
      entry.category = s.substr(slash + 1);
    } else if (v.is_object()) {
      entry.supercategory = get_string(v, "supercategory");
      entry.category = get_string(v, "category");
      if (v.contains("words")) entry.words = v.at("words").get<std::vector<std::string>>();
      if (v.contains("extra_plurals")) {
        entry.extra_plurals = v.at("extra_plurals").get<std::vector<std::string>>();
      }
    } else {
      fail(ErrorKind::ParseError, "concept '" + it.key() + "': expected a string or object");
    }
    entries.emplace(it.key(), std::move(entry));
  }
  return ConceptCategoryMap(std::move(entries));
}

json ConceptCategoryMap::to_json() const {
  json concepts = json::object();
  for (const auto& [name, e] : entries_) {
    json v = {{"supercategory", e.supercategory}, {"category", e.category}};
    if (!e.words.empty()) v["words"] = e.words;
    if (!e.extra_plurals.empty()) v["extra_plurals"] = e.extra_plurals;
    concepts[name] = v;
  }
  return {{"concepts", concepts}};
}

const ConceptCategoryEntry& ConceptCategoryMap::at(const std::string& concept_class) const {
  auto it = entries_.find(concept_class);
  if (it == entries_.end()) {
    fail(ErrorKind::UnknownConcept, "concept class '" + concept_class + "' has no category mapping");
  }
  return it->second;
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::none: return "none";
    case RejectReason::multiple_occurrences: return "multiple_occurrences";
    case RejectReason::plural_form: return "plural_form";
    case RejectReason::no_occurrence: return "no_occurrence";
  }
  return "none";
}

CaptionVerdict filter_caption(const CaptionCandidate& c) {
  const auto tokens = tokenize(c.caption);
  const auto occ = count_occurrences(tokens, c.category_word, c.extra_plurals);
  CaptionVerdict v;
  v.singular_count = occ.singular.size();
  v.plural_count = occ.plural;
  if (occ.plural > 0) {
    v.reason = RejectReason::plural_form;
  } else if (occ.singular.empty()) {
    v.reason = RejectReason::no_occurrence;
  } else if (occ.singular.size() > 1) {
    v.reason = RejectReason::multiple_occurrences;
  } else {
    v.accepted = true;
  }
  return v;
}

std::string substitute_placeholder(std::string_view caption, std::string_view category_word,
                                   const std::vector<std::string>& extra_plurals) {
  const auto tokens = tokenize(caption);
  const auto occ = count_occurrences(tokens, category_word, extra_plurals);
  if (occ.plural != 0 || occ.singular.size() != 1 || occ.phrase_len == 0) {
    fail(ErrorKind::NotSingleOccurrence, "caption '" + std::string(caption) +
                                             "' does not contain exactly one '" +
                                             std::string(category_word) + "'");
  }
  const std::size_t first = occ.singular.front();
  const std::size_t begin = tokens[first].begin;
  const std::size_t end = tokens[first + occ.phrase_len - 1].end;
  std::string out;
  out.reserve(caption.size() + kPlaceholder.size());
  out.append(caption.substr(0, begin));
  out.append(kPlaceholder);
  out.append(caption.substr(end));
  return out;
}

std::size_t count_placeholders(std::string_view text) {
  std::size_t n = 0;
  for (auto pos = text.find(kPlaceholder); pos != std::string_view::npos;
       pos = text.find(kPlaceholder, pos + kPlaceholder.size())) {
    ++n;
  }
  return n;
}

std::string dedup_key(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

namespace {

// Keeps `pool` entries at a uniformly sampled set of `k` indices, in pool order.
template <typename T>
std::vector<T> sample_in_order(const std::vector<T>& pool, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (k < pool.size()) {
    SeededRng rng(seed);
    rng.partial_shuffle(idx, k);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
  }
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(pool[i]);
  return out;
}

}  // namespace

std::vector<PromptSpec> build_prompt_set(const std::vector<CaptionCandidate>& captions,
                                         const std::vector<std::string>& llm_prompts,
                                         const PromptSetOptions& options) {
  for (std::size_t i = 0; i < llm_prompts.size(); ++i) {
    if (count_placeholders(llm_prompts[i]) != 1 || dedup_key(llm_prompts[i]).empty()) {
      fail(ErrorKind::InvalidLlmPrompt,
           "LLM prompt " + std::to_string(i) + " must contain exactly one " + std::string(kPlaceholder));
    }
  }

  std::unordered_set<std::string> seen;
  std::vector<std::string> coco_pool;
  if (options.n_coco > 0) {
    for (const auto& c : captions) {
      if (!filter_caption(c).accepted) continue;
      auto text = substitute_placeholder(c.caption, c.category_word, c.extra_plurals);
      if (seen.insert(dedup_key(text)).second) coco_pool.push_back(std::move(text));
    }
    if (coco_pool.size() < options.n_coco) {
      fail(ErrorKind::InsufficientCaptions,
           "only " + std::to_string(coco_pool.size()) + " unique accepted captions available, " +
               std::to_string(options.n_coco) + " requested");
    }
  }
  auto coco = sample_in_order(coco_pool, options.n_coco, mix_seed(options.seed, "coco"));

  std::unordered_set<std::string> taken;
  for (const auto& t : coco) taken.insert(dedup_key(t));
  std::vector<std::string> llm_pool;
  for (const auto& p : llm_prompts) {
    if (taken.insert(dedup_key(p)).second) llm_pool.push_back(p);
  }
  if (llm_pool.size() < options.n_llm) {
    fail(ErrorKind::InsufficientPrompts, "only " + std::to_string(llm_pool.size()) +
                                             " unique LLM prompts available, " +
                                             std::to_string(options.n_llm) + " requested");
  }
  auto llm = sample_in_order(llm_pool, options.n_llm, mix_seed(options.seed, "llm"));

  std::vector<PromptSpec> out;
  out.reserve(coco.size() + llm.size());
  for (std::size_t i = 0; i < coco.size(); ++i) {
    out.push_back({format_id("coco", i), std::move(coco[i]), PromptSource::coco});
  }
  for (std::size_t i = 0; i < llm.size(); ++i) {
    out.push_back({format_id("llm", i), std::move(llm[i]), PromptSource::llm});
  }
  return out;
}

std::vector<CocoCaption> read_coco_captions(const std::filesystem::path& path) {
  std::vector<CocoCaption> out;
  for_each_jsonl(path, [&](std::size_t, const json& obj) {
    out.push_back({get_string(obj, "source_id"), get_string(obj, "caption"),
                   get_string(obj, "supercategory"), get_string(obj, "category")});
  });
  return out;
}

std::vector<CaptionCandidate> captions_for_concept(const std::vector<CocoCaption>& rows,
                                                   const ConceptCategoryEntry& entry) {
  std::vector<CaptionCandidate> out;
  for (const auto& row : rows) {
    if (!row.caption.size() || !entry.matches(row.supercategory, row.category)) continue;
    std::vector<std::string> words = entry.words;
    if (words.empty()) {
      std::string w = row.category;
      std::replace(w.begin(), w.end(), '_', ' ');
      words.push_back(std::move(w));
    }
    const auto tokens = tokenize(row.caption);
    std::string chosen = words.front();
    for (const auto& w : words) {
      const auto occ = count_occurrences(tokens, w, entry.extra_plurals);
      if (!occ.singular.empty() || occ.plural > 0) {
        chosen = w;
        break;
      }
    }
    out.push_back({row.caption, dedup_key(chosen), row.source_id, entry.extra_plurals});
  }
  return out;
}

std::vector<std::string> read_prompt_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (dedup_key(line).empty()) continue;
    out.push_back(line);
  }
  return out;
}

std::string prompts_jsonl(const std::vector<PromptSpec>& prompts) {
  std::string buf;
  for (const auto& p : prompts) {
    buf += json{{"prompt_id", p.prompt_id}, {"text", p.text}, {"source", std::string(to_string(p.source))}}
               .dump();
    buf += '\n';
  }
  return buf;
}

std::vector<PromptSpec> read_prompts_jsonl(const std::filesystem::path& path) {
  std::vector<PromptSpec> out;
  for_each_jsonl(path, [&](std::size_t, const json& obj) {
    PromptSpec p{get_string(obj, "prompt_id"), get_string(obj, "text"), PromptSource::custom};
    if (auto s = get_optional_string(obj, "source")) p.source = prompt_source_from_string(*s);
    out.push_back(std::move(p));
  });
  return out;
}

}  // namespace pairforge
