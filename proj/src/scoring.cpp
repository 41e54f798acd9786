#include "pairforge/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace pairforge {

std::string_view to_string(PromptSource s) {
  switch (s) {
    case PromptSource::coco: return "coco";
    case PromptSource::llm: return "llm";
    case PromptSource::dreambench: return "dreambench";
    case PromptSource::custom: return "custom";
  }
  return "custom";
}

PromptSource prompt_source_from_string(std::string_view s) {
  if (s == "coco") return PromptSource::coco;
  if (s == "llm") return PromptSource::llm;
  if (s == "dreambench") return PromptSource::dreambench;
  if (s == "custom") return PromptSource::custom;
  fail(ErrorKind::ParseError, "unknown prompt source '" + std::string(s) + "'");
}

double image_similarity(const Embedding& x, const ConceptRefSet& refs) {
  if (refs.size() == 0) fail(ErrorKind::EmptyConceptSet, "concept reference set is empty");
  double sum = 0.0;
  for (const auto& m : refs.members()) sum += cosine(x, m);
  return std::clamp(sum / static_cast<double>(refs.size()), -1.0, 1.0);
}

double text_similarity(const Embedding& x, const PromptRecord& prompt) {
  return cosine(x, prompt.text_embedding);
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    fail(ErrorKind::LambdaOutOfRange, "lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
}

double weighted_score(double ts, double is, double lambda) {
  check_lambda(lambda);
  return lambda * ts + (1.0 - lambda) * is;
}

ScoredSample score_sample(const GenerationSample& sample, const ConceptRefSet& refs,
                          const PromptLookup& prompts, std::optional<double> lambda) {
  auto it = prompts.find(sample.prompt_id);
  if (it == prompts.end()) {
    fail(ErrorKind::UnknownPrompt,
         "sample '" + sample.sample_id + "' references unknown prompt '" + sample.prompt_id + "'");
  }
  ScoredSample out;
  out.sample_id = sample.sample_id;
  out.prompt_id = sample.prompt_id;
  out.round_index = sample.round_index;
  out.artifact_uri = sample.artifact_uri;
  try {
    out.ts = text_similarity(sample.image_embedding, it->second);
    out.is = image_similarity(sample.image_embedding, refs);
  } catch (const Error& e) {
    throw Error(e.kind(), "sample '" + sample.sample_id + "': " + e.what());
  }
  if (lambda) {
    out.weighted = weighted_score(out.ts, out.is, *lambda);
    out.lambda = *lambda;
  }
  return out;
}

std::vector<ScoredSample> score_batch_reference(std::span<const GenerationSample> samples,
                                                const ConceptRefSet& refs,
                                                const PromptLookup& prompts,
                                                std::optional<double> lambda) {
  if (lambda) check_lambda(*lambda);
  std::vector<ScoredSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(score_sample(s, refs, prompts, lambda));
  return out;
}

std::vector<ScoredSample> score_batch(std::span<const GenerationSample> samples,
                                      const ConceptRefSet& refs, const PromptLookup& prompts,
                                      std::optional<double> lambda) {
  if (lambda) check_lambda(*lambda);
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  std::vector<ScoredSample> out(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = score_sample(samples[i], refs, prompts, lambda);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }

  // Report the first failing sample in input order, as the serial path would.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<double> lambda_preset(std::string_view name) {
  if (name == "coarse") return {0.0, 0.25, 0.5, 0.75, 1.0};
  if (name == "fine") return {0.625, 0.6875, 0.71875};
  fail(ErrorKind::InvalidArgument, "unknown lambda preset '" + std::string(name) + "'");
}

void sort_scores(std::vector<ScoredSample>& scores) {
  std::stable_sort(scores.begin(), scores.end(), [](const ScoredSample& a, const ScoredSample& b) {
    if (a.prompt_id != b.prompt_id) return a.prompt_id < b.prompt_id;
    return a.sample_id < b.sample_id;
  });
}

json score_to_json(const ScoredSample& s) {
  json obj = {{"sample_id", s.sample_id}, {"prompt_id", s.prompt_id}, {"ts", s.ts}, {"is", s.is}};
  if (s.weighted) obj["weighted"] = *s.weighted;
  if (s.lambda) obj["lambda"] = *s.lambda;
  if (s.round_index != 0) obj["round"] = s.round_index;
  if (s.artifact_uri) obj["uri"] = *s.artifact_uri;
  return obj;
}

ScoredSample score_from_json(const json& obj) {
  ScoredSample s;
  s.sample_id = get_string(obj, "sample_id");
  s.prompt_id = get_string(obj, "prompt_id");
  s.ts = get_number(obj, "ts");
  s.is = get_number(obj, "is");
  if (!std::isfinite(s.ts) || !std::isfinite(s.is) || std::abs(s.ts) > 1.0 || std::abs(s.is) > 1.0) {
    fail(ErrorKind::ParseError, "scores for '" + s.sample_id + "' must be finite and within [-1, 1]");
  }
  s.weighted = get_optional_number(obj, "weighted");
  s.lambda = get_optional_number(obj, "lambda");
  if (auto r = get_optional_number(obj, "round")) s.round_index = static_cast<std::uint32_t>(*r);
  s.artifact_uri = get_optional_string(obj, "uri");
  return s;
}

std::string scores_jsonl(std::vector<ScoredSample> scores) {
  sort_scores(scores);
  std::string buf;
  for (const auto& s : scores) {
    buf += score_to_json(s).dump();
    buf += '\n';
  }
  return buf;
}

void write_scores_jsonl(const std::filesystem::path& path, std::vector<ScoredSample> scores) {
  atomic_write(path, scores_jsonl(std::move(scores)));
}

std::vector<ScoredSample> read_scores_jsonl(const std::filesystem::path& path) {
  std::vector<ScoredSample> out;
  for_each_jsonl(path, [&](std::size_t, const json& obj) { out.push_back(score_from_json(obj)); });
  return out;
}

}  // namespace pairforge
