#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pairforge/core.hpp"
#include "pairforge/io.hpp"

namespace pairforge {

enum class PromptSource { coco, llm, dreambench, custom };

std::string_view to_string(PromptSource s);
PromptSource prompt_source_from_string(std::string_view s);

struct PromptRecord {
  std::string prompt_id;
  std::string text;
  Embedding text_embedding;
  PromptSource source = PromptSource::custom;
};

using PromptLookup = std::unordered_map<std::string, PromptRecord>;

struct GenerationSample {
  std::string sample_id;
  std::string prompt_id;
  Embedding image_embedding;
  std::uint32_t round_index = 0;
  std::optional<std::string> artifact_uri;
};

/// Scores of one generated image. The embedding is not retained; everything
/// downstream of scoring works from (ts, is).
struct ScoredSample {
  std::string sample_id;
  std::string prompt_id;
  std::uint32_t round_index = 0;
  std::optional<std::string> artifact_uri;
  double ts = 0.0;
  double is = 0.0;
  std::optional<double> weighted;
  std::optional<double> lambda;
};

/// Mean cosine between `x` and every reference image, accumulated in
/// ascending member-id order.
double image_similarity(const Embedding& x, const ConceptRefSet& refs);

double text_similarity(const Embedding& x, const PromptRecord& prompt);

/// lambda * ts + (1 - lambda) * is. Throws LambdaOutOfRange outside [0, 1].
double weighted_score(double ts, double is, double lambda);

void check_lambda(double lambda);

ScoredSample score_sample(const GenerationSample& sample, const ConceptRefSet& refs,
                          const PromptLookup& prompts, std::optional<double> lambda);

/// Scores every sample, order-preserving. Parallel over samples; the result is
/// bit-identical to score_batch_reference for any thread count.
std::vector<ScoredSample> score_batch(std::span<const GenerationSample> samples,
                                      const ConceptRefSet& refs, const PromptLookup& prompts,
                                      std::optional<double> lambda);

/// Serial reference implementation of score_batch.
std::vector<ScoredSample> score_batch_reference(std::span<const GenerationSample> samples,
                                                const ConceptRefSet& refs,
                                                const PromptLookup& prompts,
                                                std::optional<double> lambda);

/// Coarse and fine lambda sweeps used for weighted-score experiments.
std::vector<double> lambda_preset(std::string_view name);

// SCORES-JSONL
void sort_scores(std::vector<ScoredSample>& scores);
json score_to_json(const ScoredSample& s);
ScoredSample score_from_json(const json& obj);
std::string scores_jsonl(std::vector<ScoredSample> scores);
void write_scores_jsonl(const std::filesystem::path& path, std::vector<ScoredSample> scores);
std::vector<ScoredSample> read_scores_jsonl(const std::filesystem::path& path);

}  // namespace pairforge
