#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pairforge/pairing.hpp"
#include "pairforge/scoring.hpp"

namespace pairforge {

struct ConceptEval {
  std::string concept_id;
  double mean_clip_i = 0.0;
  double mean_clip_t = 0.0;
  std::size_t n_prompts = 0;
};

struct EvalOptions {
  std::size_t images_per_prompt = 10;
  bool allow_partial = false;
};

struct EvalPromptGroup {
  PromptRecord prompt;
  std::vector<Embedding> images;
};

/// CLIP-I / CLIP-T of one concept: per-image scores are averaged within each
/// prompt, then prompt means are averaged.
ConceptEval eval_concept(std::string concept_id, std::span<const EvalPromptGroup> groups,
                         const ConceptRefSet& refs, const EvalOptions& options = {});

/// Same nesting, starting from already-scored samples (ts = CLIP-T, is = CLIP-I).
ConceptEval eval_concept_scores(std::string concept_id, std::span<const ScoredGroup> groups,
                                const EvalOptions& options = {});

struct OverallStats {
  double mean_i = 0.0;
  double sigma_i = 0.0;
  double mean_t = 0.0;
  double sigma_t = 0.0;
  std::size_t n_concepts = 0;
};

/// Unweighted mean and population standard deviation over concept means,
/// reduced in concept-id order.
OverallStats aggregate(std::span<const ConceptEval> per_concept);

enum class PromptSubset { live, object };

std::string_view to_string(PromptSubset s);

/// "live" for live concept classes (cat and dog unless configured), else "object".
PromptSubset subset_for_class(const std::string& concept_class,
                              const std::set<std::string>& live_classes = {"cat", "dog"});

struct EvalReport {
  std::vector<ConceptEval> per_concept;
  OverallStats overall;
  std::string prompt_subset;
  std::size_t n_images_per_prompt = 10;

  json to_json() const;
};

struct TrajectoryPoint {
  std::string label;
  double ts = 0.0;
  double is = 0.0;
};

/// Points not dominated in (ts, is), sorted by ts ascending. Duplicated
/// points do not dominate each other.
std::vector<TrajectoryPoint> pareto_frontier(std::span<const TrajectoryPoint> points);

// TRAJECTORY-CSV: header "label,ts,is".
std::string trajectory_csv(std::span<const TrajectoryPoint> points);
std::vector<TrajectoryPoint> read_trajectory_csv(const std::filesystem::path& path);

/// Plain SVG scatter of (ts, is) with one circle per point and the Pareto
/// frontier drawn as a polyline.
std::string trajectory_svg(std::span<const TrajectoryPoint> points, const std::string& title = "");

struct VoteTally {
  std::string method;
  std::string question;
  std::size_t win = 0;
  std::size_t lose = 0;
  std::size_t no_diff = 0;

  std::size_t total() const noexcept { return win + lose + no_diff; }
  double win_pct() const;
  double lose_pct() const;
  double no_diff_pct() const;
};

/// Tallies side-by-side votes. The CSV needs a header with at least the
/// columns method, question and vote (win | lose | no_diff). Percentages are
/// taken over all votes of each (method, question) cell.
std::vector<VoteTally> tabulate_votes(std::istream& csv);
json votes_to_json(const std::vector<VoteTally>& tallies);
std::string format_pct(double pct);

}  // namespace pairforge
