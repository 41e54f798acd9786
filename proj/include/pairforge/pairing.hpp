#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pairforge/io.hpp"
#include "pairforge/scoring.hpp"

namespace pairforge {

/// An oriented (winner, loser) pair from one prompt group. Deltas are
/// winner minus loser.
struct PreferencePair {
  std::string prompt_id;
  std::string winner_id;
  std::string loser_id;
  double delta_ts = 0.0;
  double delta_is = 0.0;
  double angle_deg = 0.0;
  std::optional<double> score_gap;
  std::optional<std::string> winner_uri;
  std::optional<std::string> loser_uri;
};

bool pair_order_less(const PreferencePair& a, const PreferencePair& b);
void sort_pairs(std::vector<PreferencePair>& pairs);

enum class SelectionMode {
  threshold,
  cone,
  /// Threshold orientation and gap test followed by the cone test.
  composite,
};

std::string_view to_string(SelectionMode m);

struct SelectionPolicy {
  SelectionMode mode = SelectionMode::threshold;
  double lambda = 0.5;
  double tau = 0.0;
  double c1_deg = -90.0;
  double c2_deg = 90.0;
  std::optional<std::size_t> budget;
  std::uint64_t seed = 0;

  static SelectionPolicy threshold(double lambda, double tau);
  static SelectionPolicy cone(double c1_deg, double c2_deg);
  /// Named cones: "TS" (-20, 70), "IS" (0, 90), "MIX" (-10, 80). A leading
  /// '-' is accepted.
  static SelectionPolicy preset(std::string_view name);

  void validate() const;
  json to_json() const;
  static SelectionPolicy from_json(const json& obj);
};

/// The 180-degree cone centred on the weighted-score gradient direction
/// atan2(1 - lambda, lambda); equivalent to the tau = 0 threshold rule.
std::pair<double, double> cone_for_lambda(double lambda);

struct ScoredGroup {
  std::string prompt_id;
  std::vector<ScoredSample> samples;
};

/// Groups by prompt id; groups and their members come out sorted by id.
std::vector<ScoredGroup> group_by_prompt(std::vector<ScoredSample> scores);

/// All unordered within-prompt pairs as (smaller id, larger id), sorted.
std::vector<std::pair<std::string, std::string>> enumerate_candidates(
    std::span<const ScoredSample> group);

struct PairGeometry {
  double delta_ts = 0.0;
  double delta_is = 0.0;
  double angle_deg = 0.0;
};

/// atan2(delta_is, delta_ts) in degrees, mapped into (-180, 180].
double improvement_angle_deg(double delta_ts, double delta_is);

/// Geometry with `a` as winner. Throws DegeneratePair when both deltas are 0.
PairGeometry pair_geometry(const ScoredSample& a, const ScoredSample& b);

inline constexpr std::size_t kAngleBins = 72;  // 5-degree bins over (-180, 180]

struct SelectionDiagnostics {
  std::size_t candidates = 0;
  std::size_t dropped_degenerate = 0;
  std::size_t dropped_by_policy = 0;
  std::size_t kept = 0;
  std::size_t kept_after_budget = 0;
  std::array<std::size_t, kAngleBins> angle_histogram{};

  void add_angle(double angle_deg);
  void merge(const SelectionDiagnostics& other);
  json to_json() const;
};

struct SelectionResult {
  std::vector<PreferencePair> pairs;
  SelectionDiagnostics diagnostics;
};

/// Selection kernel for one prompt group; appends pairs sorted by
/// (winner_id, loser_id). The policy must already be validated.
void select_group(const ScoredGroup& group, const SelectionPolicy& policy,
                  std::vector<PreferencePair>& out, SelectionDiagnostics& diag);

/// Applies `policy` to every group (parallel over groups), then the budget.
std::vector<PreferencePair> select_pairs(std::span<const ScoredGroup> groups,
                                         const SelectionPolicy& policy,
                                         SelectionDiagnostics* diagnostics = nullptr);

/// Serial reference implementation of select_pairs.
std::vector<PreferencePair> select_pairs_reference(std::span<const ScoredGroup> groups,
                                                   const SelectionPolicy& policy,
                                                   SelectionDiagnostics* diagnostics = nullptr);

std::vector<PreferencePair> threshold_select(std::span<const ScoredGroup> groups, double lambda,
                                             double tau);

std::vector<PreferencePair> cone_select(std::span<const ScoredGroup> groups, double c1_deg,
                                        double c2_deg);

/// Number of pairs a retention fraction asks for: ceil(fraction * n), with
/// products that are integral up to rounding treated as integral.
std::size_t retention_count(double fraction, std::size_t n);

/// Largest tau for which the strict rule gap > tau keeps at least
/// retention_count(fraction, n) of `gaps`.
double retention_threshold(std::span<const double> gaps, double fraction);
double retention_threshold(std::span<const PreferencePair> pairs, double fraction);

/// Uniform random subset of exactly `budget` pairs when over budget, else the
/// input. Output is sorted by (prompt_id, winner_id, loser_id).
std::vector<PreferencePair> subsample(std::vector<PreferencePair> pairs, std::size_t budget,
                                      std::uint64_t seed);

// PAIRS-JSONL
using PromptTextLookup = std::unordered_map<std::string, std::string>;

json pair_to_json(const PreferencePair& p, const json& policy_echo, const PromptTextLookup* texts);
PreferencePair pair_from_json(const json& obj);
std::string pairs_jsonl(const std::vector<PreferencePair>& pairs, const SelectionPolicy& policy,
                        const PromptTextLookup* texts);
void write_pairs_jsonl(const std::filesystem::path& path, const std::vector<PreferencePair>& pairs,
                       const SelectionPolicy& policy, const PromptTextLookup* texts);
std::vector<PreferencePair> read_pairs_jsonl(const std::filesystem::path& path);

/// Reads a SCORES-JSONL file one prompt group at a time. The file must be
/// sorted by (prompt_id, sample_id), as SCORES-JSONL writers guarantee.
class ScoresGroupReader {
 public:
  explicit ScoresGroupReader(const std::filesystem::path& path);
  std::optional<ScoredGroup> next();

 private:
  JsonlReader reader_;
  std::optional<ScoredSample> pending_;
  std::size_t pending_line_ = 0;
  std::string last_prompt_;
  std::string last_sample_;
  bool started_ = false;

  std::optional<ScoredSample> read_one();
};

}  // namespace pairforge
