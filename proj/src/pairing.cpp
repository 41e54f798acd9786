#include "pairforge/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pairforge {

namespace {

bool in_open_cone(double angle, double c1, double c2) { return angle > c1 && angle < c2; }

PreferencePair make_pair(const std::string& prompt_id, const ScoredSample& w, const ScoredSample& l) {
  PreferencePair p;
  p.prompt_id = prompt_id;
  p.winner_id = w.sample_id;
  p.loser_id = l.sample_id;
  p.delta_ts = w.ts - l.ts;
  p.delta_is = w.is - l.is;
  p.angle_deg = improvement_angle_deg(p.delta_ts, p.delta_is);
  p.winner_uri = w.artifact_uri;
  p.loser_uri = l.artifact_uri;
  return p;
}

std::vector<const ScoredSample*> sorted_members(const ScoredGroup& group) {
  std::vector<const ScoredSample*> members;
  members.reserve(group.samples.size());
  for (const auto& s : group.samples) {
    if (s.prompt_id != group.prompt_id) {
      fail(ErrorKind::MixedPromptGroup, "sample '" + s.sample_id + "' belongs to prompt '" +
                                            s.prompt_id + "', not '" + group.prompt_id + "'");
    }
    members.push_back(&s);
  }
  std::sort(members.begin(), members.end(),
            [](const ScoredSample* a, const ScoredSample* b) { return a->sample_id < b->sample_id; });
  for (std::size_t i = 1; i < members.size(); ++i) {
    if (members[i]->sample_id == members[i - 1]->sample_id) {
      fail(ErrorKind::InvalidArgument, "duplicate sample id '" + members[i]->sample_id +
                                           "' in prompt '" + group.prompt_id + "'");
    }
  }
  return members;
}

}  // namespace

bool pair_order_less(const PreferencePair& a, const PreferencePair& b) {
  if (a.prompt_id != b.prompt_id) return a.prompt_id < b.prompt_id;
  if (a.winner_id != b.winner_id) return a.winner_id < b.winner_id;
  return a.loser_id < b.loser_id;
}

void sort_pairs(std::vector<PreferencePair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), pair_order_less);
}

std::string_view to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::threshold: return "threshold";
    case SelectionMode::cone: return "cone";
    case SelectionMode::composite: return "composite";
  }
  return "threshold";
}

SelectionPolicy SelectionPolicy::threshold(double lambda, double tau) {
  SelectionPolicy p;
  p.mode = SelectionMode::threshold;
  p.lambda = lambda;
  p.tau = tau;
  return p;
}

SelectionPolicy SelectionPolicy::cone(double c1_deg, double c2_deg) {
  SelectionPolicy p;
  p.mode = SelectionMode::cone;
  p.c1_deg = c1_deg;
  p.c2_deg = c2_deg;
  return p;
}

SelectionPolicy SelectionPolicy::preset(std::string_view name) {
  if (!name.empty() && name.front() == '-') name.remove_prefix(1);
  if (name == "TS") return cone(-20.0, 70.0);
  if (name == "IS") return cone(0.0, 90.0);
  if (name == "MIX") return cone(-10.0, 80.0);
  fail(ErrorKind::InvalidPolicy, "unknown preset '" + std::string(name) + "' (expected TS, IS or MIX)");
}

void SelectionPolicy::validate() const {
  if (mode == SelectionMode::threshold || mode == SelectionMode::composite) {
    check_lambda(lambda);
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
      fail(ErrorKind::InvalidPolicy, "tau must be finite and >= 0");
    }
  }
  if (mode == SelectionMode::cone || mode == SelectionMode::composite) {
    if (!std::isfinite(c1_deg) || !std::isfinite(c2_deg) || c1_deg < -180.0 || c2_deg > 180.0 ||
        !(c1_deg < c2_deg) || c2_deg - c1_deg > 180.0) {
      fail(ErrorKind::InvalidCone, "cone bounds must satisfy -180 <= c1 < c2 <= 180 and c2 - c1 <= 180");
    }
  }
  if (budget && *budget == 0) fail(ErrorKind::InvalidPolicy, "budget must be positive");
}

json SelectionPolicy::to_json() const {
  json obj = {{"mode", std::string(to_string(mode))}};
  if (mode != SelectionMode::cone) {
    obj["lambda"] = lambda;
    obj["tau"] = tau;
  }
  if (mode != SelectionMode::threshold) {
    obj["c1_deg"] = c1_deg;
    obj["c2_deg"] = c2_deg;
  }
  if (mode == SelectionMode::composite) obj["extension"] = "threshold_then_cone";
  if (budget) obj["budget"] = *budget;
  obj["seed"] = seed;
  return obj;
}

SelectionPolicy SelectionPolicy::from_json(const json& obj) {
  SelectionPolicy p;
  const auto mode = get_string(obj, "mode");
  if (mode == "threshold") {
    p.mode = SelectionMode::threshold;
  } else if (mode == "cone") {
    p.mode = SelectionMode::cone;
  } else if (mode == "composite") {
    p.mode = SelectionMode::composite;
  } else {
    fail(ErrorKind::InvalidPolicy, "unknown selection mode '" + mode + "'");
  }
  if (p.mode != SelectionMode::cone) {
    p.lambda = get_number(obj, "lambda");
    p.tau = get_optional_number(obj, "tau").value_or(0.0);
  }
  if (p.mode != SelectionMode::threshold) {
    p.c1_deg = get_number(obj, "c1_deg");
    p.c2_deg = get_number(obj, "c2_deg");
  }
  if (auto it = obj.find("budget"); it != obj.end() && !it->is_null()) {
    p.budget = it->get<std::size_t>();
  }
  if (auto it = obj.find("seed"); it != obj.end()) p.seed = it->get<std::uint64_t>();
  p.validate();
  return p;
}

std::pair<double, double> cone_for_lambda(double lambda) {
  check_lambda(lambda);
  const double center = std::atan2(1.0 - lambda, lambda) * (180.0 / std::numbers::pi);
  return {center - 90.0, center + 90.0};
}

std::vector<ScoredGroup> group_by_prompt(std::vector<ScoredSample> scores) {
  sort_scores(scores);
  std::vector<ScoredGroup> groups;
  for (auto& s : scores) {
    if (groups.empty() || groups.back().prompt_id != s.prompt_id) {
      groups.push_back({s.prompt_id, {}});
    }
    groups.back().samples.push_back(std::move(s));
  }
  return groups;
}

std::vector<std::pair<std::string, std::string>> enumerate_candidates(
    std::span<const ScoredSample> group) {
  std::vector<std::pair<std::string, std::string>> out;
  if (group.size() < 2) return out;
  ScoredGroup g{group.front().prompt_id, {group.begin(), group.end()}};
  const auto members = sorted_members(g);
  out.reserve(members.size() * (members.size() - 1) / 2);
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      out.emplace_back(members[i]->sample_id, members[j]->sample_id);
    }
  }
  return out;
}

double improvement_angle_deg(double delta_ts, double delta_is) {
  const double deg = std::atan2(delta_is, delta_ts) * (180.0 / std::numbers::pi);
  return deg <= -180.0 ? 180.0 : deg;
}

PairGeometry pair_geometry(const ScoredSample& a, const ScoredSample& b) {
  if (a.prompt_id != b.prompt_id) {
    fail(ErrorKind::MixedPromptGroup, "samples '" + a.sample_id + "' and '" + b.sample_id +
                                          "' belong to different prompts");
  }
  PairGeometry g;
  g.delta_ts = a.ts - b.ts;
  g.delta_is = a.is - b.is;
  if (g.delta_ts == 0.0 && g.delta_is == 0.0) {
    fail(ErrorKind::DegeneratePair,
         "samples '" + a.sample_id + "' and '" + b.sample_id + "' have identical scores");
  }
  g.angle_deg = improvement_angle_deg(g.delta_ts, g.delta_is);
  return g;
}

void SelectionDiagnostics::add_angle(double angle_deg) {
  auto bin = static_cast<std::ptrdiff_t>(std::floor((angle_deg + 180.0) / 5.0));
  bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(kAngleBins) - 1);
  ++angle_histogram[static_cast<std::size_t>(bin)];
}

void SelectionDiagnostics::merge(const SelectionDiagnostics& other) {
  candidates += other.candidates;
  dropped_degenerate += other.dropped_degenerate;
  dropped_by_policy += other.dropped_by_policy;
  kept += other.kept;
  kept_after_budget += other.kept_after_budget;
  for (std::size_t i = 0; i < kAngleBins; ++i) angle_histogram[i] += other.angle_histogram[i];
}

json SelectionDiagnostics::to_json() const {
  json bins = json::array();
  for (std::size_t i = 0; i < kAngleBins; ++i) {
    const int lo = -180 + 5 * static_cast<int>(i);
    bins.push_back({{"lo_deg", lo}, {"hi_deg", lo + 5}, {"count", angle_histogram[i]}});
  }
  return {{"candidates", candidates},
          {"kept", kept},
          {"kept_after_budget", kept_after_budget},
          {"dropped_degenerate", dropped_degenerate},
          {"dropped_by_policy", dropped_by_policy},
          {"angle_histogram", bins}};
}

void select_group(const ScoredGroup& group, const SelectionPolicy& policy,
                  std::vector<PreferencePair>& out, SelectionDiagnostics& diag) {
  const auto members = sorted_members(group);
  const std::size_t first = out.size();
  const bool use_score = policy.mode != SelectionMode::cone;
  const bool use_cone = policy.mode != SelectionMode::threshold;

  std::vector<double> score(members.size(), 0.0);
  if (use_score) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      score[i] = weighted_score(members[i]->ts, members[i]->is, policy.lambda);
    }
  }

  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      ++diag.candidates;
      const ScoredSample& a = *members[i];
      const ScoredSample& b = *members[j];
      if (a.ts == b.ts && a.is == b.is) {
        ++diag.dropped_degenerate;
        continue;
      }
      if (use_score) {
        const bool a_wins = score[i] >= score[j];
        const double gap = a_wins ? score[i] - score[j] : score[j] - score[i];
        if (!(gap > policy.tau)) {
          ++diag.dropped_by_policy;
          continue;
        }
        auto p = a_wins ? make_pair(group.prompt_id, a, b) : make_pair(group.prompt_id, b, a);
        if (use_cone && !in_open_cone(p.angle_deg, policy.c1_deg, policy.c2_deg)) {
          ++diag.dropped_by_policy;
          continue;
        }
        p.score_gap = gap;
        out.push_back(std::move(p));
      } else {
        // Width <= 180 and open bounds: at most one orientation can qualify.
        auto p = make_pair(group.prompt_id, a, b);
        if (!in_open_cone(p.angle_deg, policy.c1_deg, policy.c2_deg)) {
          p = make_pair(group.prompt_id, b, a);
          if (!in_open_cone(p.angle_deg, policy.c1_deg, policy.c2_deg)) {
            ++diag.dropped_by_policy;
            continue;
          }
        }
        out.push_back(std::move(p));
      }
      ++diag.kept;
      diag.add_angle(out.back().angle_deg);
    }
  }
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(), pair_order_less);
}

namespace {

std::vector<PreferencePair> finish_selection(std::vector<PreferencePair> pairs,
                                             const SelectionPolicy& policy,
                                             SelectionDiagnostics& diag) {
  sort_pairs(pairs);
  if (policy.budget) pairs = subsample(std::move(pairs), *policy.budget, policy.seed);
  diag.kept_after_budget = pairs.size();
  return pairs;
}

}  // namespace

std::vector<PreferencePair> select_pairs_reference(std::span<const ScoredGroup> groups,
                                                   const SelectionPolicy& policy,
                                                   SelectionDiagnostics* diagnostics) {
  policy.validate();
  SelectionDiagnostics diag;
  std::vector<PreferencePair> pairs;
  for (const auto& g : groups) select_group(g, policy, pairs, diag);
  auto out = finish_selection(std::move(pairs), policy, diag);
  if (diagnostics) *diagnostics = diag;
  return out;
}

std::vector<PreferencePair> select_pairs(std::span<const ScoredGroup> groups,
                                         const SelectionPolicy& policy,
                                         SelectionDiagnostics* diagnostics) {
  policy.validate();
  const auto n = static_cast<std::ptrdiff_t>(groups.size());
  std::vector<std::vector<PreferencePair>> per_group(groups.size());
  std::vector<SelectionDiagnostics> per_diag(groups.size());
  std::vector<std::exception_ptr> errors(groups.size());

#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      select_group(groups[i], policy, per_group[i], per_diag[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SelectionDiagnostics diag;
  std::size_t total = 0;
  for (const auto& v : per_group) total += v.size();
  std::vector<PreferencePair> pairs;
  pairs.reserve(total);
  for (std::size_t i = 0; i < per_group.size(); ++i) {
    diag.merge(per_diag[i]);
    std::move(per_group[i].begin(), per_group[i].end(), std::back_inserter(pairs));
  }
  auto out = finish_selection(std::move(pairs), policy, diag);
  if (diagnostics) *diagnostics = diag;
  return out;
}

std::vector<PreferencePair> threshold_select(std::span<const ScoredGroup> groups, double lambda,
                                             double tau) {
  return select_pairs(groups, SelectionPolicy::threshold(lambda, tau));
}

std::vector<PreferencePair> cone_select(std::span<const ScoredGroup> groups, double c1_deg,
                                        double c2_deg) {
  return select_pairs(groups, SelectionPolicy::cone(c1_deg, c2_deg));
}

std::size_t retention_count(double fraction, std::size_t n) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    fail(ErrorKind::InvalidArgument, "retention fraction must lie in (0, 1]");
  }
  const double x = fraction * static_cast<double>(n);
  const double r = std::round(x);
  const auto k = std::abs(x - r) <= 1e-9 * std::max(1.0, x) ? r : std::ceil(x);
  return std::min(n, std::max<std::size_t>(1, static_cast<std::size_t>(k)));
}

double retention_threshold(std::span<const double> gaps, double fraction) {
  if (gaps.empty()) fail(ErrorKind::EmptyPairSet, "retention_threshold needs at least one gap");
  const std::size_t k = retention_count(fraction, gaps.size());
  std::vector<double> sorted(gaps.begin(), gaps.end());
  for (double g : sorted) {
    if (!std::isfinite(g)) fail(ErrorKind::NonFiniteInput, "score gaps must be finite");
  }
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end(),
                   std::greater<>());
  const double kth = sorted[k - 1];
  // gap > tau keeps the k largest exactly when tau < kth.
  return std::nextafter(kth, -std::numeric_limits<double>::infinity());
}

double retention_threshold(std::span<const PreferencePair> pairs, double fraction) {
  std::vector<double> gaps;
  gaps.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (!p.score_gap) fail(ErrorKind::InvalidArgument, "pair without a score gap");
    gaps.push_back(*p.score_gap);
  }
  return retention_threshold(gaps, fraction);
}

std::vector<PreferencePair> subsample(std::vector<PreferencePair> pairs, std::size_t budget,
                                      std::uint64_t seed) {
  sort_pairs(pairs);
  if (pairs.size() <= budget) return pairs;
  SeededRng rng(seed);
  rng.partial_shuffle(pairs, budget);
  pairs.resize(budget);
  sort_pairs(pairs);
  return pairs;
}

json pair_to_json(const PreferencePair& p, const json& policy_echo, const PromptTextLookup* texts) {
  std::string text;
  if (texts) {
    if (auto it = texts->find(p.prompt_id); it != texts->end()) text = it->second;
  }
  json obj = {{"prompt_id", p.prompt_id}, {"prompt_text", text}, {"winner_id", p.winner_id},
              {"loser_id", p.loser_id}};
  if (p.winner_uri) obj["winner_uri"] = *p.winner_uri;
  if (p.loser_uri) obj["loser_uri"] = *p.loser_uri;
  obj["delta_ts"] = p.delta_ts;
  obj["delta_is"] = p.delta_is;
  obj["angle_deg"] = p.angle_deg;
  if (p.score_gap) obj["score_gap"] = *p.score_gap;
  obj["policy"] = policy_echo;
  return obj;
}

PreferencePair pair_from_json(const json& obj) {
  PreferencePair p;
  p.prompt_id = get_string(obj, "prompt_id");
  p.winner_id = get_string(obj, "winner_id");
  p.loser_id = get_string(obj, "loser_id");
  if (p.winner_id == p.loser_id) fail(ErrorKind::ParseError, "winner and loser are the same sample");
  p.delta_ts = get_number(obj, "delta_ts");
  p.delta_is = get_number(obj, "delta_is");
  p.angle_deg = get_number(obj, "angle_deg");
  p.score_gap = get_optional_number(obj, "score_gap");
  p.winner_uri = get_optional_string(obj, "winner_uri");
  p.loser_uri = get_optional_string(obj, "loser_uri");
  return p;
}

std::string pairs_jsonl(const std::vector<PreferencePair>& pairs, const SelectionPolicy& policy,
                        const PromptTextLookup* texts) {
  const json echo = policy.to_json();
  std::string buf;
  for (const auto& p : pairs) {
    buf += pair_to_json(p, echo, texts).dump();
    buf += '\n';
  }
  return buf;
}

void write_pairs_jsonl(const std::filesystem::path& path, const std::vector<PreferencePair>& pairs,
                       const SelectionPolicy& policy, const PromptTextLookup* texts) {
  atomic_write(path, pairs_jsonl(pairs, policy, texts));
}

std::vector<PreferencePair> read_pairs_jsonl(const std::filesystem::path& path) {
  std::vector<PreferencePair> out;
  for_each_jsonl(path, [&](std::size_t, const json& obj) { out.push_back(pair_from_json(obj)); });
  return out;
}

ScoresGroupReader::ScoresGroupReader(const std::filesystem::path& path) : reader_(path) {}

std::optional<ScoredSample> ScoresGroupReader::read_one() {
  auto obj = reader_.next();
  if (!obj) return std::nullopt;
  ScoredSample s;
  try {
    s = score_from_json(*obj);
  } catch (const Error& e) {
    fail_at_line(reader_.path(), reader_.line_number(), e.what());
  }
  if (started_ && (s.prompt_id < last_prompt_ ||
                   (s.prompt_id == last_prompt_ && s.sample_id <= last_sample_))) {
    fail_at_line(reader_.path(), reader_.line_number(),
                 "scores are not sorted by (prompt_id, sample_id)");
  }
  started_ = true;
  last_prompt_ = s.prompt_id;
  last_sample_ = s.sample_id;
  return s;
}

std::optional<ScoredGroup> ScoresGroupReader::next() {
  if (!pending_) pending_ = read_one();
  if (!pending_) return std::nullopt;
  ScoredGroup g{pending_->prompt_id, {}};
  g.samples.push_back(std::move(*pending_));
  pending_.reset();
  while (auto s = read_one()) {
    if (s->prompt_id != g.prompt_id) {
      pending_ = std::move(s);
      break;
    }
    g.samples.push_back(std::move(*s));
  }
  return g;
}

}  // namespace pairforge
