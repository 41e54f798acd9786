#include "pairforge/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pairforge::sim {

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

double margin(double lw_theta, double lw_ref, double ll_theta, double ll_ref, double beta) {
  for (double v : {lw_theta, lw_ref, ll_theta, ll_ref, beta}) {
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteInput, "DPO inputs must be finite");
  }
  if (!(beta > 0.0)) fail(ErrorKind::InvalidArgument, "beta must be positive");
  return beta * ((lw_theta - lw_ref) - (ll_theta - ll_ref));
}

}  // namespace

double dpo_pair_loss(double lw_theta, double lw_ref, double ll_theta, double ll_ref, double beta) {
  return softplus(-margin(lw_theta, lw_ref, ll_theta, ll_ref, beta));
}

DpoGrad dpo_grad(double lw_theta, double lw_ref, double ll_theta, double ll_ref, double beta) {
  const double z = margin(lw_theta, lw_ref, ll_theta, ll_ref, beta);
  const double s = sigmoid(-z);
  return {-beta * s, beta * s};
}

ToyPolicy::ToyPolicy(std::vector<ToyOutcome> outcomes) : outcomes_(std::move(outcomes)) {
  if (outcomes_.empty()) fail(ErrorKind::InvalidArgument, "toy policy needs at least one outcome");
  for (const auto& o : outcomes_) {
    if (!std::isfinite(o.logit)) fail(ErrorKind::NonFiniteInput, "toy logits must be finite");
  }
}

std::size_t ToyPolicy::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < outcomes_.size(); ++i) {
    if (outcomes_[i].id == id) return i;
  }
  fail(ErrorKind::UnknownOutcome, "unknown outcome '" + id + "'");
}

double ToyPolicy::log_prob(std::size_t i) const {
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& o : outcomes_) mx = std::max(mx, o.logit);
  double sum = 0.0;
  for (const auto& o : outcomes_) sum += std::exp(o.logit - mx);
  return outcomes_[i].logit - mx - std::log(sum);
}

std::vector<double> ToyPolicy::probabilities() const {
  std::vector<double> p(outcomes_.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(log_prob(i));
  return p;
}

namespace {

struct IndexedPair {
  std::size_t w;
  std::size_t l;
};

std::vector<IndexedPair> resolve(const ToyPolicy& policy, const ToyPolicy& ref,
                                 std::span<const ToyPair> pairs) {
  if (policy.size() != ref.size()) {
    fail(ErrorKind::InvalidArgument, "policy and reference have different outcome spaces");
  }
  std::vector<IndexedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto w = policy.index_of(p.winner);
    const auto l = policy.index_of(p.loser);
    if (ref.outcomes()[w].id != p.winner || ref.outcomes()[l].id != p.loser) {
      fail(ErrorKind::UnknownOutcome, "reference outcome order differs from the policy");
    }
    out.push_back({w, l});
  }
  return out;
}

}  // namespace

double mean_preference_probability(const ToyPolicy& policy, const ToyPolicy& ref,
                                   std::span<const ToyPair> pairs, double beta) {
  const auto idx = resolve(policy, ref, pairs);
  if (idx.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : idx) {
    const double z = beta * ((policy.log_prob(p.w) - ref.log_prob(p.w)) -
                             (policy.log_prob(p.l) - ref.log_prob(p.l)));
    sum += sigmoid(z);
  }
  return sum / static_cast<double>(idx.size());
}

double mean_dpo_loss(const ToyPolicy& policy, const ToyPolicy& ref, std::span<const ToyPair> pairs,
                     double beta) {
  const auto idx = resolve(policy, ref, pairs);
  if (idx.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : idx) {
    sum += dpo_pair_loss(policy.log_prob(p.w), ref.log_prob(p.w), policy.log_prob(p.l),
                         ref.log_prob(p.l), beta);
  }
  return sum / static_cast<double>(idx.size());
}

ToyPolicy toy_train(ToyPolicy policy, const ToyPolicy& ref, std::span<const ToyPair> pairs,
                    double beta, double lr, std::size_t steps) {
  const auto idx = resolve(policy, ref, pairs);
  if (idx.empty()) return policy;
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  std::vector<double> grad(policy.size());
  for (std::size_t step = 0; step < steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& p : idx) {
      // d log p_i / d logit_j = [i == j] - p_j; the -p_j terms of winner and
      // loser cancel because their loss gradients are equal and opposite.
      const auto g = dpo_grad(policy.log_prob(p.w), ref.log_prob(p.w), policy.log_prob(p.l),
                              ref.log_prob(p.l), beta);
      grad[p.w] += g.d_winner * inv_n;
      grad[p.l] += g.d_loser * inv_n;
    }
    for (std::size_t j = 0; j < grad.size(); ++j) policy.add_to_logit(j, -lr * grad[j]);
  }
  return policy;
}

std::vector<SynthSample> synth_generate(const SynthWorld& world, std::size_t n_prompts,
                                        std::size_t m_per_prompt, std::uint64_t stream) {
  if (n_prompts == 0 || m_per_prompt == 0) {
    fail(ErrorKind::InvalidArgument, "synth_generate needs positive counts");
  }
  const std::size_t n = n_prompts * m_per_prompt;
  SeededRng rng(mix_seed(world.seed, stream));
  std::vector<double> nts(n), nis(n);
  for (std::size_t i = 0; i < n; ++i) {
    nts[i] = world.noise_scale * rng.normal();
    nis[i] = world.noise_scale * rng.normal();
  }
  if (world.centered_noise) {
    double sts = 0.0, sis = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sts += nts[i];
      sis += nis[i];
    }
    sts /= static_cast<double>(n);
    sis /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      nts[i] -= sts;
      nis[i] -= sis;
    }
  }
  std::vector<SynthSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].prompt_index = i / m_per_prompt;
    out[i].sample_index = i % m_per_prompt;
    out[i].ts = std::clamp(world.mean_ts + nts[i], -1.0, 1.0);
    out[i].is = std::clamp(world.mean_is + nis[i], -1.0, 1.0);
  }
  return out;
}

SynthWorld synth_update(SynthWorld world, std::span<const PreferencePair> selected) {
  if (selected.empty()) return world;
  double dts = 0.0, dis = 0.0;
  for (const auto& p : selected) {
    dts += p.delta_ts;
    dis += p.delta_is;
  }
  dts /= static_cast<double>(selected.size());
  dis /= static_cast<double>(selected.size());
  const double norm = std::hypot(dts, dis);
  if (!(norm > 0.0)) return world;
  world.mean_ts += world.drift_rate * dts / norm;
  world.mean_is += world.drift_rate * dis / norm;
  if (world.fidelity_decay > 0.0) {
    const double after = std::hypot(world.mean_ts - world.anchor_ts, world.mean_is - world.anchor_is);
    world.mean_is -= world.fidelity_decay * after;
  }
  return world;
}

}  // namespace pairforge::sim
