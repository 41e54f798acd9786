#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pairforge/pairing.hpp"

namespace pairforge::sim {

/// Numerically stable softplus(x) = log(1 + e^x).
double softplus(double x);

/// Logistic sigmoid, stable for large |x|.
double sigmoid(double x);

/// DPO loss of one pair: -log sigmoid(beta * ((lw_theta - lw_ref) - (ll_theta - ll_ref))).
double dpo_pair_loss(double lw_theta, double lw_ref, double ll_theta, double ll_ref, double beta);

struct DpoGrad {
  double d_winner = 0.0;  ///< dL / d lw_theta
  double d_loser = 0.0;   ///< dL / d ll_theta
};

DpoGrad dpo_grad(double lw_theta, double lw_ref, double ll_theta, double ll_ref, double beta);

struct ToyOutcome {
  std::string id;
  double ts = 0.0;
  double is = 0.0;
  double logit = 0.0;
};

/// Softmax policy over a small discrete outcome space.
class ToyPolicy {
 public:
  ToyPolicy() = default;
  explicit ToyPolicy(std::vector<ToyOutcome> outcomes);

  const std::vector<ToyOutcome>& outcomes() const noexcept { return outcomes_; }
  std::size_t size() const noexcept { return outcomes_.size(); }
  std::size_t index_of(const std::string& id) const;
  double log_prob(std::size_t i) const;
  std::vector<double> probabilities() const;
  void add_to_logit(std::size_t i, double delta) { outcomes_[i].logit += delta; }

 private:
  std::vector<ToyOutcome> outcomes_;
};

struct ToyPair {
  std::string winner;
  std::string loser;
};

/// Mean over pairs of sigmoid(beta * delta log-ratio).
double mean_preference_probability(const ToyPolicy& policy, const ToyPolicy& ref,
                                   std::span<const ToyPair> pairs, double beta);

double mean_dpo_loss(const ToyPolicy& policy, const ToyPolicy& ref, std::span<const ToyPair> pairs,
                     double beta);

/// Full-batch gradient descent on the mean DPO loss over the logits.
ToyPolicy toy_train(ToyPolicy policy, const ToyPolicy& ref, std::span<const ToyPair> pairs,
                    double beta, double lr, std::size_t steps);

struct SynthSample {
  std::size_t prompt_index = 0;
  std::size_t sample_index = 0;
  double ts = 0.0;
  double is = 0.0;
};

/// Stand-in for a generator's output distribution in the (ts, is) plane.
struct SynthWorld {
  double mean_ts = 0.3;
  double mean_is = 0.6;
  double noise_scale = 0.05;
  double drift_rate = 0.02;
  std::uint64_t seed = 0;
  /// Subtract the per-draw noise mean so a batch's sample mean equals the
  /// world mean exactly (before clamping).
  bool centered_noise = false;
  /// Per-update loss of IS proportional to the distance travelled from the
  /// anchor; 0 disables it.
  double fidelity_decay = 0.0;
  double anchor_ts = 0.3;
  double anchor_is = 0.6;
};

/// n_prompts * m_per_prompt samples around the world mean, clamped to
/// [-1, 1]^2. `stream` selects an independent noise stream (e.g. the round).
std::vector<SynthSample> synth_generate(const SynthWorld& world, std::size_t n_prompts,
                                        std::size_t m_per_prompt, std::uint64_t stream = 0);

/// Moves the world mean by drift_rate along the unit direction of the mean
/// selected improvement (delta_ts, delta_is). Empty or cancelling selections
/// leave the mean unchanged.
SynthWorld synth_update(SynthWorld world, std::span<const PreferencePair> selected);

}  // namespace pairforge::sim
