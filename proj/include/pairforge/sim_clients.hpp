#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "pairforge/orchestrator.hpp"
#include "pairforge/simkit.hpp"

namespace pairforge::sim {

/// Checkpoint handles of the synthetic clients carry the world mean, so the
/// clients themselves hold no state between calls: "sim:<ts>:<is>".
std::string world_handle(double mean_ts, double mean_is);
/// Applies a handle to `base`; an empty handle leaves `base` unchanged.
SynthWorld world_from_handle(const SynthWorld& base, const std::string& handle);

json world_to_json(const SynthWorld& world);
SynthWorld world_from_json(const json& obj);

/// Image embedding whose cosine to axis 0 is `ts` and to axis 1 is `is`.
/// Points outside the unit disc are scaled back onto it.
std::vector<double> synth_vector(double ts, double is, std::size_t dim);

class SimGenerator : public Client {
 public:
  explicit SimGenerator(SynthWorld base) : base_(base) {}
  json call(const json& request) override;

 private:
  SynthWorld base_;
};

/// Turns the generator's sim:// URIs back into vectors and writes EMB-JSONL.
class SimEmbedder : public Client {
 public:
  explicit SimEmbedder(std::size_t dim) : dim_(dim) {}
  json call(const json& request) override;

 private:
  std::size_t dim_;
};

/// Reads the selected pairs and moves the world mean with synth_update.
class SimTrainer : public Client {
 public:
  explicit SimTrainer(SynthWorld base) : base_(base) {}
  json call(const json& request) override;

 private:
  SynthWorld base_;
};

CampaignClients sim_clients(const SynthWorld& base, std::size_t dim);

/// Writes prompts.jsonl, prompt_embeddings.jsonl and refs.jsonl under `dir`
/// and points the config at them. Every prompt embedding is axis 0 and every
/// reference is axis 1.
void write_sim_inputs(const std::filesystem::path& dir, CampaignConfig& config,
                      std::size_t n_refs = 4);

/// Small campaign on the synthetic world used by `pairforge sim` and tests.
CampaignConfig sim_campaign_config(const SelectionPolicy& policy, std::size_t rounds,
                                   std::uint64_t seed);

/// Default synthetic world for campaigns: centered noise, unit-step drift.
SynthWorld sim_default_world(std::uint64_t seed);

}  // namespace pairforge::sim
