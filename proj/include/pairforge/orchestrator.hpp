#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pairforge/io.hpp"
#include "pairforge/pairing.hpp"
#include "pairforge/scoring.hpp"

namespace pairforge {

/// Opaque trainer hyperparameters passed through to the trainer client.
/// Known names: "sd2", "sdxl_lora".
json trainer_profile_preset(std::string_view name);

struct CampaignConfig {
  std::string concept_id = "concept";
  std::size_t n_prompts = 1000;
  std::size_t m_per_prompt = 10;
  std::size_t rounds = 2;
  SelectionPolicy policy = SelectionPolicy::preset("MIX");
  std::size_t epochs_per_pair = 5;
  std::size_t batch_size = 256;
  std::size_t dim = kDefaultEmbeddingDim;
  std::uint64_t seed = 0;
  bool resample_prompts = false;

  std::string prompts_path;            ///< PROMPTS-JSONL
  std::string prompt_embeddings_path;  ///< EMB-JSONL, kind text, id = prompt_id
  std::string refs_path;               ///< EMB-JSONL, kind image
  std::string initial_checkpoint;

  std::string generator_command;
  std::string embedder_command;
  std::string trainer_command;

  json trainer_profile = trainer_profile_preset("sd2");

  /// Throws InvalidConfig; returns non-fatal warnings.
  std::vector<std::string> validate() const;
  json to_json() const;
  /// Relative input paths are resolved against `base_dir`.
  static CampaignConfig from_json(const json& obj, const std::filesystem::path& base_dir = {});
};

struct RoundPoint {
  std::size_t round = 0;
  double mean_ts = 0.0;
  double mean_is = 0.0;
};

struct CampaignState {
  std::size_t round_index = 0;  ///< completed training rounds
  std::string checkpoint_handle;
  std::vector<RoundPoint> trajectory;  ///< round 0 is the baseline
  std::vector<std::string> manifests;  ///< paths relative to the working directory
  std::uint64_t rng_state = 0;

  json to_json() const;
  static CampaignState from_json(const json& obj);
};

/// ceil(epochs_per_pair * n_pairs / batch_size).
std::size_t compute_training_steps(std::size_t n_pairs, std::size_t batch_size,
                                   std::size_t epochs_per_pair);

/// A generator, embedder or trainer. Requests and responses are JSON
/// documents; see docs/clients.md for the schemas.
class Client {
 public:
  virtual ~Client() = default;
  virtual json call(const json& request) = 0;
};

/// Runs `command <request.json> <response.json>` through the shell and reads
/// the response file. A non-zero exit or unreadable response is a failure of
/// kind `failure`.
class CommandClient : public Client {
 public:
  CommandClient(std::string command, std::string role, ErrorKind failure);
  json call(const json& request) override;

 private:
  std::string command_;
  std::string role_;
  ErrorKind failure_;
};

struct CampaignClients {
  std::shared_ptr<Client> generator;
  std::shared_ptr<Client> embedder;
  std::shared_ptr<Client> trainer;
};

/// Command clients from the config, overridden by PAIRFORGE_GENERATOR,
/// PAIRFORGE_EMBEDDER and PAIRFORGE_TRAINER when set.
CampaignClients command_clients(const CampaignConfig& config);

/// Append-only JSONL journal. Every entry gets a sequence number; the hook
/// runs after each entry is durably written.
class Journal {
 public:
  explicit Journal(std::filesystem::path path);

  void append(json entry);
  /// Response recorded by the "end" entry of a client step, if any.
  std::optional<json> completed(const std::string& step) const;
  std::size_t size() const noexcept { return next_seq_; }
  void set_hook(std::function<void(std::size_t)> hook) { hook_ = std::move(hook); }

 private:
  std::filesystem::path path_;
  std::size_t next_seq_ = 0;
  std::map<std::string, json> completed_;
  std::function<void(std::size_t)> hook_;
};

class CampaignRunner {
 public:
  CampaignRunner(CampaignConfig config, std::filesystem::path workdir, CampaignClients clients);

  /// Runs the baseline and every configured round. With `resume`, continues
  /// from the state and journal already in the working directory.
  CampaignState run(bool resume);

  /// Loads existing state (resume) or prepares a fresh working directory and
  /// measures the baseline.
  CampaignState start(bool resume);

  /// One select -> train -> generate -> embed -> score cycle.
  CampaignState run_round(const CampaignState& state);

  /// Called after each journal entry; tests use it to simulate crashes.
  void set_journal_hook(std::function<void(std::size_t)> hook);

  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  const std::filesystem::path& workdir() const noexcept { return workdir_; }

 private:
  struct PromptPool {
    std::vector<PromptRecord> records;  // in file order
    PromptLookup lookup;
  };

  CampaignConfig config_;
  std::filesystem::path workdir_;
  CampaignClients clients_;
  std::unique_ptr<Journal> journal_;
  std::function<void(std::size_t)> hook_;
  std::optional<PromptPool> pool_;
  std::optional<ConceptRefSet> refs_;
  std::vector<std::string> warnings_;

  void load_inputs();
  std::vector<const PromptRecord*> active_prompts(std::size_t round) const;
  json call_client(Client& client, const std::string& role, std::size_t round, const json& request);
  RoundPoint generate_and_score(std::size_t round, const std::string& checkpoint,
                                CampaignState& state);
  void record_manifest(std::size_t round, const std::string& rel_path, const std::string& content,
                       CampaignState& state);
  void commit(const CampaignState& state);
};

CampaignState run_campaign(const CampaignConfig& config, const std::filesystem::path& workdir,
                           const CampaignClients& clients, bool resume = false);

/// Trajectory CSV rows for a campaign state, labelled round_<k>.
std::string campaign_trajectory_csv(const CampaignState& state);

}  // namespace pairforge
