#include "pairforge/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <unordered_set>

#include <sys/wait.h>

#include "pairforge/evalkit.hpp"
#include "pairforge/prompts.hpp"

namespace pairforge {

namespace fs = std::filesystem;

json trainer_profile_preset(std::string_view name) {
  if (name == "sd2") {
    return {{"name", "sd2"}, {"beta", 5000}, {"learning_rate", 2.5e-6}, {"batch_size", 256}};
  }
  if (name == "sdxl_lora") {
    return {{"name", "sdxl_lora"},
            {"beta", 5000},
            {"learning_rate", 6.4e-5},
            {"batch_size", 64},
            {"lora_rank", 4}};
  }
  fail(ErrorKind::InvalidConfig, "unknown trainer profile '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Config and state

std::vector<std::string> CampaignConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::InvalidConfig, what); };
  if (concept_id.empty()) bad("concept_id must be set");
  if (n_prompts == 0) bad("n_prompts must be positive");
  if (m_per_prompt == 0) bad("m_per_prompt must be positive");
  if (rounds == 0) bad("rounds must be at least 1");
  if (epochs_per_pair == 0) bad("epochs_per_pair must be positive");
  if (batch_size == 0) bad("batch_size must be positive");
  if (dim == 0) bad("dim must be positive");
  try {
    policy.validate();
  } catch (const Error& e) {
    bad(std::string("policy: ") + e.what());
  }
  std::vector<std::string> warnings;
  if (rounds > 10) {
    warnings.push_back("rounds = " + std::to_string(rounds) +
                       " exceeds 10; long campaigns tend to drift from the reference model");
  }
  return warnings;
}

json CampaignConfig::to_json() const {
  return {{"concept_id", concept_id},
          {"n_prompts", n_prompts},
          {"m_per_prompt", m_per_prompt},
          {"rounds", rounds},
          {"policy", policy.to_json()},
          {"epochs_per_pair", epochs_per_pair},
          {"batch_size", batch_size},
          {"dim", dim},
          {"seed", seed},
          {"resample_prompts", resample_prompts},
          {"inputs",
           {{"prompts", prompts_path},
            {"prompt_embeddings", prompt_embeddings_path},
            {"refs", refs_path}}},
          {"initial_checkpoint", initial_checkpoint},
          {"clients",
           {{"generator", generator_command},
            {"embedder", embedder_command},
            {"trainer", trainer_command}}},
          {"trainer_profile", trainer_profile}};
}

CampaignConfig CampaignConfig::from_json(const json& obj, const fs::path& base_dir) {
  CampaignConfig c;
  try {
    auto size_field = [&](const char* key, std::size_t& out) {
      if (auto it = obj.find(key); it != obj.end()) out = it->get<std::size_t>();
    };
    c.concept_id = obj.value("concept_id", c.concept_id);
    size_field("n_prompts", c.n_prompts);
    size_field("m_per_prompt", c.m_per_prompt);
    size_field("rounds", c.rounds);
    size_field("epochs_per_pair", c.epochs_per_pair);
    size_field("batch_size", c.batch_size);
    size_field("dim", c.dim);
    if (auto it = obj.find("seed"); it != obj.end()) c.seed = it->get<std::uint64_t>();
    c.resample_prompts = obj.value("resample_prompts", false);
    if (auto it = obj.find("policy"); it != obj.end()) {
      if (it->contains("preset")) {
        auto p = SelectionPolicy::preset(it->at("preset").get<std::string>());
        if (auto b = it->find("budget"); b != it->end() && !b->is_null()) p.budget = b->get<std::size_t>();
        if (auto s = it->find("seed"); s != it->end()) p.seed = s->get<std::uint64_t>();
        c.policy = p;
      } else {
        c.policy = SelectionPolicy::from_json(*it);
      }
    }
    auto resolve = [&](const std::string& p) {
      if (p.empty() || base_dir.empty() || fs::path(p).is_absolute()) return p;
      return (base_dir / p).lexically_normal().string();
    };
    if (auto it = obj.find("inputs"); it != obj.end()) {
      c.prompts_path = resolve(it->value("prompts", ""));
      c.prompt_embeddings_path = resolve(it->value("prompt_embeddings", ""));
      c.refs_path = resolve(it->value("refs", ""));
    }
    c.initial_checkpoint = obj.value("initial_checkpoint", "");
    if (auto it = obj.find("clients"); it != obj.end()) {
      c.generator_command = it->value("generator", "");
      c.embedder_command = it->value("embedder", "");
      c.trainer_command = it->value("trainer", "");
    }
    if (auto it = obj.find("trainer_profile"); it != obj.end()) {
      c.trainer_profile = it->is_string() ? trainer_profile_preset(it->get<std::string>()) : *it;
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidConfig, std::string("campaign config: ") + e.what());
  }
  return c;
}

json CampaignState::to_json() const {
  json traj = json::array();
  for (const auto& p : trajectory) {
    traj.push_back({{"round", p.round}, {"mean_ts", p.mean_ts}, {"mean_is", p.mean_is}});
  }
  return {{"round_index", round_index},
          {"checkpoint_handle", checkpoint_handle},
          {"trajectory", traj},
          {"manifests", manifests},
          {"rng_state", rng_state}};
}

CampaignState CampaignState::from_json(const json& obj) {
  CampaignState s;
  try {
    s.round_index = obj.at("round_index").get<std::size_t>();
    s.checkpoint_handle = obj.at("checkpoint_handle").get<std::string>();
    for (const auto& p : obj.at("trajectory")) {
      s.trajectory.push_back({p.at("round").get<std::size_t>(), p.at("mean_ts").get<double>(),
                              p.at("mean_is").get<double>()});
    }
    s.manifests = obj.at("manifests").get<std::vector<std::string>>();
    s.rng_state = obj.at("rng_state").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("campaign state: ") + e.what());
  }
  return s;
}

std::size_t compute_training_steps(std::size_t n_pairs, std::size_t batch_size,
                                   std::size_t epochs_per_pair) {
  if (n_pairs == 0 || batch_size == 0 || epochs_per_pair == 0) {
    fail(ErrorKind::InvalidArgument, "compute_training_steps needs positive arguments");
  }
  const std::size_t seen = epochs_per_pair * n_pairs;
  return (seen + batch_size - 1) / batch_size;
}

// ---------------------------------------------------------------------------
// Clients

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

}  // namespace

CommandClient::CommandClient(std::string command, std::string role, ErrorKind failure)
    : command_(std::move(command)), role_(std::move(role)), failure_(failure) {}

json CommandClient::call(const json& request) {
  if (command_.empty()) fail(failure_, role_ + " client has no command configured");
  fs::path dir = request.value("exchange_dir", fs::temp_directory_path().string());
  const std::string stem = role_ + "_round" + std::to_string(request.value("round", 0));
  const fs::path req_path = dir / (stem + ".request.json");
  const fs::path resp_path = dir / (stem + ".response.json");
  atomic_write(req_path, request.dump(2) + "\n");
  std::error_code ec;
  fs::remove(resp_path, ec);
  const std::string cmd =
      command_ + " " + shell_quote(req_path.string()) + " " + shell_quote(resp_path.string());
  const int rc = std::system(cmd.c_str());
  if (rc == -1) fail(failure_, role_ + " command could not be started");
  if (WIFSIGNALED(rc)) fail(failure_, role_ + " command killed by signal " + std::to_string(WTERMSIG(rc)));
  if (WEXITSTATUS(rc) != 0) {
    fail(failure_, role_ + " command exited with status " + std::to_string(WEXITSTATUS(rc)));
  }
  try {
    return json::parse(read_file(resp_path));
  } catch (const json::exception& e) {
    fail(failure_, role_ + " response is not valid JSON: " + e.what());
  } catch (const Error& e) {
    fail(failure_, role_ + " response unreadable: " + e.what());
  }
}

CampaignClients command_clients(const CampaignConfig& config) {
  auto pick = [](const char* env, const std::string& fallback) {
    const char* v = std::getenv(env);
    return (v && *v) ? std::string(v) : fallback;
  };
  return {std::make_shared<CommandClient>(pick("PAIRFORGE_GENERATOR", config.generator_command),
                                          "generator", ErrorKind::GeneratorFailure),
          std::make_shared<CommandClient>(pick("PAIRFORGE_EMBEDDER", config.embedder_command),
                                          "embedder", ErrorKind::EmbedderFailure),
          std::make_shared<CommandClient>(pick("PAIRFORGE_TRAINER", config.trainer_command),
                                          "trainer", ErrorKind::TrainerFailure)};
}

// ---------------------------------------------------------------------------
// Journal

Journal::Journal(fs::path path) : path_(std::move(path)) {
  if (!fs::exists(path_)) return;
  std::string pending_step;
  for_each_jsonl(path_, [&](std::size_t, const json& e) {
    next_seq_ = std::max(next_seq_, e.value("seq", std::size_t{0}) + 1);
    if (e.value("phase", "") == "end" && e.contains("step") && e.contains("response")) {
      completed_[e.at("step").get<std::string>()] = e.at("response");
    }
  });
}

void Journal::append(json entry) {
  const std::size_t seq = next_seq_++;
  entry["seq"] = seq;
  {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot append to journal '" + path_.string() + "'");
    out << entry.dump() << '\n';
    out.flush();
    if (!out) fail(ErrorKind::IoError, "journal write failed");
  }
  if (entry.value("phase", "") == "end" && entry.contains("step") && entry.contains("response")) {
    completed_[entry.at("step").get<std::string>()] = entry.at("response");
  }
  if (hook_) hook_(seq);
}

std::optional<json> Journal::completed(const std::string& step) const {
  if (auto it = completed_.find(step); it != completed_.end()) return it->second;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Runner

namespace {

std::string round_dir(std::size_t round) { return "round_" + std::to_string(round); }

std::string step_key(std::size_t round, const std::string& role) {
  return round_dir(round) + "/" + role;
}

bool valid_handle(const json& v) {
  if (!v.is_string()) return false;
  const auto s = v.get<std::string>();
  if (s.empty() || s.size() > 4096) return false;
  return std::none_of(s.begin(), s.end(), [](unsigned char c) { return std::iscntrl(c); });
}

}  // namespace

CampaignRunner::CampaignRunner(CampaignConfig config, fs::path workdir, CampaignClients clients)
    : config_(std::move(config)), workdir_(fs::absolute(workdir)), clients_(std::move(clients)) {
  warnings_ = config_.validate();
  if (!clients_.generator || !clients_.embedder || !clients_.trainer) {
    fail(ErrorKind::InvalidConfig, "campaign needs generator, embedder and trainer clients");
  }
}

void CampaignRunner::set_journal_hook(std::function<void(std::size_t)> hook) {
  hook_ = std::move(hook);
  if (journal_) journal_->set_hook(hook_);
}

void CampaignRunner::load_inputs() {
  if (pool_) return;
  auto specs = read_prompts_jsonl(config_.prompts_path);
  std::map<std::string, Embedding> text;
  for (auto& line : read_emb_jsonl(config_.prompt_embeddings_path, config_.dim)) {
    if (line.embedding.kind != EmbeddingKind::text) {
      fail(ErrorKind::InvalidConfig, "prompt embedding '" + line.embedding.id + "' is not kind=text");
    }
    text.emplace(line.embedding.id, std::move(line.embedding));
  }
  PromptPool pool;
  for (auto& s : specs) {
    auto it = text.find(s.prompt_id);
    if (it == text.end()) {
      fail(ErrorKind::InvalidConfig, "prompt '" + s.prompt_id + "' has no text embedding");
    }
    PromptRecord rec{s.prompt_id, s.text, it->second, s.source};
    if (!pool.lookup.emplace(rec.prompt_id, rec).second) {
      fail(ErrorKind::InvalidConfig, "duplicate prompt id '" + rec.prompt_id + "'");
    }
    pool.records.push_back(std::move(rec));
  }
  if (pool.records.size() < config_.n_prompts) {
    fail(ErrorKind::InvalidConfig, "prompt file has " + std::to_string(pool.records.size()) +
                                       " prompts, campaign needs " + std::to_string(config_.n_prompts));
  }
  std::vector<Embedding> refs;
  for (auto& line : read_emb_jsonl(config_.refs_path, config_.dim)) refs.push_back(std::move(line.embedding));
  refs_.emplace(config_.concept_id, std::move(refs));
  pool_ = std::move(pool);
}

std::vector<const PromptRecord*> CampaignRunner::active_prompts(std::size_t round) const {
  std::vector<const PromptRecord*> all;
  for (const auto& r : pool_->records) all.push_back(&r);
  if (all.size() == config_.n_prompts) return all;
  const std::uint64_t stream = config_.resample_prompts ? round : 0;
  SeededRng rng(mix_seed(mix_seed(config_.seed, "prompts"), stream));
  std::vector<std::size_t> idx(all.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.partial_shuffle(idx, config_.n_prompts);
  idx.resize(config_.n_prompts);
  std::sort(idx.begin(), idx.end());
  std::vector<const PromptRecord*> out;
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

json CampaignRunner::call_client(Client& client, const std::string& role, std::size_t round,
                                 const json& request) {
  const auto key = step_key(round, role);
  if (auto done = journal_->completed(key)) return *done;
  journal_->append({{"round", round}, {"step", key}, {"phase", "begin"}});
  json response = client.call(request);
  journal_->append({{"round", round}, {"step", key}, {"phase", "end"}, {"response", response}});
  return response;
}

void CampaignRunner::record_manifest(std::size_t round, const std::string& rel_path,
                                     const std::string& content, CampaignState& state) {
  atomic_write(workdir_ / rel_path, content);
  journal_->append({{"round", round},
                    {"event", "manifest"},
                    {"path", rel_path},
                    {"fnv1a64", hex64(fnv1a64(content))}});
  if (std::find(state.manifests.begin(), state.manifests.end(), rel_path) == state.manifests.end()) {
    state.manifests.push_back(rel_path);
  }
}

void CampaignRunner::commit(const CampaignState& state) {
  const auto csv = campaign_trajectory_csv(state);
  const auto rd = round_dir(state.trajectory.back().round);
  atomic_write(workdir_ / rd / "trajectory.csv", csv);
  atomic_write(workdir_ / "trajectory.csv", csv);
  atomic_write(workdir_ / "state.json", state.to_json().dump(2) + "\n");
  journal_->append({{"round", state.trajectory.back().round},
                    {"event", "commit"},
                    {"round_index", state.round_index},
                    {"checkpoint", state.checkpoint_handle}});
}

RoundPoint CampaignRunner::generate_and_score(std::size_t round, const std::string& checkpoint,
                                              CampaignState& state) {
  const auto rd = round_dir(round);
  const fs::path exchange = workdir_ / rd / "requests";
  fs::create_directories(exchange);
  const auto prompts = active_prompts(round);

  json prompt_list = json::array();
  for (const auto* p : prompts) prompt_list.push_back({{"prompt_id", p->prompt_id}, {"text", p->text}});
  json gen_req = {{"type", "generate"},
                  {"round", round},
                  {"checkpoint", checkpoint},
                  {"m_per_prompt", config_.m_per_prompt},
                  {"seed", mix_seed(config_.seed, "generate:" + std::to_string(round))},
                  {"prompts", prompt_list},
                  {"output_dir", (workdir_ / rd / "images").string()},
                  {"exchange_dir", exchange.string()}};
  const json gen = call_client(*clients_.generator, "generate", round, gen_req);

  // Validate the generation budget: exactly m samples for every active prompt.
  std::vector<GenerationSample> samples;
  {
    auto gfail = [](const std::string& what) { fail(ErrorKind::GeneratorFailure, what); };
    if (!gen.contains("samples") || !gen.at("samples").is_array()) gfail("response lacks 'samples'");
    std::map<std::string, std::size_t> per_prompt;
    for (const auto* p : prompts) per_prompt[p->prompt_id] = 0;
    std::unordered_set<std::string> ids;
    for (const auto& s : gen.at("samples")) {
      if (!s.is_object() || !s.contains("sample_id") || !s.at("sample_id").is_string() ||
          !s.contains("prompt_id") || !s.at("prompt_id").is_string()) {
        gfail("malformed sample entry");
      }
      GenerationSample g;
      g.sample_id = s.at("sample_id").get<std::string>();
      g.prompt_id = s.at("prompt_id").get<std::string>();
      g.round_index = static_cast<std::uint32_t>(round);
      if (auto it = s.find("artifact_uri"); it != s.end() && it->is_string()) g.artifact_uri = it->get<std::string>();
      auto pit = per_prompt.find(g.prompt_id);
      if (pit == per_prompt.end()) gfail("sample '" + g.sample_id + "' has unrequested prompt '" + g.prompt_id + "'");
      ++pit->second;
      if (!ids.insert(g.sample_id).second) gfail("duplicate sample id '" + g.sample_id + "'");
      samples.push_back(std::move(g));
    }
    if (samples.size() != config_.n_prompts * config_.m_per_prompt) {
      gfail("expected " + std::to_string(config_.n_prompts * config_.m_per_prompt) + " samples, got " +
            std::to_string(samples.size()));
    }
    for (const auto& [pid, n] : per_prompt) {
      if (n != config_.m_per_prompt) gfail("prompt '" + pid + "' has " + std::to_string(n) + " samples");
    }
  }

  json items = json::array();
  for (const auto& s : samples) {
    json item = {{"id", s.sample_id}, {"prompt_id", s.prompt_id}};
    if (s.artifact_uri) item["uri"] = *s.artifact_uri;
    items.push_back(item);
  }
  json emb_req = {{"type", "embed"},
                  {"round", round},
                  {"kind", "image"},
                  {"items", items},
                  {"output_path", (workdir_ / rd / "embeddings.jsonl").string()},
                  {"exchange_dir", exchange.string()}};
  const json emb = call_client(*clients_.embedder, "embed", round, emb_req);

  {
    std::map<std::string, Embedding> by_id;
    try {
      if (!emb.contains("embeddings_path") || !emb.at("embeddings_path").is_string()) {
        fail(ErrorKind::EmbedderFailure, "response lacks 'embeddings_path'");
      }
      fs::path p = emb.at("embeddings_path").get<std::string>();
      if (p.is_relative()) p = workdir_ / p;
      for (auto& line : read_emb_jsonl(p, config_.dim)) by_id.emplace(line.embedding.id, std::move(line.embedding));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::EmbedderFailure) throw;
      fail(ErrorKind::EmbedderFailure, e.what());
    }
    for (auto& s : samples) {
      auto it = by_id.find(s.sample_id);
      if (it == by_id.end() || it->second.kind != EmbeddingKind::image) {
        fail(ErrorKind::EmbedderFailure, "no image embedding for sample '" + s.sample_id + "'");
      }
      s.image_embedding = it->second;
    }
  }

  std::optional<double> lambda;
  if (config_.policy.mode != SelectionMode::cone) lambda = config_.policy.lambda;
  auto scores = score_batch(samples, *refs_, pool_->lookup, lambda);
  sort_scores(scores);
  record_manifest(round, rd + "/scores.jsonl", scores_jsonl(scores), state);

  double sum_ts = 0.0, sum_is = 0.0;
  for (const auto& s : scores) {
    sum_ts += s.ts;
    sum_is += s.is;
  }
  const auto n = static_cast<double>(scores.size());
  return {round, sum_ts / n, sum_is / n};
}

CampaignState CampaignRunner::start(bool resume) {
  fs::create_directories(workdir_);
  const fs::path state_path = workdir_ / "state.json";
  const fs::path journal_path = workdir_ / "journal.jsonl";
  const fs::path config_path = workdir_ / "campaign.json";
  const std::string config_echo = config_.to_json().dump(2) + "\n";

  if (fs::exists(journal_path) || fs::exists(config_path)) {
    if (!resume) {
      fail(ErrorKind::InvalidConfig,
           "working directory '" + workdir_.string() + "' already holds a campaign; use resume");
    }
    if (fs::exists(config_path) && read_file(config_path) != config_echo) {
      fail(ErrorKind::InvalidConfig, "campaign.json in the working directory differs from the config");
    }
  }
  atomic_write(config_path, config_echo);
  journal_ = std::make_unique<Journal>(journal_path);
  journal_->set_hook(hook_);
  load_inputs();

  if (resume && fs::exists(state_path)) {
    journal_->append({{"event", "resume"}});
    return CampaignState::from_json(json::parse(read_file(state_path)));
  }

  journal_->append({{"event", resume ? "resume" : "start"}});
  CampaignState state;
  state.checkpoint_handle = config_.initial_checkpoint;
  state.rng_state = mix_seed(config_.seed, std::uint64_t{1});
  state.trajectory.push_back(generate_and_score(0, state.checkpoint_handle, state));
  commit(state);
  return state;
}

CampaignState CampaignRunner::run_round(const CampaignState& current) {
  if (!journal_) fail(ErrorKind::InvalidArgument, "run_round called before start");
  if (current.trajectory.size() != current.round_index + 1) {
    fail(ErrorKind::InvalidArgument, "campaign state trajectory does not match its round index");
  }
  CampaignState state = current;
  const std::size_t round = state.round_index + 1;
  const auto rd = round_dir(round);

  // Select from the freshest samples, produced by the current checkpoint.
  auto scores = read_scores_jsonl(workdir_ / round_dir(round - 1) / "scores.jsonl");
  auto groups = group_by_prompt(std::move(scores));
  SelectionPolicy policy = config_.policy;
  policy.seed = mix_seed(config_.seed, round);
  SelectionDiagnostics diag;
  auto pairs = select_pairs(groups, policy, &diag);
  atomic_write(workdir_ / rd / "diagnostics.json", diag.to_json().dump(2) + "\n");
  if (pairs.empty()) {
    journal_->append({{"round", round}, {"event", "empty_selection"}, {"candidates", diag.candidates}});
    fail(ErrorKind::EmptySelection, "round " + std::to_string(round) + ": no pairs survived selection (" +
                                        std::to_string(diag.candidates) + " candidates)");
  }
  PromptTextLookup texts;
  for (const auto& r : pool_->records) texts.emplace(r.prompt_id, r.text);
  record_manifest(round, rd + "/pairs.jsonl", pairs_jsonl(pairs, policy, &texts), state);

  const fs::path exchange = workdir_ / rd / "requests";
  fs::create_directories(exchange);
  json train_req = {{"type", "train"},
                    {"round", round},
                    {"checkpoint", state.checkpoint_handle},
                    {"pairs_path", (workdir_ / rd / "pairs.jsonl").string()},
                    {"n_pairs", pairs.size()},
                    {"steps", compute_training_steps(pairs.size(), config_.batch_size, config_.epochs_per_pair)},
                    {"batch_size", config_.batch_size},
                    {"epochs_per_pair", config_.epochs_per_pair},
                    {"profile", config_.trainer_profile},
                    {"exchange_dir", exchange.string()}};
  const json trained = call_client(*clients_.trainer, "train", round, train_req);
  if (!trained.is_object() || !trained.contains("checkpoint") || !valid_handle(trained.at("checkpoint"))) {
    fail(ErrorKind::TrainerFailure, "round " + std::to_string(round) + ": malformed checkpoint handle");
  }
  state.checkpoint_handle = trained.at("checkpoint").get<std::string>();

  state.trajectory.push_back(generate_and_score(round, state.checkpoint_handle, state));
  state.round_index = round;
  state.rng_state = mix_seed(config_.seed, round + 1);
  commit(state);
  return state;
}

CampaignState CampaignRunner::run(bool resume) {
  CampaignState state = start(resume);
  while (state.round_index < config_.rounds) state = run_round(state);
  return state;
}

CampaignState run_campaign(const CampaignConfig& config, const fs::path& workdir,
                           const CampaignClients& clients, bool resume) {
  CampaignRunner runner(config, workdir, clients);
  return runner.run(resume);
}

std::string campaign_trajectory_csv(const CampaignState& state) {
  std::vector<TrajectoryPoint> pts;
  for (const auto& p : state.trajectory) pts.push_back({"round_" + std::to_string(p.round), p.mean_ts, p.mean_is});
  return trajectory_csv(pts);
}

}  // namespace pairforge
