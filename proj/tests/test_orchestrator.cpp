#include <doctest.h>

#include <map>
#include <stdexcept>

#include "pairforge/evalkit.hpp"
#include "pairforge/orchestrator.hpp"
#include "pairforge/sim_clients.hpp"
#include "support.hpp"

using namespace pairforge;
namespace fs = std::filesystem;

namespace {

// Counts calls per (role, round) and optionally rewrites responses.
class Probe : public Client {
 public:
  Probe(std::shared_ptr<Client> inner, std::map<std::string, int>& calls, std::string role)
      : inner_(std::move(inner)), calls_(calls), role_(std::move(role)) {}
  std::function<json(json)> rewrite;

  json call(const json& request) override {
    ++calls_[role_ + ":" + std::to_string(request.value("round", 0))];
    json out = inner_->call(request);
    return rewrite ? rewrite(std::move(out)) : out;
  }

 private:
  std::shared_ptr<Client> inner_;
  std::map<std::string, int>& calls_;
  std::string role_;
};

struct Rig {
  CampaignConfig config;
  CampaignClients clients;
  std::shared_ptr<Probe> gen, emb, train;
  std::map<std::string, int> calls;

  Rig(const fs::path& inputs, SelectionPolicy policy, std::size_t rounds, std::uint64_t seed = 7,
      double fidelity_decay = 0.0) {
    config = sim::sim_campaign_config(policy, rounds, seed);
    fs::create_directories(inputs);
    sim::write_sim_inputs(inputs, config);
    auto world = sim::sim_default_world(seed);
    world.fidelity_decay = fidelity_decay;
    auto base = sim::sim_clients(world, config.dim);
    gen = std::make_shared<Probe>(base.generator, calls, "generate");
    emb = std::make_shared<Probe>(base.embedder, calls, "embed");
    train = std::make_shared<Probe>(base.trainer, calls, "train");
    clients = {gen, emb, train};
  }
};

struct Crash : std::runtime_error {
  Crash() : std::runtime_error("simulated crash") {}
};

const std::vector<std::string> kOutputs = {"state.json", "trajectory.csv"};

std::vector<std::string> round_files(std::size_t rounds) {
  std::vector<std::string> out = kOutputs;
  out.push_back("round_0/scores.jsonl");
  out.push_back("round_0/embeddings.jsonl");
  for (std::size_t r = 1; r <= rounds; ++r) {
    for (const char* f : {"scores.jsonl", "pairs.jsonl", "diagnostics.json", "embeddings.jsonl", "trajectory.csv"}) {
      out.push_back("round_" + std::to_string(r) + "/" + f);
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("orchestrator") {
  TEST_CASE("training steps") {
    CHECK(compute_training_steps(25600, 256, 5) == 500);
    CHECK(compute_training_steps(1, 1, 1) == 1);
    CHECK(compute_training_steps(100, 64, 5) == 8);
    CHECK(compute_training_steps(1, 256, 5) == 1);
    CHECK_THROWS_AS(compute_training_steps(0, 256, 5), Error);
    CHECK_THROWS_AS(compute_training_steps(10, 0, 5), Error);
  }

  TEST_CASE("trainer profiles") {
    CHECK(trainer_profile_preset("sd2")["beta"] == 5000);
    CHECK(trainer_profile_preset("sd2")["batch_size"] == 256);
    CHECK(trainer_profile_preset("sdxl_lora")["lora_rank"] == 4);
    CHECK(trainer_profile_preset("sdxl_lora")["learning_rate"] == 6.4e-5);
    CHECK_THROWS_AS(trainer_profile_preset("sd3"), Error);
  }

  TEST_CASE("config validation and json") {
    auto c = sim::sim_campaign_config(SelectionPolicy::preset("TS"), 3, 9);
    c.prompts_path = "/x/prompts.jsonl";
    CHECK(c.validate().empty());
    const auto back = CampaignConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    c.rounds = 11;
    CHECK(c.validate().size() == 1);
    c.rounds = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c.rounds = 2;
    c.m_per_prompt = 0;
    CHECK_THROWS_AS(c.validate(), Error);

    json j = sim::sim_campaign_config(SelectionPolicy::preset("MIX"), 2, 1).to_json();
    j["policy"] = {{"preset", "IS"}, {"budget", 10}};
    j["inputs"]["prompts"] = "p.jsonl";
    j["trainer_profile"] = "sdxl_lora";
    const auto parsed = CampaignConfig::from_json(j, "/base");
    CHECK(parsed.policy.c1_deg == 0.0);
    CHECK(parsed.policy.c2_deg == 90.0);
    CHECK(parsed.policy.budget == 10u);
    CHECK(parsed.prompts_path == "/base/p.jsonl");
    CHECK(parsed.trainer_profile["name"] == "sdxl_lora");
    j["policy"] = {{"mode", "cone"}, {"c1_deg", 10}, {"c2_deg", 200}};
    CHECK_THROWS_AS(CampaignConfig::from_json(j), Error);
  }

  TEST_CASE("state json round trip") {
    CampaignState s;
    s.round_index = 2;
    s.checkpoint_handle = "ckpt-2";
    s.trajectory = {{0, 0.25, 0.6}, {1, 1.0 / 3.0, 0.61}, {2, 0.35, 0.62}};
    s.manifests = {"round_0/scores.jsonl"};
    s.rng_state = 0xfedcba9876543210ull;
    const auto back = CampaignState::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());
    CHECK(back.trajectory[1].mean_ts == s.trajectory[1].mean_ts);
    CHECK(back.rng_state == s.rng_state);
  }

  TEST_CASE("one round adds one trajectory point and two manifests") {
    testsupport::TempDir dir;
    Rig rig(dir / "inputs", SelectionPolicy::preset("MIX"), 1);
    CampaignRunner runner(rig.config, dir / "work", rig.clients);
    const auto base = runner.start(false);
    CHECK(base.trajectory.size() == 1);
    CHECK(base.manifests.size() == 1);
    const auto next = runner.run_round(base);
    CHECK(next.round_index == 1);
    CHECK(next.trajectory.size() == 2);
    CHECK(next.manifests.size() == 3);
    CHECK(next.checkpoint_handle != base.checkpoint_handle);
    CHECK(fs::exists(dir / "work" / "round_1" / "pairs.jsonl"));
    CHECK(rig.calls["train:1"] == 1);

    testsupport::TempDir dir2;
    Rig rig2(dir2 / "inputs", SelectionPolicy::preset("MIX"), 2);
    const auto two = run_campaign(rig2.config, dir2 / "work", rig2.clients);
    CHECK(two.trajectory.size() == 3);
    CHECK(read_trajectory_csv(dir2 / "work" / "trajectory.csv").size() == 3);
    CHECK_THROWS_AS(run_campaign(rig2.config, dir2 / "work", rig2.clients), Error);
  }

  TEST_CASE("malformed checkpoint handle aborts the round") {
    testsupport::TempDir dir;
    Rig rig(dir / "inputs", SelectionPolicy::preset("MIX"), 1);
    int n = 0;
    for (json bad : {json(""), json(42), json(std::string("bad\nhandle")), json(std::string(5000, 'x'))}) {
      rig.train->rewrite = [bad](json) { return json{{"checkpoint", bad}}; };
      const auto work = dir / ("work" + std::to_string(n++));
      CampaignRunner runner(rig.config, work, rig.clients);
      const auto base = runner.start(false);
      const auto before = read_file(work / "state.json");
      CHECK_THROWS_WITH_AS(runner.run_round(base), doctest::Contains("checkpoint"), Error);
      try {
        runner.run_round(base);
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TrainerFailure);
      }
      CHECK(read_file(work / "state.json") == before);
    }
  }

  TEST_CASE("generator count is validated") {
    testsupport::TempDir dir;
    Rig rig(dir / "inputs", SelectionPolicy::preset("MIX"), 1);
    rig.gen->rewrite = [](json r) {
      r["samples"].erase(r["samples"].size() - 1);
      return r;
    };
    try {
      run_campaign(rig.config, dir / "a", rig.clients);
      FAIL("expected a generator failure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::GeneratorFailure);
    }
    rig.gen->rewrite = [](json r) {
      r["samples"][1]["sample_id"] = r["samples"][0]["sample_id"];
      return r;
    };
    try {
      run_campaign(rig.config, dir / "b", rig.clients);
      FAIL("expected a generator failure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::GeneratorFailure);
    }
  }

  TEST_CASE("empty selection stops the campaign") {
    testsupport::TempDir dir;
    Rig rig(dir / "inputs", SelectionPolicy::threshold(0.5, 10.0), 1);
    try {
      run_campaign(rig.config, dir / "work", rig.clients);
      FAIL("expected EmptySelection");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptySelection);
    }
    CHECK(rig.calls["train:1"] == 0);
    CHECK(read_file(dir / "work" / "journal.jsonl").find("empty_selection") != std::string::npos);
  }

  TEST_CASE("steering with the TS cone raises TS every round") {
    testsupport::TempDir dir;
    Rig rig(dir / "inputs", SelectionPolicy::cone(-20, 70), 3);
    const auto s = run_campaign(rig.config, dir / "work", rig.clients);
    REQUIRE(s.trajectory.size() == 4);
    for (std::size_t r = 1; r < 4; ++r) {
      CHECK(s.trajectory[r].mean_ts > s.trajectory[r - 1].mean_ts);
      const double a = testsupport::oracle_angle(s.trajectory[r].mean_ts - s.trajectory[r - 1].mean_ts,
                                                 s.trajectory[r].mean_is - s.trajectory[r - 1].mean_is);
      CHECK(a > -20.0);
      CHECK(a < 70.0);
    }
  }

  TEST_CASE("resume after a crash reproduces the uninterrupted run") {
    testsupport::TempDir dir;
    const std::size_t rounds = 2;
    Rig clean(dir / "inputs", SelectionPolicy::preset("MIX"), rounds);
    std::size_t entries = 0;
    {
      CampaignRunner r(clean.config, dir / "clean", clean.clients);
      r.set_journal_hook([&](std::size_t seq) { entries = seq + 1; });
      r.run(false);
    }
    REQUIRE(entries > 10);
    SeededRng rng(99);
    for (int trial = 0; trial < 4; ++trial) {
      const std::size_t crash_at = rng.uniform_below(entries);
      const auto work = dir / ("crash" + std::to_string(trial));
      Rig rig(dir / "inputs", SelectionPolicy::preset("MIX"), rounds);
      {
        CampaignRunner r(rig.config, work, rig.clients);
        r.set_journal_hook([&](std::size_t seq) {
          if (seq == crash_at) throw Crash();
        });
        CHECK_THROWS_AS(r.run(false), Crash);
      }
      CampaignRunner r(rig.config, work, rig.clients);
      r.run(true);
      for (const auto& [step, n] : rig.calls) CHECK_MESSAGE(n == 1, step << " called " << n << " times");
      for (const auto& f : round_files(rounds)) {
        CHECK_MESSAGE(read_file(work / f) == read_file(dir / "clean" / f), f << " crash at " << crash_at);
      }
    }
  }

  TEST_CASE("resume refuses a different config") {
    testsupport::TempDir dir;
    Rig rig(dir / "inputs", SelectionPolicy::preset("MIX"), 1);
    run_campaign(rig.config, dir / "work", rig.clients);
    auto other = rig.config;
    other.seed = 8;
    CHECK_THROWS_AS(run_campaign(other, dir / "work", rig.clients, true), Error);
    // Resuming a finished campaign is a no-op.
    const auto again = run_campaign(rig.config, dir / "work", rig.clients, true);
    CHECK(again.round_index == 1);
  }

  TEST_CASE("command clients through the sim-client subcommand") {
    testsupport::TempDir dir;
    Rig in_proc(dir / "inputs", SelectionPolicy::preset("MIX"), 1, 5);
    const auto expected = run_campaign(in_proc.config, dir / "direct", in_proc.clients);

    auto cfg = in_proc.config;
    const std::string cli = PAIRFORGE_CLI;
    cfg.generator_command = cli + " sim-client --seed 5 --dim 16 --role generate";
    cfg.embedder_command = cli + " sim-client --seed 5 --dim 16 --role embed";
    cfg.trainer_command = "/nonexistent/trainer";
    ::setenv("PAIRFORGE_TRAINER", (cli + " sim-client --seed 5 --dim 16 --role train").c_str(), 1);
    const auto clients = command_clients(cfg);
    ::unsetenv("PAIRFORGE_TRAINER");
    const auto got = run_campaign(cfg, dir / "cmd", clients);
    REQUIRE(got.trajectory.size() == expected.trajectory.size());
    CHECK(read_file(dir / "cmd" / "round_1" / "scores.jsonl") == read_file(dir / "direct" / "round_1" / "scores.jsonl"));
    CHECK(fs::exists(dir / "cmd" / "round_1" / "requests" / "trainer_round1.request.json"));

    cfg.trainer_command = "false";
    const auto failing = command_clients(cfg);
    try {
      run_campaign(cfg, dir / "fail", failing);
      FAIL("expected a trainer failure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::TrainerFailure);
    }
  }

  TEST_CASE("round sweep with fidelity decay") {
    testsupport::TempDir dir;
    std::vector<CampaignState> runs;
    for (std::size_t rounds : {1, 2, 3, 5, 10}) {
      Rig rig(dir / "inputs", SelectionPolicy::preset("TS"), rounds, 3, 0.12);
      runs.push_back(run_campaign(rig.config, dir / ("r" + std::to_string(rounds)), rig.clients));
    }
    const auto& longest = runs.back().trajectory;
    REQUIRE(longest.size() == 11);
    for (const auto& run : runs) {
      for (std::size_t k = 0; k < run.trajectory.size(); ++k) {
        CHECK(run.trajectory[k].mean_ts == longest[k].mean_ts);
        CHECK(run.trajectory[k].mean_is == longest[k].mean_is);
      }
    }
    for (std::size_t k = 1; k < longest.size(); ++k) CHECK(longest[k].mean_ts > longest[k - 1].mean_ts);
    // IS rises early, then the accumulated drift from the start wins.
    CHECK(longest[1].mean_is > longest[0].mean_is);
    CHECK(longest[10].mean_is < longest[5].mean_is);
  }
}
