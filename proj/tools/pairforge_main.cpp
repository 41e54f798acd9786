// pairforge: command-line front end for prompt building, scoring, pair
// selection, campaigns, the synthetic world, evaluation and plotting.

#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pairforge/evalkit.hpp"
#include "pairforge/orchestrator.hpp"
#include "pairforge/pairing.hpp"
#include "pairforge/prompts.hpp"
#include "pairforge/scoring.hpp"
#include "pairforge/sim_clients.hpp"

namespace fs = std::filesystem;
using namespace pairforge;

namespace {

constexpr int kExitError = 1;
constexpr int kExitEmptySelection = 2;
constexpr int kExitClientFailure = 3;

bool g_verbose = false;

void note(const std::string& msg) {
  if (g_verbose) std::cerr << "pairforge: " << msg << '\n';
}

// Schema notes appended to --help.
const char* kEmbSchema =
    "EMB-JSONL: one object per line\n"
    "  {\"id\": str, \"kind\": \"image\"|\"text\", \"vector\": [f64 x D],\n"
    "   \"prompt_id\"?: str, \"uri\"?: str}\n"
    "  vectors are normalized on read; every line must have the same D.\n";
const char* kPromptsSchema =
    "PROMPTS-JSONL: {\"prompt_id\": str, \"text\": str, \"source\": \"coco\"|\"llm\"|\"dreambench\"|\"custom\"}\n";
const char* kScoresSchema =
    "SCORES-JSONL: {\"sample_id\", \"prompt_id\", \"ts\", \"is\", \"weighted\"?, \"lambda\"?,\n"
    "  \"round\"?, \"uri\"?} sorted by (prompt_id, sample_id); ts and is in [-1, 1].\n";
const char* kPairsSchema =
    "PAIRS-JSONL: {\"prompt_id\", \"prompt_text\", \"winner_id\", \"loser_id\", \"winner_uri\"?,\n"
    "  \"loser_uri\"?, \"delta_ts\", \"delta_is\", \"angle_deg\", \"score_gap\"?, \"policy\": {...}}\n"
    "  sorted by (prompt_id, winner_id, loser_id).\n"
    "Diagnostics JSON: {\"candidates\", \"kept\", \"kept_after_budget\", \"dropped_degenerate\",\n"
    "  \"dropped_by_policy\", \"angle_histogram\": [{\"lo_deg\", \"hi_deg\", \"count\"} x 72]}\n"
    "  the histogram counts kept pairs in 5-degree bins from -180.\n";
const char* kCocoSchema =
    "COCO captions JSONL: {\"source_id\", \"caption\", \"supercategory\", \"category\"}\n"
    "Concept map JSON: {\"concepts\": {\"<class>\": \"<supercategory>/<category>\" |\n"
    "  {\"supercategory\", \"category\", \"words\"?: [..], \"extra_plurals\"?: [..]}}}\n"
    "  category \"*\" accepts every category of the supercategory.\n"
    "LLM prompts: plain text, one prompt per line, each containing \"[V*]\" once.\n";
const char* kTrajectorySchema = "TRAJECTORY-CSV: header \"label,ts,is\", one row per point.\n";
const char* kVotesSchema =
    "Votes CSV: header with columns method,question,vote (others ignored);\n"
    "  vote is win | lose | no_diff. Percentages are over all votes of a cell.\n";
const char* kCampaignSchema =
    "Campaign config JSON: {\"concept_id\", \"n_prompts\", \"m_per_prompt\", \"rounds\",\n"
    "  \"policy\": {\"mode\": ..} | {\"preset\": \"TS\"|\"IS\"|\"MIX\"}, \"epochs_per_pair\",\n"
    "  \"batch_size\", \"dim\", \"seed\", \"resample_prompts\",\n"
    "  \"inputs\": {\"prompts\", \"prompt_embeddings\", \"refs\"}, \"initial_checkpoint\",\n"
    "  \"clients\": {\"generator\", \"embedder\", \"trainer\"}, \"trainer_profile\"}\n"
    "Client commands run as `<cmd> <request.json> <response.json>`; see docs/clients.md.\n"
    "Environment: PAIRFORGE_GENERATOR, PAIRFORGE_EMBEDDER, PAIRFORGE_TRAINER override the\n"
    "  configured client commands.\n"
    "Working directory: campaign.json, journal.jsonl, state.json, trajectory.csv and\n"
    "  round_<k>/{scores.jsonl,pairs.jsonl,diagnostics.json,trajectory.csv}.\n";

void require_file(const std::string& path, const char* what) {
  if (path.empty()) fail(ErrorKind::InvalidArgument, std::string(what) + " path is required");
  if (!fs::is_regular_file(path)) {
    fail(ErrorKind::IoError, std::string(what) + " '" + path + "' does not exist or is not a file");
  }
}

void require_output(const std::string& path, const char* what) {
  if (path.empty()) fail(ErrorKind::InvalidArgument, std::string(what) + " path is required");
  if (fs::is_directory(path)) fail(ErrorKind::IoError, std::string(what) + " '" + path + "' is a directory");
}

// ---------------------------------------------------------------------------
// Policy flags shared by select and sim.

struct PolicyFlags {
  std::optional<double> lambda;
  std::optional<double> tau;
  std::string cone;
  std::string preset;
  std::optional<std::size_t> budget;
  std::uint64_t seed = 0;

  void attach(CLI::App* app) {
    auto* l = app->add_option("--lambda", lambda, "weight of TS in the score (threshold mode)");
    auto* t = app->add_option("--tau", tau, "keep pairs whose score gap exceeds tau (threshold mode)");
    auto* c = app->add_option("--cone", cone, "angle cone C1,C2 in degrees, e.g. --cone=-20,70");
    auto* p = app->add_option("--preset", preset, "named cone: TS, IS or MIX (also -TS, e.g. --preset=-TS)");
    c->excludes(l)->excludes(t)->excludes(p);
    p->excludes(l)->excludes(t);
    app->add_option("--budget", budget, "keep at most this many pairs, sampled with --seed");
    app->add_option("--seed", seed, "seed for budget subsampling");
  }

  SelectionPolicy build(const SelectionPolicy& fallback) const {
    SelectionPolicy p = fallback;
    if (!preset.empty()) {
      p = SelectionPolicy::preset(preset);
    } else if (!cone.empty()) {
      const auto comma = cone.find(',');
      if (comma == std::string::npos) fail(ErrorKind::InvalidCone, "--cone expects C1,C2");
      try {
        std::size_t used1 = 0, used2 = 0;
        const std::string a = cone.substr(0, comma), b = cone.substr(comma + 1);
        const double c1 = std::stod(a, &used1), c2 = std::stod(b, &used2);
        if (used1 != a.size() || used2 != b.size()) throw std::invalid_argument("trailing");
        p = SelectionPolicy::cone(c1, c2);
      } catch (const std::logic_error&) {
        fail(ErrorKind::InvalidCone, "--cone expects two numbers, got '" + cone + "'");
      }
    } else if (lambda || tau) {
      p = SelectionPolicy::threshold(lambda.value_or(0.5), tau.value_or(0.0));
    }
    p.budget = budget;
    p.seed = seed;
    p.validate();
    return p;
  }
};

// ---------------------------------------------------------------------------
// prompts

struct PromptsArgs {
  std::string captions, llm, concept_class, concept_map, out;
  std::size_t n_coco = 3000, n_llm = 1000;
  std::uint64_t seed = 0;
};

void cmd_prompts(const PromptsArgs& a) {
  require_output(a.out, "output");
  if (a.n_coco > 0) require_file(a.captions, "captions");
  if (a.n_llm > 0) require_file(a.llm, "LLM prompts");
  if (!a.concept_map.empty()) require_file(a.concept_map, "concept map");

  std::vector<CaptionCandidate> candidates;
  if (a.n_coco > 0) {
    const auto map = a.concept_map.empty() ? ConceptCategoryMap::dreambench_default()
                                           : ConceptCategoryMap::from_json(json::parse(read_file(a.concept_map)));
    const auto& entry = map.at(a.concept_class);
    candidates = captions_for_concept(read_coco_captions(a.captions), entry);
    note(std::to_string(candidates.size()) + " captions match '" + a.concept_class + "'");
  }
  std::vector<std::string> llm;
  if (a.n_llm > 0) llm = read_prompt_lines(a.llm);
  const auto set = build_prompt_set(candidates, llm, {a.n_coco, a.n_llm, a.seed});
  atomic_write(a.out, prompts_jsonl(set));
  note("wrote " + std::to_string(set.size()) + " prompts to " + a.out);
}

// ---------------------------------------------------------------------------
// score

struct ScoreInputs {
  std::string samples, prompts, prompt_embeddings, refs, concept_id = "concept";
  std::size_t dim = 0;
};

struct ScoreArgs {
  ScoreInputs in;
  std::optional<double> lambda;
  std::string out;
};

void check_score_inputs(const ScoreInputs& in) {
  require_file(in.samples, "samples");
  require_file(in.prompts, "prompts");
  require_file(in.prompt_embeddings, "prompt embeddings");
  require_file(in.refs, "refs");
}

std::vector<ScoredSample> score_files(const ScoreInputs& in, std::optional<double> lambda) {
  std::vector<Embedding> refs;
  auto ref_lines = read_emb_jsonl(in.refs, in.dim);
  const std::size_t dim = ref_lines.empty() ? in.dim : ref_lines.front().embedding.vector.size();
  for (auto& l : ref_lines) refs.push_back(std::move(l.embedding));
  const ConceptRefSet ref_set(in.concept_id, std::move(refs));

  std::map<std::string, Embedding> text;
  for (auto& l : read_emb_jsonl(in.prompt_embeddings, dim)) text.emplace(l.embedding.id, std::move(l.embedding));
  PromptLookup lookup;
  for (auto& s : read_prompts_jsonl(in.prompts)) {
    auto it = text.find(s.prompt_id);
    if (it == text.end()) fail(ErrorKind::UnknownPrompt, "prompt '" + s.prompt_id + "' has no text embedding");
    lookup.emplace(s.prompt_id, PromptRecord{s.prompt_id, s.text, it->second, s.source});
  }

  std::vector<GenerationSample> samples;
  for (auto& l : read_emb_jsonl(in.samples, dim)) {
    if (!l.prompt_id) {
      fail(ErrorKind::ParseError, "sample '" + l.embedding.id + "' lacks the prompt_id field");
    }
    GenerationSample g;
    g.sample_id = l.embedding.id;
    g.prompt_id = *l.prompt_id;
    g.artifact_uri = l.uri;
    g.image_embedding = std::move(l.embedding);
    samples.push_back(std::move(g));
  }
  auto scores = score_batch(samples, ref_set, lookup, lambda);
  sort_scores(scores);
  return scores;
}

void cmd_score(const ScoreArgs& a) {
  check_score_inputs(a.in);
  require_output(a.out, "output");
  if (a.lambda) check_lambda(*a.lambda);
  auto scores = score_files(a.in, a.lambda);
  write_scores_jsonl(a.out, scores);
  note("scored " + std::to_string(scores.size()) + " samples");
}

// ---------------------------------------------------------------------------
// select

struct SelectArgs {
  std::string scores, prompts, out, diagnostics;
  PolicyFlags policy;
  std::size_t chunk = 256;
};

void cmd_select(const SelectArgs& a) {
  require_file(a.scores, "scores");
  require_output(a.out, "output");
  if (!a.prompts.empty()) require_file(a.prompts, "prompts");
  const std::string diag_path = a.diagnostics.empty() ? a.out + ".diagnostics.json" : a.diagnostics;
  require_output(diag_path, "diagnostics");

  const SelectionPolicy policy = a.policy.build(SelectionPolicy::threshold(0.5, 0.0));
  SelectionPolicy unbudgeted = policy;
  unbudgeted.budget.reset();

  PromptTextLookup texts;
  if (!a.prompts.empty()) {
    for (auto& s : read_prompts_jsonl(a.prompts)) texts.emplace(s.prompt_id, s.text);
  }
  const PromptTextLookup* tp = a.prompts.empty() ? nullptr : &texts;
  const json echo = policy.to_json();

  // Groups are read in chunks so memory stays bounded by the chunk, unless a
  // budget forces every kept pair to be held for subsampling.
  const fs::path tmp = a.out + ".tmp";
  if (!fs::path(a.out).parent_path().empty()) fs::create_directories(fs::path(a.out).parent_path());
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write '" + tmp.string() + "'");

  SelectionDiagnostics diag;
  std::vector<PreferencePair> held;
  ScoresGroupReader reader(a.scores);
  std::vector<ScoredGroup> chunk;
  auto flush = [&] {
    if (chunk.empty()) return;
    SelectionDiagnostics d;
    auto pairs = select_pairs(chunk, unbudgeted, &d);
    diag.merge(d);
    chunk.clear();
    if (policy.budget) {
      std::move(pairs.begin(), pairs.end(), std::back_inserter(held));
    } else {
      for (const auto& p : pairs) out << pair_to_json(p, echo, tp).dump() << '\n';
    }
  };
  while (auto g = reader.next()) {
    chunk.push_back(std::move(*g));
    if (chunk.size() >= a.chunk) flush();
  }
  flush();
  if (policy.budget) {
    held = subsample(std::move(held), *policy.budget, policy.seed);
    for (const auto& p : held) out << pair_to_json(p, echo, tp).dump() << '\n';
    diag.kept_after_budget = held.size();
  }
  out.close();
  if (!out) fail(ErrorKind::IoError, "write to '" + tmp.string() + "' failed");
  fs::rename(tmp, a.out);
  atomic_write(diag_path, diag.to_json().dump(2) + "\n");
  note(std::to_string(diag.kept_after_budget) + " of " + std::to_string(diag.candidates) + " candidate pairs kept");
  if (diag.kept_after_budget == 0) {
    fail(ErrorKind::EmptySelection, "no pairs survived selection (" + std::to_string(diag.candidates) + " candidates)");
  }
}

// ---------------------------------------------------------------------------
// campaign / sim

struct CampaignArgs {
  std::string config, workdir;
  bool resume = false;
};

void cmd_campaign(const CampaignArgs& a) {
  require_file(a.config, "campaign config");
  require_output(a.workdir.empty() ? "" : a.workdir + "/state.json", "working directory");
  const auto cfg = CampaignConfig::from_json(json::parse(read_file(a.config)), fs::path(a.config).parent_path());
  require_file(cfg.prompts_path, "prompts");
  require_file(cfg.prompt_embeddings_path, "prompt embeddings");
  require_file(cfg.refs_path, "refs");
  CampaignRunner runner(cfg, a.workdir, command_clients(cfg));
  for (const auto& w : runner.warnings()) std::cerr << "pairforge: warning: " << w << '\n';
  const auto state = runner.run(a.resume);
  std::cout << campaign_trajectory_csv(state);
}

struct SimArgs {
  PolicyFlags policy;
  std::size_t rounds = 3, n_prompts = 50, m = 10;
  std::string workdir, out, world;
  double fidelity_decay = 0.0;
  bool resume = false;
};

void cmd_sim(const SimArgs& a) {
  if (a.workdir.empty()) fail(ErrorKind::InvalidArgument, "--workdir is required");
  if (!a.out.empty()) require_output(a.out, "output");
  if (!a.world.empty()) require_file(a.world, "world");
  sim::SynthWorld world =
      a.world.empty() ? sim::sim_default_world(a.policy.seed) : sim::world_from_json(json::parse(read_file(a.world)));
  if (a.fidelity_decay > 0.0) world.fidelity_decay = a.fidelity_decay;
  auto cfg = sim::sim_campaign_config(a.policy.build(SelectionPolicy::preset("MIX")), a.rounds, a.policy.seed);
  cfg.n_prompts = a.n_prompts;
  cfg.m_per_prompt = a.m;
  cfg.initial_checkpoint = sim::world_handle(world.mean_ts, world.mean_is);
  const fs::path inputs = fs::absolute(a.workdir) / "inputs";
  fs::create_directories(inputs);
  sim::write_sim_inputs(inputs, cfg);
  CampaignRunner runner(cfg, a.workdir, sim::sim_clients(world, cfg.dim));
  for (const auto& w : runner.warnings()) std::cerr << "pairforge: warning: " << w << '\n';
  const auto state = runner.run(a.resume);
  const auto csv = campaign_trajectory_csv(state);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    atomic_write(a.out, csv);
  }
}

struct SimClientArgs {
  std::string role, world, request, response;
  std::size_t dim = 16;
  std::uint64_t seed = 0;
};

void cmd_sim_client(const SimClientArgs& a) {
  require_file(a.request, "request");
  const auto world = a.world.empty() ? sim::sim_default_world(a.seed) : sim::world_from_json(json::parse(read_file(a.world)));
  std::unique_ptr<Client> client;
  if (a.role == "generate") {
    client = std::make_unique<sim::SimGenerator>(world);
  } else if (a.role == "embed") {
    client = std::make_unique<sim::SimEmbedder>(a.dim);
  } else if (a.role == "train") {
    client = std::make_unique<sim::SimTrainer>(world);
  } else {
    fail(ErrorKind::InvalidArgument, "unknown sim client role '" + a.role + "'");
  }
  atomic_write(a.response, client->call(json::parse(read_file(a.request))).dump() + "\n");
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::vector<std::string> scores;  // concept=path
  ScoreInputs raw;
  std::size_t images_per_prompt = 10;
  bool allow_partial = false;
  std::string subset, out, csv;
};

void cmd_eval(const EvalArgs& a) {
  std::vector<std::pair<std::string, std::string>> inputs;
  for (const auto& s : a.scores) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorKind::InvalidArgument, "--scores expects CONCEPT=PATH, got '" + s + "'");
    inputs.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    require_file(inputs.back().second, "scores");
  }
  const bool raw = !a.raw.samples.empty();
  if (raw) check_score_inputs(a.raw);
  if (inputs.empty() && !raw) fail(ErrorKind::InvalidArgument, "give --scores CONCEPT=PATH or --samples with inputs");
  if (!a.out.empty()) require_output(a.out, "output");
  if (!a.csv.empty()) require_output(a.csv, "trajectory CSV");

  const EvalOptions opts{a.images_per_prompt, a.allow_partial};
  EvalReport report;
  report.n_images_per_prompt = a.images_per_prompt;
  for (const auto& [concept_id, path] : inputs) {
    const auto groups = group_by_prompt(read_scores_jsonl(path));
    report.per_concept.push_back(eval_concept_scores(concept_id, groups, opts));
  }
  if (raw) {
    const auto groups = group_by_prompt(score_files(a.raw, std::nullopt));
    report.per_concept.push_back(eval_concept_scores(a.raw.concept_id, groups, opts));
  }
  report.overall = aggregate(report.per_concept);
  std::sort(report.per_concept.begin(), report.per_concept.end(),
            [](const ConceptEval& x, const ConceptEval& y) { return x.concept_id < y.concept_id; });
  report.prompt_subset = a.subset.empty() && report.per_concept.size() == 1
                             ? std::string(to_string(subset_for_class(report.per_concept.front().concept_id)))
                             : a.subset;
  const auto doc = report.to_json().dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << doc;
  } else {
    atomic_write(a.out, doc);
  }
  if (!a.csv.empty()) {
    std::vector<TrajectoryPoint> pts;
    for (const auto& c : report.per_concept) pts.push_back({c.concept_id, c.mean_clip_t, c.mean_clip_i});
    atomic_write(a.csv, trajectory_csv(pts));
  }
}

// ---------------------------------------------------------------------------
// tabulate-votes / plot

struct VotesArgs {
  std::string votes, out;
};

void cmd_tabulate_votes(const VotesArgs& a) {
  require_file(a.votes, "votes");
  if (!a.out.empty()) require_output(a.out, "output");
  std::ifstream in(a.votes, std::ios::binary);
  const auto tallies = tabulate_votes(in);
  std::cout << "method,question,win_pct,lose_pct,no_diff_pct,total\n";
  for (const auto& t : tallies) {
    std::cout << t.method << ',' << t.question << ',' << format_pct(t.win_pct()) << ','
              << format_pct(t.lose_pct()) << ',' << format_pct(t.no_diff_pct()) << ',' << t.total() << '\n';
  }
  if (!a.out.empty()) atomic_write(a.out, votes_to_json(tallies).dump(2) + "\n");
}

struct PlotArgs {
  std::vector<std::string> trajectories;
  std::string out, title, frontier;
};

void cmd_plot(const PlotArgs& a) {
  for (const auto& t : a.trajectories) require_file(t, "trajectory");
  require_output(a.out, "output");
  if (!a.frontier.empty()) require_output(a.frontier, "frontier");
  std::vector<TrajectoryPoint> pts;
  for (const auto& t : a.trajectories) {
    auto more = read_trajectory_csv(t);
    pts.insert(pts.end(), more.begin(), more.end());
  }
  if (pts.empty()) fail(ErrorKind::EmptyInput, "no trajectory points to plot");
  atomic_write(a.out, trajectory_svg(pts, a.title));
  if (!a.frontier.empty()) atomic_write(a.frontier, trajectory_csv(pareto_frontier(pts)));
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::EmptySelection:
      return kExitEmptySelection;
    case ErrorKind::GeneratorFailure:
    case ErrorKind::EmbedderFailure:
    case ErrorKind::TrainerFailure:
      return kExitClientFailure;
    default:
      return kExitError;
  }
}

void report_error(std::string_view kind, std::string_view message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

// "--cone -20,70" would otherwise be read as a short flag.
std::vector<std::string> join_negative_values(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if ((arg == "--cone" || arg == "--preset") && i + 1 < argc && argv[i + 1][0] == '-') {
      arg += "=";
      arg += argv[++i];
    }
    args.push_back(std::move(arg));
  }
  std::reverse(args.begin(), args.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pairforge: preference-pair mining for concept personalization", "pairforge"};
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("--jobs,-j", jobs, "worker threads for scoring and selection; outputs do not depend on it")
      ->check(CLI::PositiveNumber);
  app.add_flag("--verbose,-v", g_verbose, "progress messages on stderr");

  PromptsArgs pa;
  auto* prompts = app.add_subcommand("prompts", "build a concept's prompt set from COCO captions and LLM prompts");
  prompts->add_option("--captions", pa.captions, "COCO captions JSONL");
  prompts->add_option("--llm-prompts", pa.llm, "LLM prompt lines");
  prompts->add_option("--concept", pa.concept_class, "concept class, e.g. dog")->required();
  prompts->add_option("--concept-map", pa.concept_map, "concept map JSON (default: built-in DreamBench map)");
  prompts->add_option("--n-coco", pa.n_coco, "COCO-derived prompts to sample")->capture_default_str();
  prompts->add_option("--n-llm", pa.n_llm, "LLM prompts to include")->capture_default_str();
  prompts->add_option("--seed", pa.seed, "sampling seed");
  prompts->add_option("--out,-o", pa.out, "PROMPTS-JSONL output")->required();
  prompts->footer(std::string(kCocoSchema) + kPromptsSchema);

  ScoreArgs sa;
  auto* score = app.add_subcommand("score", "score sample embeddings for TS and IS");
  score->add_option("--samples", sa.in.samples, "EMB-JSONL of generated images with prompt_id")->required();
  score->add_option("--prompts", sa.in.prompts, "PROMPTS-JSONL")->required();
  score->add_option("--prompt-embeddings", sa.in.prompt_embeddings, "EMB-JSONL of prompt texts, id = prompt_id")
      ->required();
  score->add_option("--refs", sa.in.refs, "EMB-JSONL of concept reference images")->required();
  score->add_option("--concept", sa.in.concept_id, "concept id recorded with the refs");
  score->add_option("--dim", sa.in.dim, "expected embedding dimension (0 = infer)");
  score->add_option("--lambda", sa.lambda, "also emit the weighted score at this lambda");
  score->add_option("--out,-o", sa.out, "SCORES-JSONL output")->required();
  score->footer(std::string(kEmbSchema) + kPromptsSchema + kScoresSchema);

  SelectArgs sel;
  auto* select = app.add_subcommand("select", "select preference pairs from scored samples");
  select->add_option("--scores", sel.scores, "SCORES-JSONL, sorted by (prompt_id, sample_id)")->required();
  select->add_option("--prompts", sel.prompts, "PROMPTS-JSONL to fill prompt_text");
  select->add_option("--out,-o", sel.out, "PAIRS-JSONL output")->required();
  select->add_option("--diagnostics", sel.diagnostics, "diagnostics JSON (default: <out>.diagnostics.json)");
  select->add_option("--chunk", sel.chunk, "prompt groups held in memory at once")->check(CLI::PositiveNumber);
  sel.policy.attach(select);
  select->footer(std::string("Policy: --lambda/--tau (threshold) or --cone=C1,C2 or --preset=TS|IS|MIX.\n"
                             "  Without policy flags: threshold with lambda 0.5, tau 0.\n") +
                 kScoresSchema + kPairsSchema);

  CampaignArgs ca;
  auto* campaign = app.add_subcommand("campaign", "run a multi-round campaign through external clients");
  campaign->add_option("--config", ca.config, "campaign config JSON")->required();
  campaign->add_option("--workdir", ca.workdir, "working directory")->required();
  campaign->add_flag("--resume", ca.resume, "continue the campaign already in --workdir");
  campaign->footer(std::string(kCampaignSchema) + kTrajectorySchema);

  SimArgs sm;
  auto* simc = app.add_subcommand("sim", "run a campaign against the synthetic world");
  sm.policy.attach(simc);
  simc->add_option("--rounds", sm.rounds, "training rounds")->capture_default_str();
  simc->add_option("--n-prompts", sm.n_prompts, "prompts per round")->capture_default_str();
  simc->add_option("--m", sm.m, "samples per prompt")->capture_default_str();
  simc->add_option("--world", sm.world, "synthetic world JSON");
  simc->add_option("--fidelity-decay", sm.fidelity_decay, "IS lost per unit of distance from the start");
  simc->add_option("--workdir", sm.workdir, "working directory")->required();
  simc->add_flag("--resume", sm.resume, "continue the run already in --workdir");
  simc->add_option("--out,-o", sm.out, "TRAJECTORY-CSV output (default: stdout)");
  simc->footer(std::string("Default policy: --preset=MIX.\n"
                           "World JSON: {\"mean_ts\", \"mean_is\", \"noise_scale\", \"drift_rate\", \"seed\",\n"
                           "  \"centered_noise\", \"fidelity_decay\", \"anchor_ts\", \"anchor_is\"}\n") +
               kTrajectorySchema);

  SimClientArgs sc;
  auto* simclient = app.add_subcommand("sim-client", "synthetic generator/embedder/trainer command");
  simclient->group("");
  simclient->add_option("--role", sc.role, "generate, embed or train")->required();
  simclient->add_option("--world", sc.world, "synthetic world JSON");
  simclient->add_option("--seed", sc.seed, "world seed when --world is absent");
  simclient->add_option("--dim", sc.dim, "embedding dimension");
  simclient->add_option("request", sc.request)->required();
  simclient->add_option("response", sc.response)->required();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "CLIP-I / CLIP-T evaluation report");
  eval->add_option("--scores", ea.scores, "CONCEPT=SCORES-JSONL, repeatable");
  eval->add_option("--samples", ea.raw.samples, "EMB-JSONL of images, scored internally");
  eval->add_option("--prompts", ea.raw.prompts, "PROMPTS-JSONL (with --samples)");
  eval->add_option("--prompt-embeddings", ea.raw.prompt_embeddings, "EMB-JSONL of prompt texts (with --samples)");
  eval->add_option("--refs", ea.raw.refs, "EMB-JSONL of references (with --samples)");
  eval->add_option("--concept", ea.raw.concept_id, "concept id for --samples");
  eval->add_option("--images-per-prompt", ea.images_per_prompt, "images expected per prompt")->capture_default_str();
  eval->add_flag("--allow-partial", ea.allow_partial, "accept prompts with fewer images");
  eval->add_option("--subset", ea.subset, "prompt subset label, live or object");
  eval->add_option("--out,-o", ea.out, "EVAL-JSON output (default: stdout)");
  eval->add_option("--csv", ea.csv, "TRAJECTORY-CSV of per-concept (CLIP-T, CLIP-I)");
  eval->footer(std::string("EVAL-JSON: {\"per_concept\": {\"<concept>\": {\"mean_clip_i\", \"mean_clip_t\", \"n_prompts\"}},\n"
                           "  \"overall\": {\"mean_i\", \"sigma_i\", \"mean_t\", \"sigma_t\", \"n_concepts\"},\n"
                           "  \"prompt_subset\", \"n_images_per_prompt\"}; sigma is the population deviation.\n") +
               kScoresSchema + kEmbSchema + kTrajectorySchema);

  VotesArgs va;
  auto* votes = app.add_subcommand("tabulate-votes", "win/lose/no-diff percentages from a vote CSV");
  votes->add_option("--votes", va.votes, "vote CSV")->required();
  votes->add_option("--out,-o", va.out, "JSON output");
  votes->footer(kVotesSchema);

  PlotArgs pl;
  auto* plot = app.add_subcommand("plot", "SVG scatter of trajectory points with the Pareto frontier");
  plot->add_option("--trajectory", pl.trajectories, "TRAJECTORY-CSV, repeatable")->required();
  plot->add_option("--out,-o", pl.out, "SVG output")->required();
  plot->add_option("--title", pl.title, "plot title");
  plot->add_option("--frontier", pl.frontier, "also write the frontier as TRAJECTORY-CSV");
  plot->footer(kTrajectorySchema);

  try {
    auto args = join_negative_values(argc, argv);
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  omp_set_num_threads(jobs);

  try {
    if (*prompts) cmd_prompts(pa);
    if (*score) cmd_score(sa);
    if (*select) cmd_select(sel);
    if (*campaign) cmd_campaign(ca);
    if (*simc) cmd_sim(sm);
    if (*simclient) cmd_sim_client(sc);
    if (*eval) cmd_eval(ea);
    if (*votes) cmd_tabulate_votes(va);
    if (*plot) cmd_plot(pl);
  } catch (const Error& e) {
    report_error(to_string(e.kind()), e.what());
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    report_error("ParseError", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    report_error("Internal", e.what());
    return kExitError;
  }
  return 0;
}
