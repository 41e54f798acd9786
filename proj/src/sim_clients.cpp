#include "pairforge/sim_clients.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "pairforge/prompts.hpp"

namespace pairforge::sim {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Parses "<a><sep><b>" where both halves are full doubles.
bool parse_two(const std::string& s, char sep, double& a, double& b) {
  const auto cut = s.find(sep);
  if (cut == std::string::npos) return false;
  const std::string lhs = s.substr(0, cut), rhs = s.substr(cut + 1);
  char* end = nullptr;
  a = std::strtod(lhs.c_str(), &end);
  if (lhs.empty() || *end != '\0') return false;
  b = std::strtod(rhs.c_str(), &end);
  if (rhs.empty() || *end != '\0') return false;
  return std::isfinite(a) && std::isfinite(b);
}

std::string exchange_path(const json& request, const char* key) {
  auto it = request.find(key);
  if (it == request.end() || !it->is_string()) {
    fail(ErrorKind::InvalidArgument, std::string("sim request lacks '") + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

std::string world_handle(double mean_ts, double mean_is) {
  return "sim:" + g17(mean_ts) + ":" + g17(mean_is);
}

SynthWorld world_from_handle(const SynthWorld& base, const std::string& handle) {
  if (handle.empty()) return base;
  double ts = 0.0, is = 0.0;
  if (handle.rfind("sim:", 0) != 0 || !parse_two(handle.substr(4), ':', ts, is)) {
    fail(ErrorKind::InvalidArgument, "not a synthetic checkpoint handle: '" + handle + "'");
  }
  SynthWorld w = base;
  w.mean_ts = ts;
  w.mean_is = is;
  return w;
}

json world_to_json(const SynthWorld& w) {
  return {{"mean_ts", w.mean_ts},         {"mean_is", w.mean_is},
          {"noise_scale", w.noise_scale}, {"drift_rate", w.drift_rate},
          {"seed", w.seed},               {"centered_noise", w.centered_noise},
          {"fidelity_decay", w.fidelity_decay}, {"anchor_ts", w.anchor_ts},
          {"anchor_is", w.anchor_is}};
}

SynthWorld world_from_json(const json& obj) {
  SynthWorld w;
  try {
    w.mean_ts = obj.value("mean_ts", w.mean_ts);
    w.mean_is = obj.value("mean_is", w.mean_is);
    w.noise_scale = obj.value("noise_scale", w.noise_scale);
    w.drift_rate = obj.value("drift_rate", w.drift_rate);
    w.seed = obj.value("seed", w.seed);
    w.centered_noise = obj.value("centered_noise", w.centered_noise);
    w.fidelity_decay = obj.value("fidelity_decay", w.fidelity_decay);
    w.anchor_ts = obj.value("anchor_ts", w.anchor_ts);
    w.anchor_is = obj.value("anchor_is", w.anchor_is);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidConfig, std::string("synthetic world: ") + e.what());
  }
  return w;
}

std::vector<double> synth_vector(double ts, double is, std::size_t dim) {
  if (dim < 3) fail(ErrorKind::InvalidArgument, "synthetic embeddings need dim >= 3");
  const double r2 = ts * ts + is * is;
  if (r2 > 1.0) {
    const double r = std::sqrt(r2);
    ts /= r;
    is /= r;
  }
  std::vector<double> v(dim, 0.0);
  v[0] = ts;
  v[1] = is;
  v[2] = std::sqrt(std::max(0.0, 1.0 - ts * ts - is * is));
  return v;
}

json SimGenerator::call(const json& request) {
  const auto world = world_from_handle(base_, request.value("checkpoint", ""));
  const auto& prompts = request.at("prompts");
  const std::size_t m = request.at("m_per_prompt").get<std::size_t>();
  const std::size_t round = request.value("round", std::size_t{0});
  const auto stream = request.value("seed", std::uint64_t{round});
  const auto draws = synth_generate(world, prompts.size(), m, stream);
  json samples = json::array();
  for (const auto& d : draws) {
    const auto pid = prompts.at(d.prompt_index).at("prompt_id").get<std::string>();
    samples.push_back({{"sample_id", pid + "-r" + std::to_string(round) + "-s" + std::to_string(d.sample_index)},
                       {"prompt_id", pid},
                       {"artifact_uri", "sim://" + g17(d.ts) + "," + g17(d.is)}});
  }
  return {{"samples", samples}};
}

json SimEmbedder::call(const json& request) {
  const std::string out = exchange_path(request, "output_path");
  std::vector<EmbeddingLine> lines;
  for (const auto& item : request.at("items")) {
    const auto id = item.at("id").get<std::string>();
    const auto uri = item.value("uri", "");
    double ts = 0.0, is = 0.0;
    if (uri.rfind("sim://", 0) != 0 || !parse_two(uri.substr(6), ',', ts, is)) {
      fail(ErrorKind::EmbedderFailure, "sample '" + id + "' has no synthetic uri");
    }
    const auto v = synth_vector(ts, is, dim_);
    EmbeddingLine line{make_embedding(id, EmbeddingKind::image, v), std::nullopt, uri};
    if (auto p = item.find("prompt_id"); p != item.end()) line.prompt_id = p->get<std::string>();
    lines.push_back(std::move(line));
  }
  write_emb_jsonl(out, lines);
  return {{"embeddings_path", out}};
}

json SimTrainer::call(const json& request) {
  const auto world = world_from_handle(base_, request.value("checkpoint", ""));
  const auto pairs = read_pairs_jsonl(exchange_path(request, "pairs_path"));
  const auto next = synth_update(world, pairs);
  return {{"checkpoint", world_handle(next.mean_ts, next.mean_is)}, {"n_pairs", pairs.size()}};
}

CampaignClients sim_clients(const SynthWorld& base, std::size_t dim) {
  return {std::make_shared<SimGenerator>(base), std::make_shared<SimEmbedder>(dim),
          std::make_shared<SimTrainer>(base)};
}

void write_sim_inputs(const std::filesystem::path& dir, CampaignConfig& config, std::size_t n_refs) {
  std::string prompts;
  std::vector<EmbeddingLine> text, refs;
  std::vector<double> e0(config.dim, 0.0), e1(config.dim, 0.0);
  e0.at(0) = 1.0;
  e1.at(1) = 1.0;
  char id[32];
  for (std::size_t i = 0; i < config.n_prompts; ++i) {
    std::snprintf(id, sizeof id, "sim-%05zu", i);
    prompts += json{{"prompt_id", id},
                    {"text", "a photo of [V*] in scene " + std::to_string(i)},
                    {"source", "custom"}}
                   .dump() +
               "\n";
    text.push_back({make_embedding(id, EmbeddingKind::text, e0), std::nullopt, std::nullopt});
  }
  for (std::size_t i = 0; i < n_refs; ++i) {
    std::snprintf(id, sizeof id, "ref-%02zu", i);
    refs.push_back({make_embedding(id, EmbeddingKind::image, e1), std::nullopt, std::nullopt});
  }
  atomic_write(dir / "prompts.jsonl", prompts);
  write_emb_jsonl(dir / "prompt_embeddings.jsonl", text);
  write_emb_jsonl(dir / "refs.jsonl", refs);
  config.prompts_path = (dir / "prompts.jsonl").string();
  config.prompt_embeddings_path = (dir / "prompt_embeddings.jsonl").string();
  config.refs_path = (dir / "refs.jsonl").string();
}

SynthWorld sim_default_world(std::uint64_t seed) {
  SynthWorld w;
  w.seed = seed;
  w.centered_noise = true;
  return w;
}

CampaignConfig sim_campaign_config(const SelectionPolicy& policy, std::size_t rounds,
                                   std::uint64_t seed) {
  CampaignConfig c;
  c.concept_id = "sim";
  c.n_prompts = 50;
  c.m_per_prompt = 10;
  c.rounds = rounds;
  c.policy = policy;
  c.dim = 16;
  c.seed = seed;
  const auto w = sim_default_world(seed);
  c.initial_checkpoint = world_handle(w.mean_ts, w.mean_is);
  return c;
}

}  // namespace pairforge::sim
