// Times the OpenMP scoring and selection kernels against their serial
// references and checks that both produce identical output.
//
//   bench_kernels [n_prompts] [m_per_prompt] [dim] [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "pairforge/pairing.hpp"
#include "pairforge/scoring.hpp"

using namespace pairforge;

namespace {

Embedding random_embedding(SeededRng& rng, std::string id, EmbeddingKind kind, std::size_t dim) {
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.normal();
  return make_embedding(std::move(id), kind, v);
}

template <class F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    best = std::min(best, dt.count());
  }
  return best;
}

bool same_scores(const std::vector<ScoredSample>& a, const std::vector<ScoredSample>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].sample_id != b[i].sample_id || a[i].ts != b[i].ts || a[i].is != b[i].is ||
        a[i].weighted != b[i].weighted) {
      return false;
    }
  }
  return true;
}

bool same_pairs(const std::vector<PreferencePair>& a, const std::vector<PreferencePair>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].winner_id != b[i].winner_id || a[i].loser_id != b[i].loser_id ||
        a[i].angle_deg != b[i].angle_deg || a[i].score_gap != b[i].score_gap) {
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1000;
  const std::size_t m = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 10;
  const std::size_t dim = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : kDefaultEmbeddingDim;
  const int repeats = argc > 4 ? std::atoi(argv[4]) : 3;

  SeededRng rng(42);
  std::vector<Embedding> refs;
  for (int i = 0; i < 5; ++i) refs.push_back(random_embedding(rng, "ref" + std::to_string(i), EmbeddingKind::image, dim));
  const ConceptRefSet ref_set("bench", refs);
  PromptLookup prompts;
  std::vector<GenerationSample> samples;
  char id[48];
  for (std::size_t p = 0; p < n; ++p) {
    std::snprintf(id, sizeof id, "p%05zu", p);
    prompts.emplace(id, PromptRecord{id, "", random_embedding(rng, id, EmbeddingKind::text, dim), PromptSource::custom});
    for (std::size_t j = 0; j < m; ++j) {
      GenerationSample g;
      g.prompt_id = id;
      g.sample_id = std::string(id) + "-s" + std::to_string(j);
      g.image_embedding = random_embedding(rng, g.sample_id, EmbeddingKind::image, dim);
      samples.push_back(std::move(g));
    }
  }

  std::printf("threads=%d prompts=%zu m=%zu dim=%zu\n", omp_get_max_threads(), n, m, dim);

  std::vector<ScoredSample> par, ser;
  const double t_ser = best_of(repeats, [&] { ser = score_batch_reference(samples, ref_set, prompts, 0.5); });
  const double t_par = best_of(repeats, [&] { par = score_batch(samples, ref_set, prompts, 0.5); });
  std::printf("score   serial %8.4fs  parallel %8.4fs  speedup %5.2fx  identical=%s\n", t_ser, t_par,
              t_ser / t_par, same_scores(par, ser) ? "yes" : "NO");

  const auto groups = group_by_prompt(ser);
  int bad = same_scores(par, ser) ? 0 : 1;
  for (const auto& policy : {SelectionPolicy::threshold(0.5, 0.0), SelectionPolicy::preset("MIX")}) {
    std::vector<PreferencePair> ps, pp;
    SelectionDiagnostics ds, dp;
    const double s = best_of(repeats, [&] { ds = {}; ps = select_pairs_reference(groups, policy, &ds); });
    const double p = best_of(repeats, [&] { dp = {}; pp = select_pairs(groups, policy, &dp); });
    const bool same = same_pairs(ps, pp) && ds.to_json() == dp.to_json();
    bad += same ? 0 : 1;
    std::printf("select  %-9s serial %8.4fs  parallel %8.4fs  speedup %5.2fx  candidates=%zu kept=%zu identical=%s\n",
                std::string(to_string(policy.mode)).c_str(), s, p, s / p, ds.candidates, ds.kept,
                same ? "yes" : "NO");
  }
  return bad == 0 ? 0 : 1;
}
