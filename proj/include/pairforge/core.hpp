#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pairforge/error.hpp"

namespace pairforge {

inline constexpr std::size_t kDefaultEmbeddingDim = 512;

enum class EmbeddingKind { image, text };

std::string_view to_string(EmbeddingKind kind);
EmbeddingKind embedding_kind_from_string(std::string_view s);

/// A unit-normalized CLIP-space vector. Construct through make_embedding so the
/// normalization invariant holds.
struct Embedding {
  std::string id;
  EmbeddingKind kind = EmbeddingKind::image;
  std::vector<double> vector;

  std::size_t dim() const noexcept { return vector.size(); }
};

/// Scales `v` to unit L2 norm. Throws ZeroVector for a zero norm or any
/// non-finite entry.
std::vector<double> normalize(std::span<const double> v);

Embedding make_embedding(std::string id, EmbeddingKind kind, std::span<const double> raw);

double dot(std::span<const double> a, std::span<const double> b);

/// Dot product of two unit vectors, clamped to [-1, 1].
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(const Embedding& a, const Embedding& b);

/// Reference images of one personalized concept. Members are kept sorted by id
/// so that accumulations over them have a fixed order.
class ConceptRefSet {
 public:
  ConceptRefSet() = default;
  ConceptRefSet(std::string concept_id, std::vector<Embedding> members);

  const std::string& concept_id() const noexcept { return concept_id_; }
  const std::vector<Embedding>& members() const noexcept { return members_; }
  std::size_t dim() const noexcept { return members_.empty() ? 0 : members_.front().dim(); }
  std::size_t size() const noexcept { return members_.size(); }

 private:
  std::string concept_id_;
  std::vector<Embedding> members_;
};

/// splitmix64 finalizer; derives independent stream seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t mix_seed(std::uint64_t seed, std::string_view stream);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

// Deterministic generator: std::mt19937_64, whose output sequence is fixed by
// the standard. Distributions are implemented here rather than taken from
// <random>, whose distribution algorithms are implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo bias.
  std::uint64_t uniform_below(std::uint64_t bound);

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform01();

  /// Standard normal via Box-Muller (one value per call, the pair's second
  /// value is cached).
  double normal();

  /// In-place partial Fisher-Yates: after the call, the first `k` entries of
  /// `items` are a uniform random k-subset in random order.
  template <typename T>
  void partial_shuffle(std::vector<T>& items, std::size_t k) {
    const std::size_t n = items.size();
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform_below(n - i));
      if (j != i) std::swap(items[i], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pairforge
