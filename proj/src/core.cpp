#include "pairforge/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace pairforge {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyConceptSet: return "EmptyConceptSet";
    case ErrorKind::LambdaOutOfRange: return "LambdaOutOfRange";
    case ErrorKind::UnknownPrompt: return "UnknownPrompt";
    case ErrorKind::MixedPromptGroup: return "MixedPromptGroup";
    case ErrorKind::DegeneratePair: return "DegeneratePair";
    case ErrorKind::InvalidCone: return "InvalidCone";
    case ErrorKind::InvalidPolicy: return "InvalidPolicy";
    case ErrorKind::EmptyPairSet: return "EmptyPairSet";
    case ErrorKind::NotSingleOccurrence: return "NotSingleOccurrence";
    case ErrorKind::InsufficientCaptions: return "InsufficientCaptions";
    case ErrorKind::InvalidLlmPrompt: return "InvalidLlmPrompt";
    case ErrorKind::InsufficientPrompts: return "InsufficientPrompts";
    case ErrorKind::UnknownConcept: return "UnknownConcept";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::UnknownOutcome: return "UnknownOutcome";
    case ErrorKind::PromptGroupSizeMismatch: return "PromptGroupSizeMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::GeneratorFailure: return "GeneratorFailure";
    case ErrorKind::EmbedderFailure: return "EmbedderFailure";
    case ErrorKind::TrainerFailure: return "TrainerFailure";
    case ErrorKind::EmptySelection: return "EmptySelection";
  }
  return "Unknown";
}

std::string_view to_string(EmbeddingKind kind) {
  return kind == EmbeddingKind::image ? "image" : "text";
}

EmbeddingKind embedding_kind_from_string(std::string_view s) {
  if (s == "image") return EmbeddingKind::image;
  if (s == "text") return EmbeddingKind::text;
  fail(ErrorKind::ParseError, "unknown embedding kind '" + std::string(s) + "'");
}

std::vector<double> normalize(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) fail(ErrorKind::ZeroVector, "vector has a non-finite entry");
    sq += x * x;
  }
  if (!(sq > 0.0)) fail(ErrorKind::ZeroVector, "vector has zero norm");
  const double norm = std::sqrt(sq);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return out;
}

Embedding make_embedding(std::string id, EmbeddingKind kind, std::span<const double> raw) {
  return Embedding{std::move(id), kind, normalize(raw)};
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::DimensionMismatch,
         "dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  return std::clamp(dot(a, b), -1.0, 1.0);
}

double cosine(const Embedding& a, const Embedding& b) { return cosine(a.vector, b.vector); }

ConceptRefSet::ConceptRefSet(std::string concept_id, std::vector<Embedding> members)
    : concept_id_(std::move(concept_id)), members_(std::move(members)) {
  if (members_.empty()) {
    fail(ErrorKind::EmptyConceptSet, "concept '" + concept_id_ + "' has no reference images");
  }
  const std::size_t d = members_.front().dim();
  for (const auto& m : members_) {
    if (m.kind != EmbeddingKind::image) {
      fail(ErrorKind::InvalidArgument, "reference '" + m.id + "' is not an image embedding");
    }
    if (m.dim() != d) {
      fail(ErrorKind::DimensionMismatch, "reference '" + m.id + "' has dimension " +
                                             std::to_string(m.dim()) + ", expected " +
                                             std::to_string(d));
    }
  }
  std::stable_sort(members_.begin(), members_.end(),
                   [](const Embedding& x, const Embedding& y) { return x.id < y.id; });
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view stream) {
  return mix_seed(seed, fnv1a64(stream));
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t SeededRng::uniform_below(std::uint64_t bound) {
  if (bound == 0) fail(ErrorKind::InvalidArgument, "uniform_below: bound must be positive");
  // Largest multiple of bound that fits; draws at or above it are rejected.
  const std::uint64_t limit = (~std::uint64_t{0} / bound) * bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double SeededRng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform01();
  } while (u1 <= 0.0);
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace pairforge
