// Fixtures and independent oracles shared by the unit tests and the
// acceptance binary. Oracles deliberately avoid the library's helpers.
#pragma once

#include <mpfr.h>
#include <stdlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <filesystem>
#include <string>
#include <vector>

#include "pairforge/core.hpp"
#include "pairforge/pairing.hpp"
#include "pairforge/prompts.hpp"
#include "pairforge/scoring.hpp"

namespace testsupport {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "pairforge-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline pairforge::ScoredSample scored(std::string id, std::string prompt, double ts, double is) {
  pairforge::ScoredSample s;
  s.sample_id = std::move(id);
  s.prompt_id = std::move(prompt);
  s.ts = ts;
  s.is = is;
  return s;
}

inline std::vector<double> random_vector(pairforge::SeededRng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.normal();
  return v;
}

inline pairforge::Embedding random_embedding(pairforge::SeededRng& rng, std::string id,
                                             pairforge::EmbeddingKind kind, std::size_t dim) {
  return pairforge::make_embedding(std::move(id), kind, random_vector(rng, dim));
}

// Cosine from raw (unnormalized) vectors in long double.
inline long double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<long double>(a[i]) * b[i];
    aa += static_cast<long double>(a[i]) * a[i];
    bb += static_cast<long double>(b[i]) * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// Angle of (dx, dy) in degrees in (-180, 180], computed through acos so it
// shares nothing with atan2.
inline double oracle_angle(double dx, double dy) {
  const long double r = std::hypot(static_cast<long double>(dx), static_cast<long double>(dy));
  long double a = std::acos(static_cast<long double>(dx) / r) * 180.0L / 3.14159265358979323846264338327950288L;
  if (dy < 0) a = -a;
  if (a == -180.0L) a = 180.0L;
  return static_cast<double>(a);
}

// -log(sigmoid(z)) to 256 bits, rounded to double.
inline double mpfr_neg_log_sigmoid(double z) {
  mpfr_t x, t;
  mpfr_inits2(256, x, t, static_cast<mpfr_ptr>(nullptr));
  mpfr_set_d(x, -z, MPFR_RNDN);
  mpfr_exp(t, x, MPFR_RNDN);      // e^-z
  mpfr_log1p(t, t, MPFR_RNDN);    // log(1 + e^-z)
  const double out = mpfr_get_d(t, MPFR_RNDN);
  mpfr_clears(x, t, static_cast<mpfr_ptr>(nullptr));
  return out;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
  return std::fabs(a - b) / scale;
}

// Groups of random (ts, is) scores: n prompts x m samples.
inline std::vector<pairforge::ScoredGroup> random_groups(std::uint64_t seed, std::size_t n,
                                                          std::size_t m) {
  pairforge::SeededRng rng(seed);
  std::vector<pairforge::ScoredSample> all;
  char pid[32], sid[64];
  for (std::size_t p = 0; p < n; ++p) {
    std::snprintf(pid, sizeof pid, "p%05zu", p);
    for (std::size_t j = 0; j < m; ++j) {
      std::snprintf(sid, sizeof sid, "%s-s%02zu", pid, j);
      all.push_back(scored(sid, pid, 0.2 + 0.1 * rng.uniform01(), 0.5 + 0.2 * rng.uniform01()));
    }
  }
  return pairforge::group_by_prompt(std::move(all));
}

// Synthetic COCO rows for the dog class: `accepted` distinct single-dog
// captions plus plural, repeated and off-class rows that must be rejected.
inline std::vector<pairforge::CocoCaption> dog_caption_corpus(std::size_t accepted) {
  static const char* adj[] = {"black", "white", "small", "large", "fluffy", "wet", "brown", "happy", "sleepy", "young"};
  static const char* verb[] = {"sitting", "running", "laying", "sleeping", "playing", "standing", "jumping", "resting", "waiting", "looking"};
  std::vector<pairforge::CocoCaption> rows;
  std::size_t n = 0;
  for (std::size_t place = 0; n < accepted; ++place) {
    for (const char* v : verb) {
      for (const char* a : adj) {
        if (n == accepted) break;
        rows.push_back({"ok" + std::to_string(n), std::string("a ") + a + " dog " + v + " near landmark " + std::to_string(place), "animal", "dog"});
        ++n;
      }
    }
  }
  for (std::size_t i = 0; i < 200; ++i) {
    const auto k = std::to_string(i);
    rows.push_back({"pl" + k, "two dogs playing in field " + k, "animal", "dog"});
    rows.push_back({"mu" + k, "a dog and a dog in yard " + k, "animal", "dog"});
    rows.push_back({"no" + k, "a puppy on sofa " + k, "animal", "dog"});
    rows.push_back({"ot" + k, "a cat on sofa " + k, "animal", "cat"});
  }
  // Case and spacing variants of accepted captions are duplicates.
  rows.push_back({"dup0", "A  BLACK dog sitting near landmark 0", "animal", "dog"});
  return rows;
}

inline std::vector<std::string> llm_prompt_pool(std::size_t n) {
  static const char* kind[] = {"in steampunk style", "with windmills on the horizon", "in a biker jacket",
                               "riding a scooter", "under neon lights"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("a [V*] " + std::string(kind[i % 5]) + " scene " + std::to_string(i));
  return out;
}

}  // namespace testsupport
