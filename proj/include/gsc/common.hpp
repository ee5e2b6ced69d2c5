#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gsc {

// ---------------------------------------------------------------------------
// Error types. Loaders and CLI validation throw these; the CLI maps them to
// exit codes (validation -> 2, epoch mismatch -> 3).
// ---------------------------------------------------------------------------

struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct epoch_mismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hop distances use -1 as the unreachable sentinel.
inline constexpr int32_t kUnreachable = -1;
inline constexpr double kInfDist = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Deterministic RNG. std:: distributions are implementation-defined, so the
// generators below are hand-rolled to keep seeded output byte-identical
// across standard libraries.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  uint64_t next_u64() {
    // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, n), n > 0.
  uint64_t below(uint64_t n) {
    uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform integer in [lo, hi] inclusive.
  int64_t range(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  // Uniform real in [0, 1).
  double real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform real in (0, 1]; never returns 0.
  double real_pos() { return 1.0 - real(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * real(); }

  // Marsaglia polar method.
  double gaussian(double mean, double stddev) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + stddev * spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * real() - 1.0;
      v = 2.0 * real() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return mean + stddev * u * m;
  }

  // Index in [0, weights.size()) with probability proportional to weights.
  size_t weighted(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double x = real() * total;
    for (size_t i = 0; i + 1 < weights.size(); ++i) {
      x -= weights[i];
      if (x < 0.0) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Zipf rank weights: weight(rank i, 1-based) = i^-s.
inline std::vector<double> zipf_weights(size_t n, double s) {
  std::vector<double> w(n);
  for (size_t i = 0; i < n; ++i) w[i] = std::pow(static_cast<double>(i + 1), -s);
  return w;
}

// ---------------------------------------------------------------------------
// Line-oriented text input: whitespace-separated tokens, '#' comments.
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    if (!tok.empty() && tok[0] == '#') break;
    out.push_back(tok);
  }
  return out;
}

// Calls fn(line_number, tokens) for every non-empty, non-comment line.
template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open file: " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = split_tokens(line);
    if (toks.empty()) continue;
    fn(lineno, toks);
  }
}

inline double parse_real(const std::string& tok, const std::string& path, size_t lineno) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw parse_error(path + ":" + std::to_string(lineno) + ": not a real number: '" + tok + "'");
  }
}

inline int64_t parse_int(const std::string& tok, const std::string& path, size_t lineno) {
  try {
    size_t pos = 0;
    int64_t v = std::stoll(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw parse_error(path + ":" + std::to_string(lineno) + ": not an integer: '" + tok + "'");
  }
}

inline bool is_real_token(const std::string& tok) {
  if (tok.empty()) return false;
  size_t pos = 0;
  try {
    (void)std::stod(tok, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == tok.size();
}

// FNV-1a over raw bytes; used to fingerprint datasets for epoch checks.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a_str(const std::string& s, uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

}  // namespace gsc
