#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace masem {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// One particle per row.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Rng = std::mt19937_64;

// Error taxonomy shared by all modules.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A constraint function returned NaN/Inf.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, int index)
      : std::runtime_error(what + " (output index " + std::to_string(index) + ")"), index_(index) {}
  int index() const noexcept { return index_; }

 private:
  int index_;
};

/// Deterministic named sub-stream of a master seed. Streams with different
/// (tag, index) pairs are statistically independent for practical purposes.
inline Rng make_stream(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
  std::uint32_t tag_hash = 2166136261u;  // FNV-1a
  for (unsigned char c : tag) {
    tag_hash ^= c;
    tag_hash *= 16777619u;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag_hash,
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline Vector normal_vector(Rng& rng, Eigen::Index d, double scale = 1.0) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = scale * standard_normal(rng);
  return v;
}

inline Vector random_unit_vector(Rng& rng, Eigen::Index d) {
  Vector v = normal_vector(rng, d);
  double n = v.norm();
  while (n == 0.0) {
    v = normal_vector(rng, d);
    n = v.norm();
  }
  return v / n;
}

}  // namespace masem
