#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace gmatch {

// One row per graph.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Portable seeded RNG helpers: std::*_distribution output is
// implementation-defined, these are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform in [0, n).
  std::size_t below(std::size_t n);
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a seed with a stream id so sub-tasks draw independent streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace gmatch
