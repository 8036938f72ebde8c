#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace skewcwm {

/// Seeded random source. All variates are produced by explicit algorithms on
/// top of a 64-bit Mersenne twister, so a seed yields the same stream on every
/// platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  double normal();

  /// Gamma with the given shape and rate (mean shape / rate).
  double gamma(double shape, double rate);

  /// Inverse Gaussian with the given mean and shape.
  double inverse_gaussian(double mean, double shape);

  /// Index drawn with probabilities proportional to `weights`.
  int categorical(const Eigen::VectorXd& weights);

  Eigen::VectorXd normal_vector(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace skewcwm
