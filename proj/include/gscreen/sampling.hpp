#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace gscreen {

/// Radical-inverse of `index` in the given prime base, in [0,1).
double radical_inverse(std::uint64_t index, std::uint32_t base);

/// Deterministic low-discrepancy (Halton) point sequence.  The seed is a
/// start offset into the sequence and is recorded by callers so every
/// sampled check is reproducible.
class HaltonSampler {
 public:
  HaltonSampler(int dim, std::uint64_t seed = 0);
  Eigen::VectorXd next();           // point in [0,1)^dim
  Eigen::VectorXd next_in(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

 private:
  std::vector<std::uint32_t> bases_;
  std::uint64_t index_;
};

/// Seeded uniform RNG with a platform-independent [0,1) mapping.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  std::uint64_t next_u64();
  double uniform();  // [0,1)
  double uniform(double lo, double hi);
  Eigen::VectorXd uniform_in(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

 private:
  std::uint64_t state_;
};

}  // namespace gscreen
