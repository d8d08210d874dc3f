#include "gscreen/sampling.hpp"

#include "gscreen/errors.hpp"

namespace gscreen {

namespace {
const std::uint32_t kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,
                                 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79};
}

double radical_inverse(std::uint64_t index, std::uint32_t base) {
  double inv = 1.0 / base;
  double f = inv;
  double out = 0.0;
  while (index > 0) {
    out += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return out;
}

HaltonSampler::HaltonSampler(int dim, std::uint64_t seed) : index_(seed + 1) {
  if (dim <= 0 || dim > static_cast<int>(sizeof(kPrimes) / sizeof(kPrimes[0])))
    throw InputError("HaltonSampler: unsupported dimension");
  bases_.assign(kPrimes, kPrimes + dim);
}

Eigen::VectorXd HaltonSampler::next() {
  Eigen::VectorXd p(static_cast<Eigen::Index>(bases_.size()));
  for (std::size_t d = 0; d < bases_.size(); ++d)
    p[static_cast<Eigen::Index>(d)] = radical_inverse(index_, bases_[d]);
  ++index_;
  return p;
}

Eigen::VectorXd HaltonSampler::next_in(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd u = next();
  return lo.array() + u.array() * (hi - lo).array();
}

std::uint64_t Rng::next_u64() {
  // splitmix64: small state, identical output on all platforms.
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

Eigen::VectorXd Rng::uniform_in(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd p(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) p[i] = uniform(lo[i], hi[i]);
  return p;
}

}  // namespace gscreen
