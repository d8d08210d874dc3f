#pragma once

#include <Eigen/Dense>

#include "gscreen/model.hpp"

// Extra models used across the test suites, beyond the registered builtins.
namespace testsupport {

inline gscreen::Box box1(double lo, double hi) {
  gscreen::Box b;
  b.lo.resize(1);
  b.hi.resize(1);
  b.lo[0] = lo;
  b.hi[0] = hi;
  return b;
}

inline Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd x(1);
  x[0] = v;
  return x;
}

// Quasilinear with a nonseparable negatively-curved b: G is strictly concave
// in t along G-segments for probe agents away from the base agent, so the
// segment-convexity hypothesis fails.
inline gscreen::ModelSpec g3_violating_model() {
  using namespace gscreen;
  return make_family_model(Family::Quasilinear, 1, 1, box1(0, 1), box1(0.3, 0.8), 0.5, 1.5,
                           "x1*y1 - 0.15*x1^2*y1^2", std::nullopt, std::string("y1^2/2"),
                           vec1(0.3), 1.5);
}

// Inhomogeneous-sensitivity family with zero cost (pi = z) and a curved b, so
// the closed-form quadratic form is nonzero and varies over the box.
inline gscreen::ModelSpec inhomogeneous_zero_cost_model() {
  using namespace gscreen;
  return make_family_model(Family::Inhomogeneous, 1, 1, box1(0.5, 1.5), box1(0.25, 1.25), 0.1, 1.0,
                           "x1*y1 + 0.05*x1^2*y1^2", std::string("z"), std::nullopt, vec1(0.25),
                           1.0);
}

// Full inhomogeneous-sensitivity family: curved b, agent-dependent price
// disutility, quadratic cost.
inline gscreen::ModelSpec inhomogeneous_full_model() {
  using namespace gscreen;
  return make_family_model(Family::Inhomogeneous, 1, 1, box1(0.5, 1.5), box1(0.25, 1.25), 0.1, 1.0,
                           "x1*y1 + 0.05*x1^2*y1^2", std::string("z + 0.5*x1*z^2"),
                           std::string("y1^2/2"), vec1(0.25), 1.0);
}

// pi strictly convex in the price: the criterion matrix is indefinite.
inline gscreen::ModelSpec indefinite_model() {
  using namespace gscreen;
  ModelSpec spec;
  spec.m = spec.n = 1;
  spec.X = box1(0, 1);
  spec.Y = box1(0, 1);
  spec.z_lo = 0;
  spec.z_hi = 2;
  auto vars = model_variables(1, 1);
  spec.G = parse("x1*y1 - z", vars);
  spec.pi = parse("z + z^2 - y1^2/2", vars);
  spec.y_outside = vec1(0);
  spec.z_outside = 0;
  validate(spec);
  return spec;
}

// Concave manufacturing cost flips the quasilinear criterion to the convex side.
inline gscreen::ModelSpec convex_flip_model() {
  using namespace gscreen;
  ModelSpec spec;
  spec.m = spec.n = 1;
  spec.X = box1(0, 1);
  spec.Y = box1(0, 1);
  spec.z_lo = 0;
  spec.z_hi = 2;
  auto vars = model_variables(1, 1);
  spec.G = parse("x1*y1 - z", vars);
  spec.pi = parse("z + y1^2/2", vars);
  spec.y_outside = vec1(0);
  spec.z_outside = 0;
  validate(spec);
  return spec;
}

// Same flipped cost but with agents on both sides of zero, so the
// stationarity system has solutions in cl(X) and the local test can exhibit
// a Hessian witness.
inline gscreen::ModelSpec local_flip_model() {
  using namespace gscreen;
  ModelSpec spec;
  spec.m = spec.n = 1;
  spec.X = box1(-1, 1);
  spec.Y = box1(0, 1);
  spec.z_lo = 0;
  spec.z_hi = 2;
  auto vars = model_variables(1, 1);
  spec.G = parse("x1*y1 - z", vars);
  spec.pi = parse("z + y1^2/2", vars);
  spec.y_outside = vec1(0);
  spec.z_outside = 0;
  validate(spec);
  return spec;
}

}  // namespace testsupport
