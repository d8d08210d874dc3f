#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gscreen/geometry.hpp"
#include "gscreen/model.hpp"

namespace gscreen {

struct SolverOptions {
  double penalty_initial = 10.0;
  double penalty_factor = 2.0;
  int outer_iterations = 20;
  int inner_iterations = 200;
  int multistart = 8;
  int random_menu_starts = 256;  // cheap feasible menu starts screened before ascent
  int polish_sweeps = 200;       // pattern-search sweeps on the exact feasible objective
  std::uint64_t seed = 0;
  double constraint_tol = 1e-8;
  double gradient_tol = 1e-6;
};

struct DiscreteInstance {
  ModelSpec spec;
  AgentGrid agents;
  SolverOptions options;
};

struct Solution {
  Eigen::MatrixXd y;  // N x n
  Eigen::VectorXd z;  // N
  Eigen::VectorXd u;  // N, u_i = G(x_i, y_i, z_i)
  double profit = 0;
  double ic_residual = 0;  // worst pairwise slack (>= -1e-6 when converged)
  double ir_residual = 0;  // worst participation slack
  bool converged = false;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::vector<double> profit_trace;  // best feasible profit per outer stage, nondecreasing
  Eigen::VectorXd penalty_point;     // final penalty-stage iterate, for stationarity checks
  double penalty_rho = 0;

  IndirectUtility allocation(const DiscreteInstance& instance) const;
};

/// Maximizes expected profit over per-agent contracts in cl(Y x Z) subject
/// to the pairwise incentive constraints and participation, by quadratic
/// penalty with projected-gradient inner iterations, started from pooling
/// at the outside option and from best-response allocations of random
/// menus; returns the best feasible solution found (every returned
/// solution is repaired to exact menu-feasibility).
Solution solve_principal(const DiscreteInstance& instance);

struct VerifyResult {
  bool feasible = false;
  double ic_residual = 0;
  double ir_residual = 0;
  double profit = 0;
  double stationarity = 0;  // norm of the projected penalized gradient
};

VerifyResult verify_solution(const DiscreteInstance& instance, const Solution& sol);

struct UniquenessProbe {
  Eigen::MatrixXd distances;  // pairwise W^{1,2} distances of induced utilities
  double max_distance = 0;
  Eigen::VectorXd profits;
};

UniquenessProbe uniqueness_probe(const DiscreteInstance& instance, int runs);
UniquenessProbe uniqueness_probe(const DiscreteInstance& instance,
                                 const std::vector<std::uint64_t>& seeds);

}  // namespace gscreen
