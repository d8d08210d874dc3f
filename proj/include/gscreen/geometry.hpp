#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gscreen/model.hpp"

namespace gscreen {

/// Tensor grid over cl(X) with normalized measure weights.
struct AgentGrid {
  std::vector<Eigen::VectorXd> axes;  // one coordinate vector per agent axis
  Eigen::MatrixXd points;             // N x m, row-major over axes (axis 0 slowest)
  Eigen::VectorXd weights;            // sums to 1
  int size() const { return static_cast<int>(points.rows()); }
  Eigen::VectorXd agent(int i) const { return points.row(i).transpose(); }
};

/// Uniform inclusive grid with `per_axis[k]` points on axis k (a single
/// point lands at the axis midpoint); weights follow spec.measure.
AgentGrid make_agent_grid(const ModelSpec& spec, const std::vector<int>& per_axis);
AgentGrid make_agent_grid(const ModelSpec& spec, const std::vector<Eigen::VectorXd>& axes);

/// Uniform inclusive grid over cl(Y) with the outside option prepended
/// (deduplicated); rows are product points.
Eigen::MatrixXd uniform_product_grid(const ModelSpec& spec, int per_axis);

// ------------------------------------------------------------- G-segments

struct GSegmentSample {
  double t;
  Eigen::VectorXd y;
  double z;
  double residual;  // norm of the interpolation defect at this t
};

struct GSegment {
  Eigen::VectorXd x0;
  Eigen::VectorXd y_from, y_to;
  double z_from = 0, z_to = 0;
  std::vector<GSegmentSample> samples;  // t = 0..1 inclusive, endpoints exact
  double max_residual() const;
};

struct GSegmentOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;
  double damping = 0.5;        // backtracking factor
  double domain_margin = 1e-9; // accepted distance outside cl(Y x Z)
};

/// Solves the interpolation system (G_x,G)(x0, y_t, z_t) = chord(t) on a
/// uniform grid of `steps` intervals by damped Gauss-Newton with
/// continuation in t (least squares when m > n; a step is accepted only if
/// the true residual meets the tolerance).  Throws NoConvergenceError with
/// the failing t (empirical evidence against range convexity) or
/// LeftDomainError when iterates escape cl(Y x Z).
GSegment solve_g_segment(const ModelSpec& spec, const Eigen::VectorXd& x0,
                         const Eigen::VectorXd& y_from, double z_from,
                         const Eigen::VectorXd& y_to, double z_to, int steps,
                         const GSegmentOptions& options = {});

struct SegmentConvexityReport {
  bool convex = false;
  bool strictly = false;
  double min_second_difference = 0;
  Eigen::VectorXd witness_x;
  double witness_t = 0;
};

/// Discrete convexity of t -> G(x, y_t, z_t) over `probes` sampled agents.
SegmentConvexityReport check_G3_along_segment(const ModelSpec& spec, const GSegment& seg,
                                              int probes, std::uint64_t seed = 0);

// ------------------------------------------------------ menus and utilities

struct Menu {
  Eigen::MatrixXd products;  // P x n
  Eigen::VectorXd prices;    // P, price(outside) <= z_outside
  int outside_index = 0;
  int size() const { return static_cast<int>(products.rows()); }
};

/// Builds a menu, prepending the outside option at its capped price if not
/// already present, and clamping the outside price to z_outside.
Menu make_menu(const ModelSpec& spec, const Eigen::MatrixXd& products, const Eigen::VectorXd& prices);

struct IndirectUtility {
  AgentGrid grid;
  Eigen::VectorXd values;
  bool has_assignment = false;
  Eigen::MatrixXd assign_y;  // N x n
  Eigen::VectorXd assign_z;  // N
};

/// Best response of every grid agent against the menu; ties broken first by
/// larger principal profit, then by lexicographically smaller product.
IndirectUtility utility_from_menu(const ModelSpec& spec, const Menu& menu, const AgentGrid& agents);

/// Smallest price menu on `product_grid` whose induced utility does not
/// exceed u on the grid: v(y) = max_i H(x_i, y, u(x_i)) clamped to cl(Z).
Menu menu_from_utility(const ModelSpec& spec, const IndirectUtility& u,
                       const Eigen::MatrixXd& product_grid);

struct IcReport {
  bool ok = false;
  double worst_slack = 0;
  int worst_i = -1, worst_j = -1;
};

IcReport check_incentive_compatible(const ModelSpec& spec, const IndirectUtility& alloc,
                                    double tol = 1e-8);

/// Individual-rationality slack: min_i u(x_i) - u_outside(x_i).
double participation_slack(const ModelSpec& spec, const IndirectUtility& alloc);

double profit_functional(const ModelSpec& spec, const IndirectUtility& alloc);

/// Discrete W^{1,2} distance: sqrt( sum_i w_i (u1-u2)^2 + sum_i w_i |D_h u1 - D_h u2|^2 )
/// with forward differences (backward at the upper boundary) on the tensor grid.
double discrete_sobolev_distance(const IndirectUtility& u1, const IndirectUtility& u2);

}  // namespace gscreen
