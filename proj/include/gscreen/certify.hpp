#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gscreen/model.hpp"

namespace gscreen {

/// One evaluation of the curvature criterion matrix
///   A = pi_{,kj} - pi_{,l} Gbar^{i,l} Gbar_{i,kj}   (augmentation at x0 = -1)
/// whose sign classifies the second derivative of the principal's profit
/// along G-segments: A non-positive definite everywhere means the profit
/// functional is concave, non-negative definite means convex.
struct CriterionSample {
  Eigen::VectorXd point;   // packed (x, y, z)
  Eigen::MatrixXd matrix;  // (n+1) x (n+1), symmetric by construction
  double eig_min = 0, eig_max = 0;
  double asymmetry = 0;  // ||A - A^T|| before the eigensolve, must be < 1e-6
};

enum class Verdict {
  Linear,
  Concave,
  StrictlyConcaveSampled,
  UniformlyConcave,
  Convex,
  StrictlyConvexSampled,
  UniformlyConvex,
  Indefinite,
  Inconclusive,
};

std::string to_string(Verdict v);
bool is_concave_side(Verdict v);
bool is_convex_side(Verdict v);

struct CertificationReport {
  Verdict verdict = Verdict::Inconclusive;
  double lambda = 0;   // uniform modulus estimate (concave: eig_max <= -lambda everywhere)
  double epsilon = 0;  // closed-form criterion margin, when a family criterion ran
  int samples_used = 0;
  std::uint64_t seed = 0;
  double tol = 0;
  double eig_min = 0, eig_max = 0;  // extremes over all samples
  double max_norm = 0;              // largest spectral norm of A over samples
  double max_asymmetry = 0;
  std::vector<CriterionSample> counterexamples;
  std::vector<std::string> notes;
};

struct CertifyOptions {
  int samples = 4096;
  double tol = 1e-8;  // absolute on eigenvalues, scaled by the matrix norm when it exceeds 1
  std::uint64_t seed = 0;
};

/// Assembles A at one point: the augmented cross matrix and its
/// Moore-Penrose left inverse are exact (second-order jets); the third-order
/// tensor uses central differences over exact Hessians.
CriterionSample criterion_matrix(const ModelSpec& spec, const Eigen::VectorXd& point);

/// Samples criterion_matrix over a low-discrepancy set of X x Y x Z and
/// classifies the sign of the quadratic form.
CertificationReport certify_matrix_criterion(const ModelSpec& spec, const CertifyOptions& options = {});

// ------------------------------------------------- closed-form family criteria

/// Family G = b(x,y) - f(z), pi = z - a(y): the quadratic form
///   { a_kj - b_{,kj}/f' + (b_{,l}/f' - a_l) b^{i,l} b_{i,kj} } xi^k xi^j.
/// Non-negative for all xi (with f convex) certifies concavity of the
/// profit functional; the matrix criterion's product block equals minus
/// this form.
double criterion_homogeneous(const ModelSpec& spec, const Eigen::VectorXd& point,
                             const Eigen::VectorXd& xi);

/// Family G = b(x,y) - f(x,z), pi = z: quadratic form
///   { -b_{,kj} + b_{,l} b^{i,l} b_{i,kj} } xi^k xi^j
/// together with the slope/curvature of h(x,y,z) = f - b_{,l} b^{i,l} f_{i,}
/// in z (h must be strictly increasing; its convexity picks the side).
struct InhomogeneousZeroCostValue {
  double form = 0;
  double h_z = 0, h_zz = 0;
};
InhomogeneousZeroCostValue criterion_inhomogeneous_zero_cost(const ModelSpec& spec,
                                                             const Eigen::VectorXd& point,
                                                             const Eigen::VectorXd& xi);

/// Family G = b(x,y) - f(x,z), pi = z - a(y): the full quadratic form and
/// the price-direction value h; the matrix criterion's blocks equal minus
/// these.
struct InhomogeneousValue {
  double form = 0;
  double h = 0;
};
InhomogeneousValue criterion_inhomogeneous(const ModelSpec& spec, const Eigen::VectorXd& point,
                                           const Eigen::VectorXd& xi);

/// Runs the closed-form criterion matching spec.family over a sample set and
/// returns the margin epsilon (min |form| when one-signed) plus a verdict.
CertificationReport certify_family_criterion(const ModelSpec& spec, const CertifyOptions& options = {});

// --------------------------------------------------------- fourth-order test

struct FourthOrderConfig {
  int segment_steps = 20;  // t-difference step is 1/segment_steps
  double s_step = 0.05;
  double solve_tol = 1e-10;
};

struct FourthOrderWitness {
  Eigen::VectorXd x0, x1;
  Eigen::VectorXd yz0, yz1;
  double value = 0;          // mixed fourth-order expression, <= tol supports segment convexity
  double direct_second = 0;  // min direct second difference of G(x1, .) along the x0-segment
};

struct FourthOrderReport {
  double min_value = 0, max_value = 0;
  int evaluated = 0;  // configurations where both curves solved
  int attempted = 0;
  int sign_agreements = 0;  // fourth-order vs direct segment convexity
  std::vector<std::pair<double, double>> evaluations;  // (value, direct second difference)
  std::vector<FourthOrderWitness> violations;
  std::vector<std::string> notes;
};

/// Samples configurations (x0, x1, endpoints), builds the agent-side curve
/// x_s through the segment midpoint by Newton continuation and evaluates
/// d^2/ds^2 [ (1/G_z) d^2/dt^2 G ] by nested central differences; requires
/// m = n.  Values <= tol everywhere support convexity of G along segments.
FourthOrderReport fourth_order_cross_check(const ModelSpec& spec, int samples,
                                           std::uint64_t seed = 0, double tol = 1e-8,
                                           const FourthOrderConfig& config = {});

// -------------------------------------------------------- local (price-only) test

struct LocalEnvelopeWitness {
  Eigen::VectorXd x;   // stationary agent
  Eigen::VectorXd yz;  // contract
  double eig_max = 0;
};

struct LocalEnvelopeReport {
  bool pass = false;
  double premise_coverage = 0;  // fraction of sampled contracts with a stationary agent in cl(X)
  double max_eig = 0;           // over all solved stationarity points
  int solved = 0, samples = 0;
  bool uniform = false;         // eig_max <= -tol wherever solved (uniformly negative definite)
  bool b_star_convex = false;   // quasilinear family: pass with full premise coverage
  std::vector<LocalEnvelopeWitness> witnesses;
  std::vector<std::string> notes;
};

/// For pi depending only on (y,z): sweeps contracts, solves the stationarity
/// system pi_ybar + G_ybar = 0 for x in cl(X) (taking J = cl(X)) and tests
/// pi_{yy} + G_{yy} <= tol at every solution.  Pass together with full
/// premise coverage is the local envelope characterization of concavity.
LocalEnvelopeReport local_envelope_check(const ModelSpec& spec, int samples, std::uint64_t seed = 0,
                                         double tol = 1e-8);

// ---------------------------------------------------- envelope transform check

struct TransformCheckReport {
  bool is_envelope_concave = false;  // double transform reproduces pi on the grid
  double max_gap = 0;
  double grid_tol = 0;
  double idempotence_gap = 0;  // applying the double transform twice vs once
};

/// Discretized double generalized-Legendre transform of pi over grids on
/// Y x Z and X x X0 (X0 a negative interval containing -1); reports
/// max |(pi^)^ - pi| over the contract grid.
TransformCheckReport envelope_transform_check(const ModelSpec& spec, int product_per_axis = 17,
                                              int price_count = 17, int agent_per_axis = 17,
                                              std::pair<double, double> X0 = {-1.5, -0.5},
                                              int x0_count = 9);

// ----------------------------------------------------------- method bundle

enum class CertifyMethod { MatrixCriterion, ClosedForm, FourthOrder, LocalEnvelope };

struct CombinedReport {
  CertificationReport matrix;
  bool ran_matrix = false;
  CertificationReport closed_form;
  bool ran_closed_form = false;
  FourthOrderReport fourth_order;
  bool ran_fourth_order = false;
  LocalEnvelopeReport local;
  bool ran_local = false;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<std::string> disagreements;
};

CombinedReport certify(const ModelSpec& spec, const std::vector<CertifyMethod>& methods,
                       const CertifyOptions& options = {});

}  // namespace gscreen
