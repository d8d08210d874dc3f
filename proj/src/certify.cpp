#include "gscreen/certify.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "gscreen/errors.hpp"
#include "gscreen/geometry.hpp"
#include "gscreen/parallel.hpp"
#include "gscreen/sampling.hpp"

namespace gscreen {

namespace {

constexpr double kRankTol = 1e-8;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

/// Moore-Penrose pseudoinverse; throws when the smallest singular value is
/// below kRankTol times the largest (the left inverse would be meaningless).
Eigen::MatrixXd pinv_checked(const Eigen::MatrixXd& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double smax = sv.size() ? sv[0] : 0.0;
  if (!(sv[sv.size() - 1] > kRankTol * std::max(smax, 1e-300)))
    throw RankDeficientError("matrix rank deficient, left inverse undefined");
  Eigen::VectorXd inv = sv.array().inverse();
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double fd_step(const Eigen::VectorXd& point) {
  double scale = std::max(1.0, point.lpNorm<Eigen::Infinity>());
  return std::max(1e-4, std::cbrt(std::numeric_limits<double>::epsilon())) * scale;
}

/// d/dx_i of the (y,z)-Hessian block of `e`, by central differences over
/// exact second-order jets.
Eigen::MatrixXd third_tensor_slice(const Expr& e, const Eigen::VectorXd& point, int i, int m, int n,
                                   double h) {
  Eigen::VectorXd p = point;
  p[i] = point[i] + h;
  Eigen::MatrixXd up = eval_jet2(e, p).hessian.block(m, m, n + 1, n + 1);
  p[i] = point[i] - h;
  Eigen::MatrixXd dn = eval_jet2(e, p).hessian.block(m, m, n + 1, n + 1);
  return (up - dn) / (2 * h);
}

struct EigRange {
  double lo, hi;
};

EigRange sym_eig_range(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev[0], ev[ev.size() - 1]};
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Linear: return "linear";
    case Verdict::Concave: return "concave";
    case Verdict::StrictlyConcaveSampled: return "strictly_concave_sampled";
    case Verdict::UniformlyConcave: return "uniformly_concave";
    case Verdict::Convex: return "convex";
    case Verdict::StrictlyConvexSampled: return "strictly_convex_sampled";
    case Verdict::UniformlyConvex: return "uniformly_convex";
    case Verdict::Indefinite: return "indefinite";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

bool is_concave_side(Verdict v) {
  return v == Verdict::Linear || v == Verdict::Concave || v == Verdict::StrictlyConcaveSampled ||
         v == Verdict::UniformlyConcave;
}

bool is_convex_side(Verdict v) {
  return v == Verdict::Linear || v == Verdict::Convex || v == Verdict::StrictlyConvexSampled ||
         v == Verdict::UniformlyConvex;
}

CriterionSample criterion_matrix(const ModelSpec& spec, const Eigen::VectorXd& point) {
  const int m = spec.m, n = spec.n;
  CriterionSample out;
  out.point = point;

  Jet2 jpi = eval_jet2(spec.pi, point);
  Eigen::VectorXd pi_ybar = jpi.gradient.segment(m, n + 1);
  Eigen::MatrixXd pi_yybar = jpi.hessian.block(m, m, n + 1, n + 1);

  Eigen::MatrixXd M = augmented_cross_matrix(spec, point);  // (m+1) x (n+1)
  Eigen::MatrixXd P = pinv_checked(M);                      // (n+1) x (m+1), P*M = I
  Eigen::VectorXd w = P.transpose() * pi_ybar;              // contraction over the ybar index

  double h = fd_step(point);
  Eigen::MatrixXd A = pi_yybar;
  for (int i = 0; i < m; ++i) {
    // x0 = -1 scales the x-slices of the augmented third-order tensor.
    Eigen::MatrixXd Ti = -third_tensor_slice(spec.G, point, i, m, n, h);
    A -= w[i] * Ti;
  }
  Eigen::MatrixXd Tm = eval_jet2(spec.G, point).hessian.block(m, m, n + 1, n + 1);
  A -= w[m] * Tm;

  out.asymmetry = (A - A.transpose()).lpNorm<Eigen::Infinity>();
  out.matrix = 0.5 * (A + A.transpose());
  EigRange r = sym_eig_range(out.matrix);
  out.eig_min = r.lo;
  out.eig_max = r.hi;
  return out;
}

namespace {

// Shrink the sampling box: x-axes need room for the third-order central
// differences, the rest only the 1e-9 boundary margin.
Box certification_box(const ModelSpec& spec) {
  Box d = spec.domain();
  double hb = 2.0 * fd_step(d.hi.cwiseAbs().cwiseMax(d.lo.cwiseAbs()));
  for (int i = 0; i < spec.m; ++i) {
    double margin = std::min(hb, (d.hi[i] - d.lo[i]) * 0.25);
    d.lo[i] += margin;
    d.hi[i] -= margin;
  }
  for (int i = spec.m; i < spec.dim(); ++i) {
    double margin = std::min(1e-9, (d.hi[i] - d.lo[i]) * 0.25);
    d.lo[i] += margin;
    d.hi[i] -= margin;
  }
  return d;
}

struct VerdictInputs {
  double eig_min, eig_max;  // extremes over samples
  double max_norm;
  double tol;
};

// Shared sign classification.  The uniform levels require the margin to
// clear the finite-difference noise floor by three orders of magnitude;
// below that only the sampled-strict claim is made.
Verdict classify(const VerdictInputs& in, double* lambda_out) {
  double tol_linear = std::min(in.tol, 1e-8);
  double tol_eff = in.tol * std::max(1.0, in.max_norm);
  *lambda_out = 0;
  if (in.max_norm < tol_linear) return Verdict::Linear;
  bool concave = in.eig_max <= tol_eff;
  bool convex = in.eig_min >= -tol_eff;
  if (concave && !convex) {
    double margin = -in.eig_max;
    if (margin > tol_eff) {
      *lambda_out = margin;
      return margin > 1e3 * tol_eff ? Verdict::UniformlyConcave : Verdict::StrictlyConcaveSampled;
    }
    return Verdict::Concave;
  }
  if (convex && !concave) {
    double margin = in.eig_min;
    if (margin > tol_eff) {
      *lambda_out = margin;
      return margin > 1e3 * tol_eff ? Verdict::UniformlyConvex : Verdict::StrictlyConvexSampled;
    }
    return Verdict::Convex;
  }
  if (concave && convex) return Verdict::Concave;  // within tolerance of zero but above the linear bar
  return Verdict::Indefinite;
}

}  // namespace

CertificationReport certify_matrix_criterion(const ModelSpec& spec, const CertifyOptions& options) {
  if (options.samples < 1) throw InputError("samples must be >= 1");
  CertificationReport rep;
  rep.samples_used = options.samples;
  rep.seed = options.seed;
  rep.tol = options.tol;

  Box d = certification_box(spec);
  HaltonSampler halton(spec.dim(), options.seed);
  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(options.samples));
  for (int s = 0; s < options.samples; ++s) pts[static_cast<std::size_t>(s)] = halton.next_in(d.lo, d.hi);

  std::vector<CriterionSample> results(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { results[i] = criterion_matrix(spec, pts[i]); });

  rep.eig_min = std::numeric_limits<double>::infinity();
  rep.eig_max = -std::numeric_limits<double>::infinity();
  for (const auto& cs : results) {
    rep.eig_min = std::min(rep.eig_min, cs.eig_min);
    rep.eig_max = std::max(rep.eig_max, cs.eig_max);
    rep.max_norm = std::max(rep.max_norm, std::max(std::abs(cs.eig_min), std::abs(cs.eig_max)));
    rep.max_asymmetry = std::max(rep.max_asymmetry, cs.asymmetry);
  }
  if (rep.max_asymmetry >= 1e-6) {
    rep.verdict = Verdict::Inconclusive;
    rep.notes.push_back("criterion matrix asymmetry " + fmt(rep.max_asymmetry) + " exceeds 1e-6");
    return rep;
  }
  rep.verdict = classify({rep.eig_min, rep.eig_max, rep.max_norm, options.tol}, &rep.lambda);
  if (rep.verdict == Verdict::Indefinite) {
    double tol_eff = options.tol * std::max(1.0, rep.max_norm);
    for (const auto& cs : results) {
      if (rep.counterexamples.size() >= 8) break;
      if (cs.eig_max > tol_eff || cs.eig_min < -tol_eff) rep.counterexamples.push_back(cs);
    }
  }
  rep.notes.push_back("eigenvalue range over samples: [" + fmt(rep.eig_min) + ", " + fmt(rep.eig_max) + "]");
  return rep;
}

// ------------------------------------------------------- closed-form criteria

namespace {

struct PartJets {
  Jet2 b, f;
  std::optional<Jet2> a;
};

const FamilyParts& require_family(const ModelSpec& spec) {
  if (!spec.family) throw FamilyMismatchError("model has no family decomposition");
  return *spec.family;
}

PartJets part_jets(const ModelSpec& spec, const Eigen::VectorXd& point) {
  const FamilyParts& parts = require_family(spec);
  PartJets j;
  j.b = eval_jet2(parts.b, point);
  j.f = eval_jet2(*parts.f, point);
  if (parts.a) j.a = eval_jet2(*parts.a, point);
  return j;
}

// b-part ingredients common to all three family forms.
struct BTensor {
  Eigen::MatrixXd cross;               // b_{i,l}: m x n
  Eigen::MatrixXd left_inverse;        // b^{i,l}: n x m
  Eigen::VectorXd b_y;                 // b_{,l}
  Eigen::MatrixXd b_yy;                // b_{,kj}
  std::vector<Eigen::MatrixXd> third;  // b_{i,kj}: m slices of n x n
};

BTensor b_tensor(const ModelSpec& spec, const Expr& b, const Jet2& jb, const Eigen::VectorXd& point) {
  const int m = spec.m, n = spec.n;
  BTensor t;
  t.cross = jb.hessian.block(0, m, m, n);
  t.left_inverse = pinv_checked(t.cross);
  t.b_y = jb.gradient.segment(m, n);
  t.b_yy = jb.hessian.block(m, m, n, n);
  double h = fd_step(point);
  t.third.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd p = point;
    p[i] = point[i] + h;
    Eigen::MatrixXd up = eval_jet2(b, p).hessian.block(m, m, n, n);
    p[i] = point[i] - h;
    Eigen::MatrixXd dn = eval_jet2(b, p).hessian.block(m, m, n, n);
    t.third.push_back((up - dn) / (2 * h));
  }
  return t;
}

// Contraction sum_i c_i b_{i,kj} for a coefficient vector over agents.
Eigen::MatrixXd contract_third(const BTensor& t, const Eigen::VectorXd& c) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(t.b_yy.rows(), t.b_yy.cols());
  for (std::size_t i = 0; i < t.third.size(); ++i) out += c[static_cast<Eigen::Index>(i)] * t.third[i];
  return out;
}

struct HomogeneousEval {
  Eigen::MatrixXd form;  // n x n
  double f_p, f_pp;      // f'(z), f''(z)
};

HomogeneousEval homogeneous_eval(const ModelSpec& spec, const Eigen::VectorXd& point) {
  const FamilyParts& parts = require_family(spec);
  if (parts.family != Family::Quasilinear && parts.family != Family::PriceSensitive)
    throw FamilyMismatchError("criterion requires the G = b(x,y) - f(z) family");
  const int m = spec.m, n = spec.n;
  PartJets j = part_jets(spec, point);
  double fp = j.f.gradient[m + n];
  double fpp = j.f.hessian(m + n, m + n);
  if (!(fp > 0)) throw FamilyMismatchError("f'(z) must be positive on the family domain");
  BTensor t = b_tensor(spec, parts.b, j.b, point);
  Eigen::VectorXd a_y = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd a_yy = Eigen::MatrixXd::Zero(n, n);
  if (j.a) {
    a_y = j.a->gradient.segment(m, n);
    a_yy = j.a->hessian.block(m, m, n, n);
  }
  // c_i = sum_l (b_{,l}/f' - a_l) b^{i,l}
  Eigen::VectorXd c = t.left_inverse.transpose() * (t.b_y / fp - a_y);
  HomogeneousEval out;
  out.form = a_yy - t.b_yy / fp + contract_third(t, c);
  out.f_p = fp;
  out.f_pp = fpp;
  return out;
}

struct ZeroCostEval {
  Eigen::MatrixXd form;
  double h_z, h_zz;
};

ZeroCostEval zero_cost_eval(const ModelSpec& spec, const Eigen::VectorXd& point) {
  const FamilyParts& parts = require_family(spec);
  if (parts.family != Family::Inhomogeneous || parts.a)
    throw FamilyMismatchError("criterion requires G = b(x,y) - f(x,z) with pi = z");
  const int m = spec.m, n = spec.n;
  PartJets j = part_jets(spec, point);
  BTensor t = b_tensor(spec, parts.b, j.b, point);
  Eigen::VectorXd c = t.left_inverse.transpose() * t.b_y;  // sum_l b_{,l} b^{i,l}
  ZeroCostEval out;
  out.form = -t.b_yy + contract_third(t, c);
  double fz = j.f.gradient[m + n];
  Eigen::VectorXd f_xz = j.f.hessian.block(0, m + n, m, 1);
  out.h_z = fz - c.dot(f_xz);
  double fzz = j.f.hessian(m + n, m + n);
  Eigen::VectorXd f_xzz(m);
  const int zi = m + n;
  for (int i = 0; i < m; ++i) {
    int mi[3] = {zi, zi, i};
    f_xzz[i] = eval_deriv_fd(*parts.f, point, mi);
  }
  out.h_zz = fzz - c.dot(f_xzz);
  return out;
}

struct InhomogeneousEval {
  Eigen::MatrixXd form;
  double h;
};

InhomogeneousEval inhomogeneous_eval(const ModelSpec& spec, const Eigen::VectorXd& point) {
  const FamilyParts& parts = require_family(spec);
  if (parts.family != Family::Inhomogeneous || !parts.a)
    throw FamilyMismatchError("criterion requires G = b(x,y) - f(x,z) with pi = z - a(y)");
  const int m = spec.m, n = spec.n;
  PartJets j = part_jets(spec, point);
  BTensor t = b_tensor(spec, parts.b, j.b, point);
  Eigen::VectorXd a_y = j.a->gradient.segment(m, n);
  Eigen::MatrixXd a_yy = j.a->hessian.block(m, m, n, n);
  Eigen::VectorXd c_b = t.left_inverse.transpose() * t.b_y;  // sum_l b_{,l} b^{i,l}
  Eigen::VectorXd c_a = t.left_inverse.transpose() * a_y;    // sum_l a_l b^{i,l}
  double fz = j.f.gradient[m + n];
  Eigen::VectorXd f_xz = j.f.hessian.block(0, m + n, m, 1);
  double s_b = c_b.dot(f_xz);  // b_{,beta} b^{alpha,beta} f_{alpha,z}
  double s_a = c_a.dot(f_xz);
  double denom = fz - s_b;
  if (std::abs(denom) < 1e-12 * std::max(1.0, std::abs(fz)))
    throw SingularDenominatorError("f_z - b_{,b} b^{a,b} f_{a,z} vanishes at the sample point");
  double fzz = j.f.hessian(m + n, m + n);
  Eigen::VectorXd f_xzz(m);
  const int zi = m + n;
  for (int i = 0; i < m; ++i) {
    int mi[3] = {zi, zi, i};
    f_xzz[i] = eval_deriv_fd(*parts.f, point, mi);
  }
  InhomogeneousEval out;
  out.form = a_yy - contract_third(t, c_a) + ((1.0 - s_a) / denom) * (-t.b_yy + contract_third(t, c_b));
  out.h = c_a.dot(f_xzz) + (s_a - 1.0) * (c_b.dot(f_xzz) - fzz) / denom;
  return out;
}

}  // namespace

double criterion_homogeneous(const ModelSpec& spec, const Eigen::VectorXd& point,
                             const Eigen::VectorXd& xi) {
  HomogeneousEval e = homogeneous_eval(spec, point);
  return xi.dot(e.form * xi);
}

InhomogeneousZeroCostValue criterion_inhomogeneous_zero_cost(const ModelSpec& spec,
                                                             const Eigen::VectorXd& point,
                                                             const Eigen::VectorXd& xi) {
  ZeroCostEval e = zero_cost_eval(spec, point);
  return {xi.dot(e.form * xi), e.h_z, e.h_zz};
}

InhomogeneousValue criterion_inhomogeneous(const ModelSpec& spec, const Eigen::VectorXd& point,
                                           const Eigen::VectorXd& xi) {
  InhomogeneousEval e = inhomogeneous_eval(spec, point);
  return {xi.dot(e.form * xi), e.h};
}

CertificationReport certify_family_criterion(const ModelSpec& spec, const CertifyOptions& options) {
  const FamilyParts& parts = require_family(spec);
  CertificationReport rep;
  rep.samples_used = options.samples;
  rep.seed = options.seed;
  rep.tol = options.tol;

  if (parts.family == Family::ZeroSumProfit) {
    rep.verdict = Verdict::Linear;
    rep.notes.push_back("pi = -G and G is affine along G-segments: the profit functional is linear");
    return rep;
  }

  Box d = certification_box(spec);
  HaltonSampler halton(spec.dim(), options.seed);
  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(options.samples));
  for (int s = 0; s < options.samples; ++s) pts[static_cast<std::size_t>(s)] = halton.next_in(d.lo, d.hi);

  double form_min = std::numeric_limits<double>::infinity();
  double form_max = -std::numeric_limits<double>::infinity();
  double aux_min = std::numeric_limits<double>::infinity();   // f'' or h_zz or h
  double aux_max = -std::numeric_limits<double>::infinity();
  double price_margin_min = std::numeric_limits<double>::infinity();  // f''/f' or h_zz/h_z or h
  double price_margin_max = -std::numeric_limits<double>::infinity();
  bool slope_ok = true;  // f' > 0 resp. h_z > 0 at all samples

  const bool is_homogeneous =
      parts.family == Family::Quasilinear || parts.family == Family::PriceSensitive;
  const bool zero_cost = parts.family == Family::Inhomogeneous && !parts.a;

  // Per sample: form eigen range, the sign-carrying price-direction value
  // (f'' resp. h_zz resp. h) and the matching entry of the criterion matrix
  // (f''/f' resp. h_zz/h_z resp. h) used for the uniform modulus.
  std::vector<std::array<double, 4>> vals(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    if (is_homogeneous) {
      HomogeneousEval e = homogeneous_eval(spec, pts[i]);
      EigRange r = sym_eig_range(e.form);
      vals[i] = {r.lo, r.hi, e.f_pp, e.f_pp / e.f_p};
    } else if (zero_cost) {
      ZeroCostEval e = zero_cost_eval(spec, pts[i]);
      EigRange r = sym_eig_range(e.form);
      if (e.h_z > 0)
        vals[i] = {r.lo, r.hi, e.h_zz, e.h_zz / e.h_z};
      else
        vals[i] = {r.lo, r.hi, std::numeric_limits<double>::quiet_NaN(), 0.0};
    } else {
      InhomogeneousEval e = inhomogeneous_eval(spec, pts[i]);
      EigRange r = sym_eig_range(e.form);
      vals[i] = {r.lo, r.hi, e.h, e.h};
    }
  });
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (std::isnan(vals[i][2])) {
      slope_ok = false;
      continue;
    }
    form_min = std::min(form_min, vals[i][0]);
    form_max = std::max(form_max, vals[i][1]);
    aux_min = std::min(aux_min, vals[i][2]);
    aux_max = std::max(aux_max, vals[i][2]);
    price_margin_min = std::min(price_margin_min, vals[i][3]);
    price_margin_max = std::max(price_margin_max, vals[i][3]);
  }

  if (!slope_ok) {
    rep.verdict = Verdict::Inconclusive;
    rep.notes.push_back(is_homogeneous ? "f'(z) <= 0 at a sample" : "h_z <= 0 at a sample");
    return rep;
  }

  const double tol = options.tol;
  double scale = std::max({1.0, std::abs(form_min), std::abs(form_max), std::abs(aux_min), std::abs(aux_max)});
  double tol_eff = tol * scale;
  bool concave = form_min >= -tol_eff && aux_min >= -tol_eff;
  bool convex = form_max <= tol_eff && aux_max <= tol_eff;
  rep.epsilon = concave ? form_min : (convex ? -form_max : 0.0);
  if (concave && convex) {
    rep.verdict = Verdict::Linear;
  } else if (concave) {
    bool uniform = form_min > tol_eff && aux_min > tol_eff;
    rep.lambda = std::max(std::min(form_min, price_margin_min), 0.0);
    rep.verdict = uniform ? Verdict::UniformlyConcave : Verdict::Concave;
  } else if (convex) {
    bool uniform = form_max < -tol_eff && aux_max < -tol_eff;
    rep.lambda = std::max(std::min(-form_max, -price_margin_max), 0.0);
    rep.verdict = uniform ? Verdict::UniformlyConvex : Verdict::Convex;
  } else {
    rep.verdict = Verdict::Indefinite;
  }
  rep.notes.push_back("closed-form quadratic form range [" + fmt(form_min) + ", " + fmt(form_max) +
                      "], price-direction range [" + fmt(aux_min) + ", " + fmt(aux_max) + "]");
  return rep;
}

// ----------------------------------------------------------- fourth order

namespace {

// Newton solve for the agent-side curve point: G_y/G_z(x, y, z) = target.
Eigen::VectorXd solve_agent_curve(const ModelSpec& spec, const Eigen::VectorXd& start,
                                  const Eigen::VectorXd& y, double z, const Eigen::VectorXd& target,
                                  double tol) {
  const int m = spec.m, n = spec.n;
  Eigen::VectorXd x = start;
  Box xbox;
  xbox.lo = spec.X.lo;
  xbox.hi = spec.X.hi;
  double span = (xbox.hi - xbox.lo).lpNorm<Eigen::Infinity>();
  for (int it = 0; it < 50; ++it) {
    Jet2 jet = eval_jet2(spec.G, spec.pack(x, y, z));
    double gz = jet.gradient[m + n];
    Eigen::VectorXd gy = jet.gradient.segment(m, n);
    Eigen::VectorXd r = gy / gz - target;
    if (r.norm() < tol) return x;
    // d/dx_i (G_y/G_z) = (G_{i,y} G_z - G_y G_{i,z}) / G_z^2, exact from the jet.
    Eigen::MatrixXd J(n, m);
    for (int i = 0; i < m; ++i)
      J.col(i) = (jet.hessian.block(i, m, 1, n).transpose() * gz - gy * jet.hessian(i, m + n)) / (gz * gz);
    Eigen::VectorXd step = J.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(r);
    Eigen::VectorXd next = x - step;
    for (int i = 0; i < m; ++i) {  // stay near cl(X); a small extrapolation is allowed
      next[i] = std::min(std::max(next[i], xbox.lo[i] - 0.1 * span), xbox.hi[i] + 0.1 * span);
    }
    if ((next - x).norm() < 1e-15 * std::max(1.0, x.norm())) {
      x = next;
      break;
    }
    x = next;
  }
  Jet2 jet = eval_jet2(spec.G, spec.pack(x, y, z));
  Eigen::VectorXd r = jet.gradient.segment(m, n) / jet.gradient[m + n] - target;
  if (r.norm() >= tol) throw NoConvergenceError("agent-side curve solve did not converge");
  return x;
}

}  // namespace

FourthOrderReport fourth_order_cross_check(const ModelSpec& spec, int samples, std::uint64_t seed,
                                           double tol, const FourthOrderConfig& config) {
  if (spec.m != spec.n) throw InputError("the fourth-order test requires m = n");
  FourthOrderReport rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  rep.max_value = -std::numeric_limits<double>::infinity();

  const int m = spec.m, n = spec.n;
  Rng rng(seed + 1);
  Box d = spec.domain();
  // Sample configurations away from the boundary so both curve solves and
  // the parameter extrapolation at s = -eta stay in the evaluable region.
  Eigen::VectorXd span = d.hi - d.lo;
  Eigen::VectorXd lo = d.lo + 0.05 * span, hi = d.hi - 0.05 * span;

  const double ds = config.s_step;
  const int steps = config.segment_steps + (config.segment_steps % 2);  // even, midpoint on grid
  const int kmid = steps / 2;

  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd x0 = rng.uniform_in(lo.head(m), hi.head(m));
    Eigen::VectorXd x1 = rng.uniform_in(lo.head(m), hi.head(m));
    Eigen::VectorXd yz0 = rng.uniform_in(lo.tail(n + 1), hi.tail(n + 1));
    Eigen::VectorXd yz1 = rng.uniform_in(lo.tail(n + 1), hi.tail(n + 1));
    ++rep.attempted;
    try {
      GSegment seg = solve_g_segment(spec, x0, yz0.head(n), yz0[n], yz1.head(n), yz1[n], steps);
      // Indices of t0 and t0 +- dt on the segment grid (dt = 1/steps).
      auto at = [&](int k) {
        Eigen::VectorXd v(n + 1);
        v << seg.samples[static_cast<std::size_t>(k)].y, seg.samples[static_cast<std::size_t>(k)].z;
        return v;
      };
      Eigen::VectorXd mid = at(kmid), up = at(kmid + 1), dn = at(kmid - 1);
      double tstep = 1.0 / steps;

      // Agent-side curve through the segment midpoint.
      auto ratio_at = [&](const Eigen::VectorXd& x) {
        auto [value, grad] = eval_grad(spec.G, spec.pack(x, mid.head(n), mid[n]));
        (void)value;
        return Eigen::VectorXd(grad.segment(m, n) / grad[m + n]);
      };
      Eigen::VectorXd r0 = ratio_at(x0), r1 = ratio_at(x1);
      auto x_at = [&](double sv) {
        if (sv == 0.0) return x0;
        Eigen::VectorXd target = (1.0 - sv) * r0 + sv * r1;
        return solve_agent_curve(spec, x0, mid.head(n), mid[n], target, config.solve_tol);
      };
      Eigen::VectorXd xp = x_at(ds), xm = x_at(-ds);

      auto psi = [&](const Eigen::VectorXd& x) {
        double gup = spec.utility(x, up.head(n), up[n]);
        double gmid = spec.utility(x, mid.head(n), mid[n]);
        double gdn = spec.utility(x, dn.head(n), dn[n]);
        auto [value, grad] = eval_grad(spec.G, spec.pack(x, mid.head(n), mid[n]));
        (void)value;
        double d2t = (gup - 2 * gmid + gdn) / (tstep * tstep);
        return d2t / grad[m + n];
      };
      double value = (psi(xp) - 2 * psi(x0) + psi(xm)) / (ds * ds);

      // Direct check: second differences of G(x1, .) along the x0-segment.
      double direct = std::numeric_limits<double>::infinity();
      std::vector<double> g(seg.samples.size());
      for (std::size_t k = 0; k < seg.samples.size(); ++k)
        g[k] = spec.utility(x1, seg.samples[k].y, seg.samples[k].z);
      for (std::size_t k = 1; k + 1 < seg.samples.size(); ++k)
        direct = std::min(direct, g[k + 1] - 2 * g[k] + g[k - 1]);

      ++rep.evaluated;
      rep.min_value = std::min(rep.min_value, value);
      rep.max_value = std::max(rep.max_value, value);
      rep.evaluations.emplace_back(value, direct);
      bool fourth_ok = value <= tol;
      bool direct_ok = direct >= -tol;
      if (fourth_ok == direct_ok) ++rep.sign_agreements;
      if (!fourth_ok) {
        FourthOrderWitness w;
        w.x0 = x0;
        w.x1 = x1;
        w.yz0 = yz0;
        w.yz1 = yz1;
        w.value = value;
        w.direct_second = direct;
        if (rep.violations.size() < 16) rep.violations.push_back(w);
      }
    } catch (const NoConvergenceError&) {
      // Counts against the premise (empirical G2/G8 failure), not the verdict.
    } catch (const LeftDomainError&) {
    } catch (const DomainError&) {
    }
  }
  if (rep.evaluated == 0) rep.notes.push_back("no configuration could be evaluated");
  return rep;
}

// ---------------------------------------------------------- local envelope

LocalEnvelopeReport local_envelope_check(const ModelSpec& spec, int samples, std::uint64_t seed,
                                         double tol) {
  for (int i = 0; i < spec.m; ++i)
    if (spec.pi.references(i))
      throw FamilyMismatchError("local envelope check requires pi independent of the agent type");
  LocalEnvelopeReport rep;
  rep.samples = samples;
  rep.pass = true;
  rep.max_eig = -std::numeric_limits<double>::infinity();

  const int m = spec.m, n = spec.n;
  Box d = spec.domain().shrunk(1e-9);
  HaltonSampler halton(n + 1, seed);
  Eigen::VectorXd x_center = 0.5 * (spec.X.lo + spec.X.hi);

  // Multistart seeds for the stationarity solve over cl(X).
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(x_center);
  starts.push_back(spec.X.lo);
  starts.push_back(spec.X.hi);
  HaltonSampler hx(m, seed + 11);
  for (int k = 0; k < 5; ++k) starts.push_back(hx.next_in(spec.X.lo, spec.X.hi));

  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd yz = halton.next_in(d.lo.tail(n + 1), d.hi.tail(n + 1));
    Eigen::VectorXd y = yz.head(n);
    double z = yz[n];
    Eigen::VectorXd pi_ybar;
    {
      Jet2 jpi = eval_jet2(spec.pi, spec.pack(x_center, y, z));
      pi_ybar = jpi.gradient.segment(m, n + 1);
    }
    auto residual = [&](const Eigen::VectorXd& x) {
      auto [value, grad] = eval_grad(spec.G, spec.pack(x, y, z));
      (void)value;
      return Eigen::VectorXd(pi_ybar + grad.segment(m, n + 1));
    };
    double scale = 1.0 + pi_ybar.norm();
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x = x_center;
    for (const auto& start : starts) {
      Eigen::VectorXd x = start;
      double r = residual(x).norm();
      for (int it = 0; it < 60; ++it) {
        Jet2 jet = eval_jet2(spec.G, spec.pack(x, y, z));
        Eigen::VectorXd rv = pi_ybar + jet.gradient.segment(m, n + 1);
        r = rv.norm();
        if (r < 1e-8 * scale) break;
        Eigen::MatrixXd J = jet.hessian.block(m, 0, n + 1, m);  // d/dx of G_ybar
        Eigen::VectorXd step = J.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rv);
        double sc = 1.0;
        bool improved = false;
        for (int bt = 0; bt < 25; ++bt) {
          Eigen::VectorXd next = spec.X.clamp(x - sc * step);
          double rn = residual(next).norm();
          if (rn < r) {
            x = next;
            r = rn;
            improved = true;
            break;
          }
          sc *= 0.5;
        }
        if (!improved) break;
      }
      if (r < best) {
        best = r;
        best_x = x;
      }
      if (best < 1e-8 * scale) break;
    }
    if (best < 1e-8 * scale) {
      ++rep.solved;
      Jet2 jet = eval_jet2(spec.G, spec.pack(best_x, y, z));
      Jet2 jpi = eval_jet2(spec.pi, spec.pack(best_x, y, z));
      Eigen::MatrixXd H =
          jpi.hessian.block(m, m, n + 1, n + 1) + jet.hessian.block(m, m, n + 1, n + 1);
      EigRange r2 = sym_eig_range(H);
      rep.max_eig = std::max(rep.max_eig, r2.hi);
      if (r2.hi > tol) {
        rep.pass = false;
        if (rep.witnesses.size() < 8) {
          LocalEnvelopeWitness w;
          w.x = best_x;
          w.yz = yz;
          w.eig_max = r2.hi;
          rep.witnesses.push_back(w);
        }
      }
    }
  }
  rep.premise_coverage = samples > 0 ? static_cast<double>(rep.solved) / samples : 0.0;
  rep.uniform = rep.pass && rep.solved > 0 && rep.max_eig <= -tol;
  rep.b_star_convex = rep.pass && rep.premise_coverage >= 1.0 && spec.family &&
                      spec.family->family == Family::Quasilinear;
  if (rep.premise_coverage < 1.0)
    rep.notes.push_back("stationarity premise held at " + fmt(rep.premise_coverage * 100) +
                        "% of sampled contracts");
  return rep;
}

// ------------------------------------------------------ envelope transform

TransformCheckReport envelope_transform_check(const ModelSpec& spec, int product_per_axis,
                                              int price_count, int agent_per_axis,
                                              std::pair<double, double> X0, int x0_count) {
  for (int i = 0; i < spec.m; ++i)
    if (spec.pi.references(i))
      throw FamilyMismatchError("transform check requires pi independent of the agent type");
  if (!(X0.first < -1.0 && -1.0 < X0.second) || X0.second >= 0)
    throw InputError("X0 must be a negative interval containing -1");
  if (product_per_axis < 2 || price_count < 2 || agent_per_axis < 2 || x0_count < 2)
    throw InputError("transform grids need >= 2 points per axis");

  const int m = spec.m, n = spec.n;
  // Contract grid over cl(Y x Z).
  std::vector<Eigen::VectorXd> yz_axes;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd ax(product_per_axis);
    for (int i = 0; i < product_per_axis; ++i)
      ax[i] = spec.Y.lo[k] + (spec.Y.hi[k] - spec.Y.lo[k]) * i / (product_per_axis - 1);
    yz_axes.push_back(ax);
  }
  {
    Eigen::VectorXd ax(price_count);
    for (int i = 0; i < price_count; ++i)
      ax[i] = spec.z_lo + (spec.z_hi - spec.z_lo) * i / (price_count - 1);
    yz_axes.push_back(ax);
  }
  long ny = 1;
  for (const auto& ax : yz_axes) ny *= ax.size();
  Eigen::MatrixXd ybar(ny, n + 1);
  {
    std::vector<Eigen::Index> idx(yz_axes.size(), 0);
    for (long r = 0; r < ny; ++r) {
      for (std::size_t k = 0; k < yz_axes.size(); ++k) ybar(r, static_cast<Eigen::Index>(k)) = yz_axes[k][idx[k]];
      for (int k = static_cast<int>(yz_axes.size()) - 1; k >= 0; --k) {
        if (++idx[static_cast<std::size_t>(k)] < yz_axes[static_cast<std::size_t>(k)].size()) break;
        idx[static_cast<std::size_t>(k)] = 0;
      }
    }
  }
  // Agent grid over cl(X) x X0 grid; -1 is forced into the x0 axis.
  std::vector<Eigen::VectorXd> x_axes;
  for (int k = 0; k < m; ++k) {
    Eigen::VectorXd ax(agent_per_axis);
    for (int i = 0; i < agent_per_axis; ++i)
      ax[i] = spec.X.lo[k] + (spec.X.hi[k] - spec.X.lo[k]) * i / (agent_per_axis - 1);
    x_axes.push_back(ax);
  }
  {
    Eigen::VectorXd ax(x0_count);
    bool has_minus_one = false;
    for (int i = 0; i < x0_count; ++i) {
      ax[i] = X0.first + (X0.second - X0.first) * i / (x0_count - 1);
      if (std::abs(ax[i] + 1.0) < 1e-15) has_minus_one = true;
    }
    if (!has_minus_one) {
      ax.conservativeResize(x0_count + 1);
      ax[x0_count] = -1.0;
    }
    x_axes.push_back(ax);
  }
  long nx = 1;
  for (const auto& ax : x_axes) nx *= ax.size();
  Eigen::MatrixXd xbar(nx, m + 1);
  {
    std::vector<Eigen::Index> idx(x_axes.size(), 0);
    for (long r = 0; r < nx; ++r) {
      for (std::size_t k = 0; k < x_axes.size(); ++k) xbar(r, static_cast<Eigen::Index>(k)) = x_axes[k][idx[k]];
      for (int k = static_cast<int>(x_axes.size()) - 1; k >= 0; --k) {
        if (++idx[static_cast<std::size_t>(k)] < x_axes[static_cast<std::size_t>(k)].size()) break;
        idx[static_cast<std::size_t>(k)] = 0;
      }
    }
  }

  // Gbar(xbar, ybar) = x0 * G(x, y, z) tabulated once.
  Eigen::MatrixXd Gbar(nx, ny);
  Eigen::VectorXd x_center = 0.5 * (spec.X.lo + spec.X.hi);
  for (long a = 0; a < nx; ++a) {
    Eigen::VectorXd x = xbar.row(a).head(m).transpose();
    double x0 = xbar(a, m);
    for (long b = 0; b < ny; ++b)
      Gbar(a, b) = x0 * spec.utility(x, ybar.row(b).head(n).transpose(), ybar(b, n));
  }
  Eigen::VectorXd psi(ny);
  for (long b = 0; b < ny; ++b)
    psi[b] = spec.profit(x_center, ybar.row(b).head(n).transpose(), ybar(b, n));

  auto transform_x = [&](const Eigen::VectorXd& on_y) {
    Eigen::VectorXd out(nx);
    for (long a = 0; a < nx; ++a) out[a] = (Gbar.row(a).transpose() - on_y).minCoeff();
    return out;
  };
  auto transform_y = [&](const Eigen::VectorXd& on_x) {
    Eigen::VectorXd out(ny);
    for (long b = 0; b < ny; ++b) out[b] = (Gbar.col(b) - on_x).minCoeff();
    return out;
  };

  Eigen::VectorXd once = transform_y(transform_x(psi));
  Eigen::VectorXd twice = transform_y(transform_x(once));

  TransformCheckReport rep;
  rep.max_gap = (once - psi).cwiseAbs().maxCoeff();
  rep.idempotence_gap = (twice - once).cwiseAbs().maxCoeff();
  double hmax = 0;
  for (const auto& ax : yz_axes)
    for (Eigen::Index i = 1; i < ax.size(); ++i) hmax = std::max(hmax, ax[i] - ax[i - 1]);
  for (const auto& ax : x_axes)
    for (Eigen::Index i = 1; i < ax.size(); ++i) hmax = std::max(hmax, std::abs(ax[i] - ax[i - 1]));
  rep.grid_tol = 5.0 * hmax * hmax;
  rep.is_envelope_concave = rep.max_gap < rep.grid_tol;
  return rep;
}

// ------------------------------------------------------------ method bundle

CombinedReport certify(const ModelSpec& spec, const std::vector<CertifyMethod>& methods,
                       const CertifyOptions& options) {
  CombinedReport rep;
  for (CertifyMethod method : methods) {
    switch (method) {
      case CertifyMethod::MatrixCriterion:
        rep.matrix = certify_matrix_criterion(spec, options);
        rep.ran_matrix = true;
        break;
      case CertifyMethod::ClosedForm:
        if (spec.family) {
          rep.closed_form = certify_family_criterion(spec, options);
          rep.ran_closed_form = true;
        } else {
          rep.disagreements.push_back("closed-form method skipped: model has no family decomposition");
        }
        break;
      case CertifyMethod::FourthOrder:
        if (spec.m == spec.n) {
          rep.fourth_order = fourth_order_cross_check(spec, std::min(options.samples, 256),
                                                      options.seed, options.tol);
          rep.ran_fourth_order = true;
        } else {
          rep.disagreements.push_back("fourth-order method skipped: requires m = n");
        }
        break;
      case CertifyMethod::LocalEnvelope: {
        bool pi_x_free = true;
        for (int i = 0; i < spec.m; ++i)
          if (spec.pi.references(i)) pi_x_free = false;
        if (pi_x_free) {
          rep.local = local_envelope_check(spec, std::min(options.samples, 512), options.seed,
                                           options.tol);
          rep.ran_local = true;
        } else {
          rep.disagreements.push_back("local envelope method skipped: pi depends on the agent type");
        }
        break;
      }
    }
  }

  if (rep.ran_matrix) {
    rep.verdict = rep.matrix.verdict;
  } else if (rep.ran_closed_form) {
    rep.verdict = rep.closed_form.verdict;
  } else if (rep.ran_local) {
    rep.verdict = (rep.local.pass && rep.local.premise_coverage >= 1.0)
                      ? Verdict::Concave
                      : Verdict::Inconclusive;
  }

  if (rep.ran_matrix && rep.ran_closed_form) {
    bool sides_agree = (is_concave_side(rep.matrix.verdict) && is_concave_side(rep.closed_form.verdict)) ||
                       (is_convex_side(rep.matrix.verdict) && is_convex_side(rep.closed_form.verdict)) ||
                       (rep.matrix.verdict == Verdict::Indefinite &&
                        rep.closed_form.verdict == Verdict::Indefinite);
    if (!sides_agree)
      rep.disagreements.push_back("matrix criterion says " + to_string(rep.matrix.verdict) +
                                  " but the closed-form criterion says " +
                                  to_string(rep.closed_form.verdict));
  }
  if (rep.ran_matrix && rep.ran_local && rep.local.premise_coverage >= 1.0) {
    bool local_concave = rep.local.pass;
    if (local_concave && !is_concave_side(rep.matrix.verdict))
      rep.disagreements.push_back("local envelope certifies concavity but the matrix criterion says " +
                                  to_string(rep.matrix.verdict));
    if (!local_concave && is_concave_side(rep.matrix.verdict) && rep.matrix.verdict != Verdict::Linear)
      rep.disagreements.push_back("local envelope refutes concavity but the matrix criterion says " +
                                  to_string(rep.matrix.verdict));
  }
  if (rep.ran_fourth_order && !rep.fourth_order.violations.empty()) {
    rep.disagreements.push_back(
        "segment-convexity violations found by the fourth-order test: the G-convex class may not be convex");
  }
  if (!rep.ran_matrix && !rep.ran_closed_form && !rep.ran_local) rep.verdict = Verdict::Inconclusive;
  return rep;
}

}  // namespace gscreen
