#include "gscreen/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gscreen/errors.hpp"
#include "gscreen/sampling.hpp"

namespace gscreen {

namespace {

Eigen::VectorXd linspace(double lo, double hi, int count) {
  Eigen::VectorXd v(count);
  if (count == 1) {
    v[0] = 0.5 * (lo + hi);
    return v;
  }
  for (int i = 0; i < count; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  return v;
}

}  // namespace

AgentGrid make_agent_grid(const ModelSpec& spec, const std::vector<int>& per_axis) {
  if (static_cast<int>(per_axis.size()) != spec.m)
    throw InputError("per-axis grid size list must have m entries");
  std::vector<Eigen::VectorXd> axes;
  for (int k = 0; k < spec.m; ++k) {
    if (per_axis[static_cast<std::size_t>(k)] < 1) throw InputError("grid needs >= 1 point per axis");
    axes.push_back(linspace(spec.X.lo[k], spec.X.hi[k], per_axis[static_cast<std::size_t>(k)]));
  }
  return make_agent_grid(spec, axes);
}

AgentGrid make_agent_grid(const ModelSpec& spec, const std::vector<Eigen::VectorXd>& axes) {
  if (static_cast<int>(axes.size()) != spec.m) throw InputError("axes list must have m entries");
  AgentGrid g;
  g.axes = axes;
  long total = 1;
  for (const auto& ax : axes) {
    if (ax.size() < 1) throw InputError("grid axis is empty");
    total *= ax.size();
  }
  g.points.resize(total, spec.m);
  std::vector<Eigen::Index> idx(axes.size(), 0);
  for (long r = 0; r < total; ++r) {
    for (int k = 0; k < spec.m; ++k) g.points(r, k) = axes[static_cast<std::size_t>(k)][idx[static_cast<std::size_t>(k)]];
    for (int k = spec.m - 1; k >= 0; --k) {  // axis 0 slowest
      if (++idx[static_cast<std::size_t>(k)] < axes[static_cast<std::size_t>(k)].size()) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  g.weights.resize(total);
  if (spec.measure.kind == MeasureKind::Uniform) {
    g.weights.setConstant(1.0 / static_cast<double>(total));
  } else {
    for (long r = 0; r < total; ++r) {
      double w = eval_value(*spec.measure.density, g.points.row(r).transpose());
      if (w < 0) throw InputError("measure density is negative at a grid node");
      g.weights[r] = w;
    }
    double sum = g.weights.sum();
    if (!(sum > 0)) throw InputError("measure density is not normalizable on the grid");
    g.weights /= sum;
  }
  return g;
}

Eigen::MatrixXd uniform_product_grid(const ModelSpec& spec, int per_axis) {
  if (per_axis < 1) throw InputError("product grid needs >= 1 point per axis");
  std::vector<Eigen::VectorXd> axes;
  for (int k = 0; k < spec.n; ++k) axes.push_back(linspace(spec.Y.lo[k], spec.Y.hi[k], per_axis));
  long total = 1;
  for (const auto& ax : axes) total *= ax.size();
  Eigen::MatrixXd pts(total, spec.n);
  std::vector<Eigen::Index> idx(axes.size(), 0);
  for (long r = 0; r < total; ++r) {
    for (int k = 0; k < spec.n; ++k) pts(r, k) = axes[static_cast<std::size_t>(k)][idx[static_cast<std::size_t>(k)]];
    for (int k = spec.n - 1; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] < axes[static_cast<std::size_t>(k)].size()) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  // Outside option first, deduplicated.
  bool present = false;
  for (long r = 0; r < total; ++r)
    if ((pts.row(r).transpose() - spec.y_outside).norm() < 1e-12) present = true;
  if (present) return pts;
  Eigen::MatrixXd out(total + 1, spec.n);
  out.row(0) = spec.y_outside.transpose();
  out.bottomRows(total) = pts;
  return out;
}

// ---------------------------------------------------------------- segments

double GSegment::max_residual() const {
  double r = 0;
  for (const auto& s : samples) r = std::max(r, s.residual);
  return r;
}

namespace {

// Image (G_x, G)(x0, y, z) and its Jacobian in (y, z).
struct TwistEval {
  Eigen::VectorXd image;    // m+1
  Eigen::MatrixXd jacobian; // (m+1) x (n+1)
};

TwistEval twist_eval(const ModelSpec& spec, const Eigen::VectorXd& x0, const Eigen::VectorXd& y,
                     double z) {
  TwistEval out;
  Eigen::VectorXd p = spec.pack(x0, y, z);
  Jet2 jet = eval_jet2(spec.G, p);
  const int m = spec.m, n = spec.n;
  out.image.resize(m + 1);
  out.image.head(m) = jet.gradient.head(m);
  out.image[m] = jet.value;
  out.jacobian.resize(m + 1, n + 1);
  out.jacobian.topLeftCorner(m, n) = jet.hessian.block(0, m, m, n);
  out.jacobian.topRightCorner(m, 1) = jet.hessian.block(0, m + n, m, 1);
  out.jacobian.bottomLeftCorner(1, n) = jet.gradient.segment(m, n).transpose();
  out.jacobian(m, n) = jet.gradient[m + n];
  return out;
}

}  // namespace

GSegment solve_g_segment(const ModelSpec& spec, const Eigen::VectorXd& x0,
                         const Eigen::VectorXd& y_from, double z_from,
                         const Eigen::VectorXd& y_to, double z_to, int steps,
                         const GSegmentOptions& options) {
  if (steps < 2) throw InputError("solve_g_segment needs steps >= 2");
  const int n = spec.n;
  Box yz;
  yz.lo.resize(n + 1);
  yz.hi.resize(n + 1);
  yz.lo.head(n) = spec.Y.lo;
  yz.hi.head(n) = spec.Y.hi;
  yz.lo[n] = spec.z_lo;
  yz.hi[n] = spec.z_hi;
  Eigen::VectorXd from(n + 1), to(n + 1);
  from << y_from, z_from;
  to << y_to, z_to;
  if (!yz.contains(from, options.domain_margin) || !yz.contains(to, options.domain_margin))
    throw InputError("segment endpoints must lie in cl(Y x Z)");

  GSegment seg;
  seg.x0 = x0;
  seg.y_from = y_from;
  seg.y_to = y_to;
  seg.z_from = z_from;
  seg.z_to = z_to;
  seg.samples.resize(static_cast<std::size_t>(steps) + 1);

  Eigen::VectorXd img0 = twist_eval(spec, x0, y_from, z_from).image;
  Eigen::VectorXd img1 = twist_eval(spec, x0, y_to, z_to).image;

  auto store = [&](int k, double t, const Eigen::VectorXd& yz_pt, double resid) {
    GSegmentSample& s = seg.samples[static_cast<std::size_t>(k)];
    s.t = t;
    s.y = yz_pt.head(n);
    s.z = yz_pt[n];
    s.residual = resid;
  };

  store(0, 0.0, from, 0.0);
  store(steps, 1.0, to, 0.0);

  Eigen::VectorXd current = from;  // continuation start
  for (int k = 1; k < steps; ++k) {
    double t = static_cast<double>(k) / steps;
    Eigen::VectorXd target = (1.0 - t) * img0 + t * img1;
    Eigen::VectorXd iterate = current;
    double resid = std::numeric_limits<double>::infinity();
    bool done = false;
    for (int it = 0; it < options.max_iterations; ++it) {
      TwistEval te;
      try {
        te = twist_eval(spec, x0, iterate.head(n), iterate[n]);
      } catch (const Error&) {
        throw LeftDomainError("segment iterate left the evaluable domain at t = " + std::to_string(t));
      }
      Eigen::VectorXd r = te.image - target;
      resid = r.norm();
      if (resid < options.tolerance) {
        done = true;
        break;
      }
      Eigen::VectorXd step = te.jacobian.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(r);
      double scale = 1.0;
      bool improved = false;
      for (int bt = 0; bt < 30; ++bt) {
        Eigen::VectorXd next = iterate - scale * step;
        // Keep iterates near the box; a small overshoot is tolerated and
        // clipped, escaping further is a domain exit.
        Eigen::VectorXd clipped = yz.clamp(next);
        if ((next - clipped).lpNorm<Eigen::Infinity>() > 0.05 * (yz.hi - yz.lo).lpNorm<Eigen::Infinity>()) {
          scale *= options.damping;
          continue;
        }
        double next_resid;
        try {
          next_resid = (twist_eval(spec, x0, clipped.head(n), clipped[n]).image - target).norm();
        } catch (const Error&) {
          scale *= options.damping;
          continue;
        }
        if (next_resid < resid) {
          iterate = clipped;
          improved = true;
          break;
        }
        scale *= options.damping;
      }
      if (!improved) break;
    }
    if (!done) {
      char buf[200];
      std::snprintf(buf, sizeof(buf),
                    "G-segment interpolation unsolved at t = %.6f (residual %.3e; empirical evidence "
                    "against range convexity)",
                    t, resid);
      throw NoConvergenceError(buf);
    }
    if (!yz.contains(iterate, options.domain_margin + 1e-12))
      throw LeftDomainError("segment point left cl(Y x Z) at t = " + std::to_string(t));
    store(k, t, iterate, resid);
    current = iterate;
  }
  return seg;
}

SegmentConvexityReport check_G3_along_segment(const ModelSpec& spec, const GSegment& seg,
                                              int probes, std::uint64_t seed) {
  if (seg.samples.size() < 3) throw InputError("segment has too few samples for second differences");
  SegmentConvexityReport rep;
  rep.convex = true;
  rep.strictly = true;
  rep.min_second_difference = std::numeric_limits<double>::infinity();
  const double tol = 1e-8;
  HaltonSampler hx(spec.m, seed);
  Box xbox;
  xbox.lo = spec.X.lo;
  xbox.hi = spec.X.hi;
  Box shr = xbox.shrunk(1e-9);
  for (int p = 0; p < probes; ++p) {
    Eigen::VectorXd x = hx.next_in(shr.lo, shr.hi);
    bool is_base = (x - seg.x0).norm() < 1e-12;
    std::vector<double> g(seg.samples.size());
    for (std::size_t k = 0; k < seg.samples.size(); ++k)
      g[k] = spec.utility(x, seg.samples[k].y, seg.samples[k].z);
    for (std::size_t k = 1; k + 1 < seg.samples.size(); ++k) {
      double d2 = g[k + 1] - 2 * g[k] + g[k - 1];
      if (d2 < rep.min_second_difference) {
        rep.min_second_difference = d2;
        rep.witness_x = x;
        rep.witness_t = seg.samples[k].t;
      }
      if (d2 < -tol) rep.convex = false;
      if (!is_base && d2 <= tol) rep.strictly = false;
    }
  }
  return rep;
}

// ------------------------------------------------------------------- menus

Menu make_menu(const ModelSpec& spec, const Eigen::MatrixXd& products, const Eigen::VectorXd& prices) {
  if (products.rows() != prices.size()) throw InputError("menu products/prices length mismatch");
  if (products.cols() != spec.n) throw InputError("menu product dimension mismatch");
  Menu menu;
  int outside = -1;
  for (int i = 0; i < products.rows(); ++i) {
    if ((products.row(i).transpose() - spec.y_outside).norm() < 1e-12) {
      outside = i;
      break;
    }
  }
  if (outside < 0) {
    menu.products.resize(products.rows() + 1, spec.n);
    menu.prices.resize(prices.size() + 1);
    menu.products.row(0) = spec.y_outside.transpose();
    menu.prices[0] = spec.z_outside;
    menu.products.bottomRows(products.rows()) = products;
    menu.prices.tail(prices.size()) = prices;
    menu.outside_index = 0;
  } else {
    menu.products = products;
    menu.prices = prices;
    menu.outside_index = outside;
    if (menu.prices[outside] > spec.z_outside) menu.prices[outside] = spec.z_outside;
  }
  for (int i = 0; i < menu.prices.size(); ++i) {
    if (menu.prices[i] < spec.z_lo) menu.prices[i] = spec.z_lo;
    if (menu.prices[i] > spec.z_hi) menu.prices[i] = spec.z_hi;
  }
  return menu;
}

IndirectUtility utility_from_menu(const ModelSpec& spec, const Menu& menu, const AgentGrid& agents) {
  if (menu.size() == 0) throw InputError("menu is empty");
  IndirectUtility u;
  u.grid = agents;
  u.values.resize(agents.size());
  u.has_assignment = true;
  u.assign_y.resize(agents.size(), spec.n);
  u.assign_z.resize(agents.size());
  for (int i = 0; i < agents.size(); ++i) {
    Eigen::VectorXd x = agents.agent(i);
    int best = -1;
    double best_u = -std::numeric_limits<double>::infinity();
    double best_pi = 0;
    const double tie = 1e-12;
    for (int j = 0; j < menu.size(); ++j) {
      Eigen::VectorXd y = menu.products.row(j).transpose();
      double uj = spec.utility(x, y, menu.prices[j]);
      double rel = tie * (1.0 + std::abs(best_u));
      if (best >= 0 && std::abs(uj - best_u) <= rel) {
        // Tie: prefer the option with larger principal profit, then the
        // lexicographically smaller product vector.
        double pij = spec.profit(x, y, menu.prices[j]);
        bool take = pij > best_pi + tie;
        if (!take && std::abs(pij - best_pi) <= tie) {
          for (int c = 0; c < spec.n; ++c) {
            double d = menu.products(j, c) - menu.products(best, c);
            if (d < 0) { take = true; break; }
            if (d > 0) break;
          }
        }
        if (take) {
          best = j;
          best_u = uj;
          best_pi = pij;
        }
      } else if (uj > best_u) {
        best = j;
        best_u = uj;
        best_pi = spec.profit(x, y, menu.prices[j]);
      }
    }
    u.values[i] = best_u;
    u.assign_y.row(i) = menu.products.row(best);
    u.assign_z[i] = menu.prices[best];
  }
  return u;
}

Menu menu_from_utility(const ModelSpec& spec, const IndirectUtility& u,
                       const Eigen::MatrixXd& product_grid) {
  if (u.values.size() != u.grid.size()) throw InputError("utility values missing");
  Eigen::MatrixXd products = product_grid;
  Eigen::VectorXd prices(product_grid.rows());
  for (int p = 0; p < product_grid.rows(); ++p) {
    Eigen::VectorXd y = product_grid.row(p).transpose();
    double v = spec.z_lo;
    for (int i = 0; i < u.grid.size(); ++i) {
      Eigen::VectorXd x = u.grid.agent(i);
      double target = u.values[i];
      double h;
      double top = spec.utility(x, y, spec.z_lo);
      double bottom = spec.utility(x, y, spec.z_hi);
      if (target >= top) {
        h = spec.z_lo;  // u unattainably high here: no constraint from this agent
      } else if (target <= bottom) {
        h = spec.z_hi;  // even the price cap leaves the agent above u: cap (recorded by caller)
      } else {
        h = invert_price(spec, x, y, target);
      }
      v = std::max(v, h);
    }
    prices[p] = std::min(v, spec.z_hi);
  }
  Menu menu = make_menu(spec, products, prices);
  return menu;
}

IcReport check_incentive_compatible(const ModelSpec& spec, const IndirectUtility& alloc, double tol) {
  if (!alloc.has_assignment) throw InputError("allocation has no assignment");
  IcReport rep;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  const int N = alloc.grid.size();
  std::vector<double> own(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i)
    own[static_cast<std::size_t>(i)] =
        spec.utility(alloc.grid.agent(i), alloc.assign_y.row(i).transpose(), alloc.assign_z[i]);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd x = alloc.grid.agent(i);
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      double other = spec.utility(x, alloc.assign_y.row(j).transpose(), alloc.assign_z[j]);
      double slack = own[static_cast<std::size_t>(i)] - other;
      if (slack < rep.worst_slack) {
        rep.worst_slack = slack;
        rep.worst_i = i;
        rep.worst_j = j;
      }
    }
  }
  if (N <= 1) rep.worst_slack = 0;
  rep.ok = rep.worst_slack >= -tol;
  return rep;
}

double participation_slack(const ModelSpec& spec, const IndirectUtility& alloc) {
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < alloc.grid.size(); ++i) {
    Eigen::VectorXd x = alloc.grid.agent(i);
    worst = std::min(worst, alloc.values[i] - spec.outside_utility(x));
  }
  return alloc.grid.size() ? worst : 0.0;
}

double profit_functional(const ModelSpec& spec, const IndirectUtility& alloc) {
  if (!alloc.has_assignment) throw InputError("allocation has no assignment");
  double total = 0;
  double mass = alloc.grid.weights.sum();
  for (int i = 0; i < alloc.grid.size(); ++i)
    total += alloc.grid.weights[i] *
             spec.profit(alloc.grid.agent(i), alloc.assign_y.row(i).transpose(), alloc.assign_z[i]);
  return total / mass;
}

double discrete_sobolev_distance(const IndirectUtility& u1, const IndirectUtility& u2) {
  if (u1.grid.size() != u2.grid.size()) throw InputError("utilities live on different grids");
  const auto& axes = u1.grid.axes;
  if (axes.empty()) throw InputError("utility grid lacks tensor structure");
  std::vector<long> stride(axes.size());
  long total = 1;
  for (int k = static_cast<int>(axes.size()) - 1; k >= 0; --k) {
    stride[static_cast<std::size_t>(k)] = total;
    total *= axes[static_cast<std::size_t>(k)].size();
  }
  if (total != u1.grid.size()) throw InputError("grid axes inconsistent with point count");
  for (const auto& ax : axes)
    if (ax.size() < 2) throw GridTooSmallError("Sobolev distance needs >= 2 points per axis");

  Eigen::VectorXd diff = u1.values - u2.values;
  double sum = 0;
  for (long r = 0; r < total; ++r) {
    double val = diff[r];
    double grad2 = 0;
    for (std::size_t k = 0; k < axes.size(); ++k) {
      long sz = axes[k].size();
      long ik = (r / stride[k]) % sz;
      long up = r, dn = r;
      double h;
      if (ik + 1 < sz) {  // forward difference
        up = r + stride[k];
        h = axes[k][ik + 1] - axes[k][ik];
      } else {  // backward at the upper boundary
        dn = r - stride[k];
        h = axes[k][ik] - axes[k][ik - 1];
      }
      double d = (diff[up] - diff[dn]) / h;
      grad2 += d * d;
    }
    sum += u1.grid.weights[r] * (val * val + grad2);
  }
  return std::sqrt(sum);
}

}  // namespace gscreen
