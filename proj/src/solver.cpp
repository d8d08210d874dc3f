#include "gscreen/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gscreen/errors.hpp"
#include "gscreen/parallel.hpp"
#include "gscreen/sampling.hpp"

namespace gscreen {

namespace {

struct Workspace {
  const ModelSpec* spec;
  const AgentGrid* agents;
  Eigen::VectorXd outside;  // u_outside per agent
  Box yz;                   // contract box
  int N, n;

  Eigen::VectorXd contract(const Eigen::VectorXd& v, int i) const {
    return v.segment(i * (n + 1), n + 1);
  }
};

double penalized_objective(const Workspace& ws, const Eigen::VectorXd& v, double rho,
                           Eigen::VectorXd* grad) {
  const ModelSpec& spec = *ws.spec;
  const AgentGrid& agents = *ws.agents;
  const int N = ws.N, n = ws.n;

  // G(x_i, contract_j) for all pairs, with gradients in the contract.
  Eigen::MatrixXd gval(N, N);
  std::vector<Eigen::MatrixXd> ggrad;  // per agent row i: (n+1) x N
  if (grad) ggrad.assign(static_cast<std::size_t>(N), Eigen::MatrixXd(n + 1, N));
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd x = agents.agent(i);
    for (int j = 0; j < N; ++j) {
      Eigen::VectorXd c = ws.contract(v, j);
      Eigen::VectorXd p = spec.pack(x, c.head(n), c[n]);
      if (grad) {
        auto [val, g] = eval_grad(spec.G, p);
        gval(i, j) = val;
        ggrad[static_cast<std::size_t>(i)].col(j) = g.segment(spec.m, n + 1);
      } else {
        gval(i, j) = eval_value(spec.G, p);
      }
    }
  }

  double objective = 0;
  if (grad) grad->setZero(v.size());
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd x = agents.agent(i);
    Eigen::VectorXd c = ws.contract(v, i);
    Eigen::VectorXd p = spec.pack(x, c.head(n), c[n]);
    double w = agents.weights[i];
    if (grad) {
      auto [val, g] = eval_grad(spec.pi, p);
      objective -= w * val;
      grad->segment(i * (n + 1), n + 1) -= w * g.segment(spec.m, n + 1);
    } else {
      objective -= w * eval_value(spec.pi, p);
    }
  }
  // Incentive pairs: G(x_i, c_i) >= G(x_i, c_j).
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      double slack = gval(i, i) - gval(i, j);
      if (slack >= 0) continue;
      objective += 0.5 * rho * slack * slack;
      if (grad) {
        grad->segment(i * (n + 1), n + 1) += rho * slack * ggrad[static_cast<std::size_t>(i)].col(i);
        grad->segment(j * (n + 1), n + 1) -= rho * slack * ggrad[static_cast<std::size_t>(i)].col(j);
      }
    }
  }
  // Participation: G(x_i, c_i) >= u_outside(x_i).
  for (int i = 0; i < N; ++i) {
    double slack = gval(i, i) - ws.outside[i];
    if (slack >= 0) continue;
    objective += 0.5 * rho * slack * slack;
    if (grad) grad->segment(i * (n + 1), n + 1) += rho * slack * ggrad[static_cast<std::size_t>(i)].col(i);
  }
  return objective;
}

Eigen::VectorXd project(const Workspace& ws, const Eigen::VectorXd& v) {
  Eigen::VectorXd out = v;
  for (int i = 0; i < ws.N; ++i) {
    out.segment(i * (ws.n + 1), ws.n + 1) =
        ws.yz.clamp(out.segment(i * (ws.n + 1), ws.n + 1));
  }
  return out;
}

struct Feasible {
  Eigen::MatrixXd y;
  Eigen::VectorXd z;
  Eigen::VectorXd u;
  double profit;
};

// Reads the iterate as a menu and replaces it by the induced best responses;
// the result is exactly incentive compatible and individually rational.
// Prices are first trimmed to the participation boundary of the intended
// buyer, otherwise a penalty-stage overshoot of order 1/rho would make the
// buyer walk to the outside option and erase the contract entirely.
Feasible repair_to_menu(const Workspace& ws, const Eigen::VectorXd& v) {
  const ModelSpec& spec = *ws.spec;
  const int N = ws.N, n = ws.n;
  Eigen::MatrixXd products(N, n);
  Eigen::VectorXd prices(N);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd c = ws.contract(v, i);
    Eigen::VectorXd x = ws.agents->agent(i);
    Eigen::VectorXd y = c.head(n);
    double z = c[n];
    if (spec.utility(x, y, z) < ws.outside[i]) {
      double top = spec.utility(x, y, spec.z_lo);
      if (ws.outside[i] <= top) z = invert_price(spec, x, y, ws.outside[i]);
    }
    products.row(i) = y.transpose();
    prices[i] = z;
  }
  Menu menu = make_menu(spec, products, prices);
  IndirectUtility alloc = utility_from_menu(spec, menu, *ws.agents);
  Feasible f;
  f.y = alloc.assign_y;
  f.z = alloc.assign_z;
  f.u = alloc.values;
  f.profit = profit_functional(spec, alloc);
  return f;
}

Eigen::VectorXd flatten(const Feasible& f, int n) {
  const int N = static_cast<int>(f.z.size());
  Eigen::VectorXd v(N * (n + 1));
  for (int i = 0; i < N; ++i) {
    v.segment(i * (n + 1), n).transpose() = f.y.row(i);
    v[i * (n + 1) + n] = f.z[i];
  }
  return v;
}

double worst_violation(const Workspace& ws, const Eigen::VectorXd& v) {
  const ModelSpec& spec = *ws.spec;
  const int N = ws.N, n = ws.n;
  Eigen::MatrixXd gval(N, N);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd x = ws.agents->agent(i);
    for (int j = 0; j < N; ++j) {
      Eigen::VectorXd c = ws.contract(v, j);
      gval(i, j) = spec.utility(x, c.head(n), c[n]);
    }
  }
  double worst = 0;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j)
      if (i != j) worst = std::max(worst, gval(i, j) - gval(i, i));
    worst = std::max(worst, ws.outside[i] - gval(i, i));
  }
  return worst;
}

// Pattern search on the exact feasible objective: the search variables are
// the distinct contracts of the current allocation, so bunched agents move
// together; best responses are recomputed after every trial move.  This
// handles the assignment kinks the penalty surrogate smooths over and pins
// the optimum tightly.
Feasible polish(const Workspace& ws, const Eigen::VectorXd& v, int max_sweeps) {
  const ModelSpec& spec = *ws.spec;
  const int n = ws.n;
  Feasible best = repair_to_menu(ws, v);

  auto distinct_contracts = [&](const Feasible& f) {
    std::vector<Eigen::VectorXd> menu;
    for (int i = 0; i < ws.N; ++i) {
      Eigen::VectorXd c(n + 1);
      c << f.y.row(i).transpose(), f.z[i];
      bool seen = false;
      for (const auto& m : menu)
        if ((m - c).lpNorm<Eigen::Infinity>() < 1e-12) {
          seen = true;
          break;
        }
      if (!seen) menu.push_back(c);
    }
    return menu;
  };
  auto eval_menu = [&](const std::vector<Eigen::VectorXd>& menu) {
    Eigen::MatrixXd products(static_cast<Eigen::Index>(menu.size()), n);
    Eigen::VectorXd prices(static_cast<Eigen::Index>(menu.size()));
    for (std::size_t p = 0; p < menu.size(); ++p) {
      products.row(static_cast<Eigen::Index>(p)) = menu[p].head(n).transpose();
      prices[static_cast<Eigen::Index>(p)] = menu[p][n];
    }
    IndirectUtility alloc = utility_from_menu(spec, make_menu(spec, products, prices), *ws.agents);
    Feasible f;
    f.y = alloc.assign_y;
    f.z = alloc.assign_z;
    f.u = alloc.values;
    f.profit = profit_functional(spec, alloc);
    return f;
  };

  Eigen::VectorXd span = ws.yz.hi - ws.yz.lo;
  int sweeps_left = max_sweeps;
  for (int restart = 0; restart < 3 && sweeps_left > 0; ++restart) {
    std::vector<Eigen::VectorXd> menu = distinct_contracts(best);
    double delta = restart == 0 ? 0.1 : 0.01;
    bool any_improvement = false;
    while (sweeps_left-- > 0 && delta > 1e-11) {
      bool improved = false;
      for (std::size_t p = 0; p < menu.size(); ++p) {
        for (int k = 0; k <= n; ++k) {
          double step = delta * span[k];
          if (step <= 0) continue;
          for (double sign : {1.0, -1.0}) {
            Eigen::VectorXd c = menu[p];
            c[k] = std::min(std::max(c[k] + sign * step, ws.yz.lo[k]), ws.yz.hi[k]);
            if (c[k] == menu[p][k]) continue;
            std::vector<Eigen::VectorXd> trial = menu;
            trial[p] = c;
            Feasible f = eval_menu(trial);
            if (f.profit > best.profit + 1e-15 * std::max(1.0, std::abs(best.profit))) {
              best = f;
              menu = std::move(trial);
              improved = true;
              any_improvement = true;
              break;
            }
          }
        }
      }
      if (!improved) delta *= 0.5;
    }
    if (!any_improvement && restart > 0) break;
  }
  return best;
}

}  // namespace

IndirectUtility Solution::allocation(const DiscreteInstance& instance) const {
  IndirectUtility alloc;
  alloc.grid = instance.agents;
  alloc.values = u;
  alloc.has_assignment = true;
  alloc.assign_y = y;
  alloc.assign_z = z;
  return alloc;
}

Solution solve_principal(const DiscreteInstance& instance) {
  const ModelSpec& spec = instance.spec;
  const SolverOptions& opt = instance.options;
  const int N = instance.agents.size();
  if (N < 1) throw InputError("agent grid is empty");
  const int n = spec.n;

  Workspace ws;
  ws.spec = &spec;
  ws.agents = &instance.agents;
  ws.N = N;
  ws.n = n;
  ws.outside.resize(N);
  for (int i = 0; i < N; ++i) ws.outside[i] = spec.outside_utility(instance.agents.agent(i));
  ws.yz.lo.resize(n + 1);
  ws.yz.hi.resize(n + 1);
  ws.yz.lo.head(n) = spec.Y.lo;
  ws.yz.hi.head(n) = spec.Y.hi;
  ws.yz.lo[n] = spec.z_lo;
  ws.yz.hi[n] = spec.z_hi;

  Rng rng(opt.seed + 0x5eed);

  // Feasible starts: pooling at the outside option plus the best of a pool
  // of random menus (their best responses are feasible by construction).
  std::vector<Eigen::VectorXd> starts;
  {
    Eigen::VectorXd pooling(N * (n + 1));
    for (int i = 0; i < N; ++i) {
      pooling.segment(i * (n + 1), n) = spec.y_outside;
      pooling[i * (n + 1) + n] = spec.z_outside;
    }
    starts.push_back(pooling);
  }
  {
    int menu_products = std::min(N, 6);
    std::vector<std::pair<double, Eigen::VectorXd>> pool;
    for (int trial = 0; trial < opt.random_menu_starts; ++trial) {
      Eigen::MatrixXd products(menu_products, n);
      Eigen::VectorXd prices(menu_products);
      for (int r = 0; r < menu_products; ++r) {
        products.row(r) = rng.uniform_in(spec.Y.lo, spec.Y.hi).transpose();
        prices[r] = rng.uniform(spec.z_lo, spec.z_hi);
      }
      Menu menu = make_menu(spec, products, prices);
      IndirectUtility alloc = utility_from_menu(spec, menu, instance.agents);
      Feasible f;
      f.y = alloc.assign_y;
      f.z = alloc.assign_z;
      f.u = alloc.values;
      f.profit = profit_functional(spec, alloc);
      pool.emplace_back(f.profit, flatten(f, n));
    }
    std::sort(pool.begin(), pool.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    int take = std::max(1, opt.multistart - 1);
    for (int k = 0; k < take && k < static_cast<int>(pool.size()); ++k)
      starts.push_back(pool[static_cast<std::size_t>(k)].second);
  }

  Solution best;
  best.seed = opt.seed;
  best.profit = -std::numeric_limits<double>::infinity();
  int total_iterations = 0;
  std::vector<double> trace;

  for (const Eigen::VectorXd& start : starts) {
    Eigen::VectorXd v = project(ws, start);
    {
      Feasible f = repair_to_menu(ws, v);
      if (f.profit > best.profit) {
        best.profit = f.profit;
        best.y = f.y;
        best.z = f.z;
        best.u = f.u;
        best.converged = false;
      }
      trace.push_back(best.profit);
    }
    double rho = opt.penalty_initial;
    bool stationary = false;
    for (int outer = 0; outer < opt.outer_iterations; ++outer) {
      // Projected gradient with Barzilai-Borwein steps and a nonmonotone
      // acceptance test; the penalty stiffens as rho grows.
      Eigen::VectorXd grad;
      double fv = penalized_objective(ws, v, rho, &grad);
      std::vector<double> recent{fv};
      Eigen::VectorXd prev_v = v, prev_grad = grad;
      double step = 1.0 / std::max(1.0, grad.lpNorm<Eigen::Infinity>());
      stationary = false;
      for (int inner = 0; inner < opt.inner_iterations; ++inner) {
        ++total_iterations;
        double trial = step;
        bool accepted = false;
        double f_ref = *std::max_element(recent.begin(), recent.end());
        for (int bt = 0; bt < 40; ++bt) {
          Eigen::VectorXd candidate = project(ws, v - trial * grad);
          double fc = penalized_objective(ws, candidate, rho, nullptr);
          if (fc < f_ref - 1e-14 * std::abs(f_ref)) {
            prev_v = v;
            prev_grad = grad;
            v = candidate;
            fv = penalized_objective(ws, v, rho, &grad);
            accepted = true;
            break;
          }
          trial *= 0.5;
        }
        if (!accepted) break;
        recent.push_back(fv);
        if (recent.size() > 6) recent.erase(recent.begin());
        Eigen::VectorXd dv = v - prev_v, dg = grad - prev_grad;
        double dgg = dg.squaredNorm();
        step = dgg > 0 ? std::abs(dv.dot(dg)) / dgg : trial * 2;
        step = std::min(std::max(step, 1e-12), 1e3);
        double proj_grad = (project(ws, v - grad) - v).lpNorm<Eigen::Infinity>();
        if (proj_grad < opt.gradient_tol) {
          stationary = true;
          break;
        }
      }
      Feasible f = repair_to_menu(ws, v);
      if (f.profit > best.profit) {
        best.profit = f.profit;
        best.y = f.y;
        best.z = f.z;
        best.u = f.u;
        best.converged = stationary;
        best.penalty_point = v;
        best.penalty_rho = rho;
      }
      trace.push_back(best.profit);
      if (stationary && worst_violation(ws, v) < opt.constraint_tol) break;
      rho *= opt.penalty_factor;
    }
  }

  // Final pattern-search polish on the exact feasible objective, from the
  // best contracts found.
  {
    Feasible seed_point;
    seed_point.y = best.y;
    seed_point.z = best.z;
    seed_point.u = best.u;
    seed_point.profit = best.profit;
    Feasible f = polish(ws, flatten(seed_point, n), opt.polish_sweeps);
    if (f.profit >= best.profit) {
      best.profit = f.profit;
      best.y = f.y;
      best.z = f.z;
      best.u = f.u;
    }
    trace.push_back(best.profit);
  }

  best.iterations = total_iterations;
  best.profit_trace = std::move(trace);

  // Residuals of the returned allocation.
  DiscreteInstance tmp{spec, instance.agents, opt};
  IndirectUtility alloc = best.allocation(tmp);
  IcReport ic = check_incentive_compatible(spec, alloc, 1e-6);
  best.ic_residual = ic.worst_slack;
  best.ir_residual = participation_slack(spec, alloc);
  if (best.ic_residual < -1e-6 || best.ir_residual < -1e-6) best.converged = false;
  return best;
}

VerifyResult verify_solution(const DiscreteInstance& instance, const Solution& sol) {
  VerifyResult out;
  IndirectUtility alloc = sol.allocation(instance);
  IcReport ic = check_incentive_compatible(instance.spec, alloc, 1e-6);
  out.ic_residual = ic.worst_slack;
  out.ir_residual = participation_slack(instance.spec, alloc);
  out.profit = profit_functional(instance.spec, alloc);
  out.feasible = out.ic_residual >= -1e-6 && out.ir_residual >= -1e-6;

  Workspace ws;
  ws.spec = &instance.spec;
  ws.agents = &instance.agents;
  ws.N = instance.agents.size();
  ws.n = instance.spec.n;
  ws.outside.resize(ws.N);
  for (int i = 0; i < ws.N; ++i)
    ws.outside[i] = instance.spec.outside_utility(instance.agents.agent(i));
  ws.yz.lo.resize(ws.n + 1);
  ws.yz.hi.resize(ws.n + 1);
  ws.yz.lo.head(ws.n) = instance.spec.Y.lo;
  ws.yz.hi.head(ws.n) = instance.spec.Y.hi;
  ws.yz.lo[ws.n] = instance.spec.z_lo;
  ws.yz.hi[ws.n] = instance.spec.z_hi;

  double rho_final = instance.options.penalty_initial *
                     std::pow(instance.options.penalty_factor, instance.options.outer_iterations - 1);
  Feasible f;
  f.y = sol.y;
  f.z = sol.z;
  f.u = sol.u;
  f.profit = sol.profit;
  Eigen::VectorXd v = flatten(f, ws.n);
  Eigen::VectorXd grad;
  penalized_objective(ws, v, rho_final, &grad);
  out.stationarity = (project(ws, v - grad) - v).lpNorm<Eigen::Infinity>();
  return out;
}

UniquenessProbe uniqueness_probe(const DiscreteInstance& instance, int runs) {
  if (runs < 2) throw InputError("uniqueness probe needs runs >= 2");
  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < runs; ++r) seeds.push_back(instance.options.seed + static_cast<std::uint64_t>(r));
  return uniqueness_probe(instance, seeds);
}

UniquenessProbe uniqueness_probe(const DiscreteInstance& instance,
                                 const std::vector<std::uint64_t>& seeds) {
  const int runs = static_cast<int>(seeds.size());
  if (runs < 2) throw InputError("uniqueness probe needs runs >= 2");
  std::vector<IndirectUtility> allocs(static_cast<std::size_t>(runs));
  UniquenessProbe probe;
  probe.profits.resize(runs);
  std::vector<DiscreteInstance> insts(static_cast<std::size_t>(runs), instance);
  for (int r = 0; r < runs; ++r) insts[static_cast<std::size_t>(r)].options.seed = seeds[static_cast<std::size_t>(r)];
  parallel_for(static_cast<std::size_t>(runs), [&](std::size_t r) {
    Solution sol = solve_principal(insts[r]);
    allocs[r] = sol.allocation(insts[r]);
    probe.profits[static_cast<Eigen::Index>(r)] = sol.profit;
  });
  probe.distances.setZero(runs, runs);
  for (int a = 0; a < runs; ++a) {
    for (int b = a + 1; b < runs; ++b) {
      double d = discrete_sobolev_distance(allocs[static_cast<std::size_t>(a)],
                                           allocs[static_cast<std::size_t>(b)]);
      probe.distances(a, b) = probe.distances(b, a) = d;
      probe.max_distance = std::max(probe.max_distance, d);
    }
  }
  return probe;
}

}  // namespace gscreen
