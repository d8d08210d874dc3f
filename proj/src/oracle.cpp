#include "gscreen/oracle.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "gscreen/errors.hpp"

namespace gscreen {

OracleResult enumerate_menus(const ModelSpec& spec, const AgentGrid& agents,
                             const Eigen::MatrixXd& product_grid, int price_count) {
  if (price_count < 1) throw InputError("price grid needs >= 1 level");
  const int P = static_cast<int>(product_grid.rows());
  if (P < 1) throw InputError("product grid is empty");
  if (std::pow(static_cast<double>(price_count), static_cast<double>(P)) > 1e7)
    throw TooLargeError("price_count^products exceeds the 1e7 enumeration guard");

  auto t0 = std::chrono::steady_clock::now();

  int outside = -1;
  for (int p = 0; p < P; ++p) {
    if ((product_grid.row(p).transpose() - spec.y_outside).norm() < 1e-12) {
      outside = p;
      break;
    }
  }
  if (outside < 0) throw InputError("product grid must contain the outside option");

  Eigen::VectorXd price_levels(price_count);
  for (int q = 0; q < price_count; ++q)
    price_levels[q] = price_count == 1
                          ? spec.z_lo
                          : spec.z_lo + (spec.z_hi - spec.z_lo) * q / (price_count - 1);

  const int N = agents.size();
  // G and pi at every (agent, product, price level), plus the outside column.
  std::vector<Eigen::MatrixXd> gtab(static_cast<std::size_t>(N)), ptab(static_cast<std::size_t>(N));
  Eigen::VectorXd g_out(N), p_out(N);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd x = agents.agent(i);
    gtab[static_cast<std::size_t>(i)].resize(P, price_count);
    ptab[static_cast<std::size_t>(i)].resize(P, price_count);
    for (int p = 0; p < P; ++p) {
      Eigen::VectorXd y = product_grid.row(p).transpose();
      for (int q = 0; q < price_count; ++q) {
        gtab[static_cast<std::size_t>(i)](p, q) = spec.utility(x, y, price_levels[q]);
        ptab[static_cast<std::size_t>(i)](p, q) = spec.profit(x, y, price_levels[q]);
      }
    }
    g_out[i] = spec.utility(x, spec.y_outside, spec.z_outside);
    p_out[i] = spec.profit(x, spec.y_outside, spec.z_outside);
  }

  // Free products exclude the outside option, whose price stays capped.
  std::vector<int> free_products;
  for (int p = 0; p < P; ++p)
    if (p != outside) free_products.push_back(p);
  const int F = static_cast<int>(free_products.size());

  std::vector<int> assign(static_cast<std::size_t>(F), 0);
  std::vector<int> best_assign;
  double best_profit = -std::numeric_limits<double>::infinity();
  std::uint64_t count = 0;
  const double tie = 1e-12;

  for (;;) {
    ++count;
    double profit = 0;
    for (int i = 0; i < N; ++i) {
      const auto& g = gtab[static_cast<std::size_t>(i)];
      const auto& pr = ptab[static_cast<std::size_t>(i)];
      double bu = g_out[i], bp = p_out[i];
      for (int k = 0; k < F; ++k) {
        int p = free_products[static_cast<std::size_t>(k)];
        int q = assign[static_cast<std::size_t>(k)];
        double uu = g(p, q);
        double rel = tie * (1.0 + std::abs(bu));
        if (uu > bu + rel) {
          bu = uu;
          bp = pr(p, q);
        } else if (std::abs(uu - bu) <= rel && pr(p, q) > bp) {
          bp = pr(p, q);  // ties go to the principal's preferred option
        }
      }
      profit += agents.weights[i] * bp;
    }
    if (profit > best_profit + tie) {
      best_profit = profit;
      best_assign = assign;
    }
    // Lexicographic increment (first menu with the best profit wins ties).
    int k = F - 1;
    for (; k >= 0; --k) {
      if (++assign[static_cast<std::size_t>(k)] < price_count) break;
      assign[static_cast<std::size_t>(k)] = 0;
    }
    if (k < 0) break;
  }

  OracleResult out;
  Eigen::VectorXd prices(P);
  prices[outside] = std::min(spec.z_outside, spec.z_hi);
  for (int k = 0; k < F; ++k)
    prices[free_products[static_cast<std::size_t>(k)]] = price_levels[best_assign[static_cast<std::size_t>(k)]];
  out.best_menu = make_menu(spec, product_grid, prices);
  out.menus_evaluated = count;
  // Recompute the winner through the shared best-response path.
  IndirectUtility alloc = utility_from_menu(spec, out.best_menu, agents);
  out.best_profit = profit_functional(spec, alloc);
  out.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace gscreen
