#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "gscreen/geometry.hpp"
#include "gscreen/model.hpp"

namespace gscreen {

struct OracleResult {
  Menu best_menu;
  double best_profit = 0;
  std::uint64_t menus_evaluated = 0;
  double runtime_seconds = 0;
};

/// Exhaustive ground truth at tiny scale: every assignment of the price grid
/// to the non-outside products of the product grid (the outside option keeps
/// its capped price), best responses with profit tie-breaking, argmax menu.
/// Ties in profit resolve to the lexicographically earliest price assignment.
/// Guard: price_count^product_count must not exceed 1e7.
OracleResult enumerate_menus(const ModelSpec& spec, const AgentGrid& agents,
                             const Eigen::MatrixXd& product_grid, int price_count);

}  // namespace gscreen
