#include <doctest.h>

#include <cmath>

#include "gscreen/errors.hpp"
#include "gscreen/geometry.hpp"
#include "gscreen/sampling.hpp"
#include "test_support.hpp"

using namespace gscreen;
using testsupport::vec1;

namespace {

Menu random_menu(const ModelSpec& spec, Rng& rng, int products) {
  Eigen::MatrixXd ys(products, spec.n);
  Eigen::VectorXd ps(products);
  for (int i = 0; i < products; ++i) {
    ys.row(i) = rng.uniform_in(spec.Y.lo, spec.Y.hi).transpose();
    ps[i] = rng.uniform(spec.z_lo, spec.z_hi);
  }
  return make_menu(spec, ys, ps);
}

}  // namespace

TEST_CASE("affine model gives straight G-segments") {
  ModelSpec q = builtin_model("quasilinear");
  GSegment seg = solve_g_segment(q, vec1(0.5), vec1(0.0), 0.0, vec1(1.0), 1.0, 64);
  REQUIRE(seg.samples.size() == 65);
  for (const auto& s : seg.samples) {
    CHECK(s.y[0] == doctest::Approx(s.t).epsilon(1e-9));
    CHECK(s.z == doctest::Approx(s.t).epsilon(1e-9));
    CHECK(s.residual < 1e-8);
  }
  CHECK(seg.samples.front().y[0] == 0.0);
  CHECK(seg.samples.back().y[0] == 1.0);
  CHECK(seg.samples.front().z == 0.0);
  CHECK(seg.samples.back().z == 1.0);
}

TEST_CASE("price-sensitive segment solves the nonlinear system") {
  // x*y - z^2 at x0 = 1: interpolating (0,1) -> (1,1) keeps z = 1, y = t.
  ModelSpec ps = builtin_model("price_sensitive");
  GSegment seg = solve_g_segment(ps, vec1(1.0), vec1(0.0), 1.0, vec1(1.0), 1.0, 64);
  for (const auto& s : seg.samples) {
    CHECK(s.y[0] == doctest::Approx(s.t).epsilon(1e-8));
    CHECK(s.z == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("degenerate segment and endpoint exactness") {
  ModelSpec q = builtin_model("quasilinear");
  GSegment seg = solve_g_segment(q, vec1(0.4), vec1(0.3), 0.2, vec1(0.3), 0.2, 8);
  for (const auto& s : seg.samples) {
    CHECK(s.y[0] == 0.3);
    CHECK(s.z == 0.2);
    CHECK(s.residual < 1e-12);
  }
}

TEST_CASE("segments: residuals, endpoints, chord affinity over random draws") {
  for (const auto& name : builtin_model_names()) {
    ModelSpec spec = builtin_model(name);
    Rng rng(13);
    for (int trial = 0; trial < 25; ++trial) {
      Eigen::VectorXd x0 = rng.uniform_in(spec.X.lo, spec.X.hi);
      Eigen::VectorXd y0 = rng.uniform_in(spec.Y.lo, spec.Y.hi);
      Eigen::VectorXd y1 = rng.uniform_in(spec.Y.lo, spec.Y.hi);
      double z0 = rng.uniform(spec.z_lo, spec.z_hi);
      double z1 = rng.uniform(spec.z_lo, spec.z_hi);
      GSegment seg = solve_g_segment(spec, x0, y0, z0, y1, z1, 32);
      CHECK(seg.max_residual() < 1e-8);
      CHECK((seg.samples.front().y - y0).norm() == 0.0);
      CHECK((seg.samples.back().y - y1).norm() == 0.0);

      // (G_x, G) along the segment deviates from the straight chord by < 1e-8.
      auto image = [&](const GSegmentSample& s) {
        auto [v, g] = eval_grad(spec.G, spec.pack(x0, s.y, s.z));
        Eigen::VectorXd img(spec.m + 1);
        img.head(spec.m) = g.head(spec.m);
        img[spec.m] = v;
        return img;
      };
      Eigen::VectorXd i0 = image(seg.samples.front());
      Eigen::VectorXd i1 = image(seg.samples.back());
      for (const auto& s : seg.samples) {
        Eigen::VectorXd expect = (1 - s.t) * i0 + s.t * i1;
        CHECK((image(s) - expect).norm() < 1e-8);
      }
    }
  }
}

TEST_CASE("segment convexity check: affine models have zero second differences") {
  ModelSpec q = builtin_model("quasilinear");
  GSegment seg = solve_g_segment(q, vec1(0.5), vec1(0.1), 0.3, vec1(0.9), 1.2, 64);
  SegmentConvexityReport rep = check_G3_along_segment(q, seg, 16);
  CHECK(rep.convex);
  CHECK(std::abs(rep.min_second_difference) < 1e-10);
  CHECK(!rep.strictly);  // affine, never strictly convex
}

TEST_CASE("segment convexity violated by the negatively curved model") {
  ModelSpec bad = testsupport::g3_violating_model();
  GSegment seg = solve_g_segment(bad, vec1(0.5), vec1(0.35), 0.8, vec1(0.75), 1.2, 64);
  SegmentConvexityReport rep = check_G3_along_segment(bad, seg, 32);
  CHECK(!rep.convex);
  CHECK(rep.min_second_difference < -1e-8);
}

TEST_CASE("base agent sees zero second differences by construction") {
  ModelSpec ih = builtin_model("inhomogeneous");
  Eigen::VectorXd x0 = vec1(1.0);
  GSegment seg = solve_g_segment(ih, x0, vec1(0.2), 0.2, vec1(0.9), 0.8, 64);
  std::vector<double> g(seg.samples.size());
  for (std::size_t k = 0; k < seg.samples.size(); ++k)
    g[k] = ih.utility(x0, seg.samples[k].y, seg.samples[k].z);
  for (std::size_t k = 1; k + 1 < g.size(); ++k)
    CHECK(std::abs(g[k + 1] - 2 * g[k] + g[k - 1]) < 1e-9);
}

TEST_CASE("utility_from_menu best response with hand-enumerated candidates") {
  ModelSpec q = builtin_model("quasilinear");
  Eigen::MatrixXd ys(3, 1);
  ys << 0, 0.5, 1.0;
  Eigen::VectorXd ps(3);
  ps << 0, 0.25, 1.0;
  Menu menu = make_menu(q, ys, ps);
  CHECK(menu.size() == 3);  // outside option y = 0 already present
  AgentGrid grid = make_agent_grid(q, std::vector<Eigen::VectorXd>{vec1(0.8)});
  IndirectUtility u = utility_from_menu(q, menu, grid);
  CHECK(u.values[0] == doctest::Approx(0.15));
  CHECK(u.assign_y(0, 0) == 0.5);
  CHECK(u.assign_z[0] == 0.25);
}

TEST_CASE("menu fallback to the outside option") {
  ModelSpec q = builtin_model("quasilinear");
  Eigen::MatrixXd ys(1, 1);
  ys << 1.0;
  Eigen::VectorXd ps(1);
  ps << 2.0;  // unattractive
  Menu menu = make_menu(q, ys, ps);
  AgentGrid grid = make_agent_grid(q, std::vector<int>{5});
  IndirectUtility u = utility_from_menu(q, menu, grid);
  for (int i = 0; i < grid.size(); ++i) {
    CHECK(u.values[i] == doctest::Approx(q.outside_utility(grid.agent(i))));
    CHECK(u.assign_y(i, 0) == 0.0);
  }
}

TEST_CASE("menu_from_utility is the quasilinear b-transform") {
  ModelSpec q = builtin_model("quasilinear");
  AgentGrid grid = make_agent_grid(q, std::vector<int>{9});
  Rng rng(5);
  Menu menu = random_menu(q, rng, 4);
  IndirectUtility u = utility_from_menu(q, menu, grid);
  Eigen::MatrixXd products(3, 1);
  products << 0.25, 0.5, 0.75;
  Menu out = menu_from_utility(q, u, products);
  for (int p = 0; p < out.size(); ++p) {
    double y = out.products(p, 0);
    if (y == 0.0) continue;  // outside option row added by make_menu
    double expect = q.z_lo;
    for (int i = 0; i < grid.size(); ++i)
      expect = std::max(expect, grid.points(i, 0) * y - u.values[i]);  // b(x,y) - u
    expect = std::min(expect, q.z_hi);
    CHECK(out.prices[p] == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("duality roundtrip: menu-generated utilities are reproduced") {
  for (const auto& name : builtin_model_names()) {
    ModelSpec spec = builtin_model(name);
    AgentGrid grid = make_agent_grid(spec, std::vector<int>{13});
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
      Menu menu = random_menu(spec, rng, 5);
      IndirectUtility u = utility_from_menu(spec, menu, grid);
      // Price the menu's own support: the induced utility is reproduced.
      Menu back = menu_from_utility(spec, u, menu.products);
      IndirectUtility u2 = utility_from_menu(spec, back, grid);
      CHECK((u.values - u2.values).lpNorm<Eigen::Infinity>() < 1e-9);
    }
  }
}

TEST_CASE("menu-induced allocations are incentive compatible") {
  for (const auto& name : builtin_model_names()) {
    ModelSpec spec = builtin_model(name);
    AgentGrid grid = make_agent_grid(spec, std::vector<int>{11});
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
      Menu menu = random_menu(spec, rng, 6);
      IndirectUtility u = utility_from_menu(spec, menu, grid);
      IcReport ic = check_incentive_compatible(spec, u);
      CHECK(ic.ok);
      CHECK(participation_slack(spec, u) >= -1e-12);
    }
  }
}

TEST_CASE("constant assignment is incentive compatible with zero slack") {
  ModelSpec q = builtin_model("quasilinear");
  AgentGrid grid = make_agent_grid(q, std::vector<int>{7});
  IndirectUtility alloc;
  alloc.grid = grid;
  alloc.has_assignment = true;
  alloc.assign_y = Eigen::MatrixXd::Constant(grid.size(), 1, 0.5);
  alloc.assign_z = Eigen::VectorXd::Constant(grid.size(), 0.2);
  alloc.values.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i)
    alloc.values[i] = q.utility(grid.agent(i), vec1(0.5), 0.2);
  IcReport ic = check_incentive_compatible(q, alloc);
  CHECK(ic.ok);
  CHECK(ic.worst_slack == doctest::Approx(0.0));
}

TEST_CASE("hand-built violating pair is flagged") {
  ModelSpec q = builtin_model("quasilinear");
  std::vector<Eigen::VectorXd> axes = {(Eigen::VectorXd(2) << 0.2, 0.9).finished()};
  AgentGrid grid = make_agent_grid(q, axes);
  IndirectUtility alloc;
  alloc.grid = grid;
  alloc.has_assignment = true;
  alloc.assign_y.resize(2, 1);
  alloc.assign_y << 0.2, 0.9;
  alloc.assign_z.resize(2);
  alloc.assign_z << 0.2, 0.0;  // high type pays nothing: low type envies
  alloc.values.resize(2);
  for (int i = 0; i < 2; ++i)
    alloc.values[i] = q.utility(grid.agent(i), alloc.assign_y.row(i).transpose(), alloc.assign_z[i]);
  IcReport ic = check_incentive_compatible(q, alloc);
  CHECK(!ic.ok);
  CHECK(ic.worst_i == 0);
  CHECK(ic.worst_j == 1);
}

TEST_CASE("profit functional arithmetic") {
  ModelSpec q = builtin_model("quasilinear");
  std::vector<Eigen::VectorXd> axes = {(Eigen::VectorXd(2) << 0.3, 0.7).finished()};
  AgentGrid grid = make_agent_grid(q, axes);
  IndirectUtility alloc;
  alloc.grid = grid;
  alloc.has_assignment = true;
  alloc.assign_y.resize(2, 1);
  alloc.assign_y << 0.0, 0.0;
  alloc.assign_z.resize(2);
  alloc.assign_z << 1.0, 2.0;
  alloc.values.setZero(2);
  // pi = z - a(0) = z: profit = (1 + 2)/2
  CHECK(profit_functional(q, alloc) == doctest::Approx(1.5));

  // zero-sum: profit = -sum mu_i u_i
  ModelSpec zs = builtin_model("zero_sum_profit");
  Rng rng(3);
  Menu menu = random_menu(zs, rng, 4);
  AgentGrid g2 = make_agent_grid(zs, std::vector<int>{9});
  IndirectUtility u = utility_from_menu(zs, menu, g2);
  double expect = 0;
  for (int i = 0; i < g2.size(); ++i) expect -= g2.weights[i] * u.values[i];
  CHECK(profit_functional(zs, u) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("discrete Sobolev distance") {
  ModelSpec q = builtin_model("quasilinear");
  AgentGrid grid = make_agent_grid(q, std::vector<int>{11});
  IndirectUtility a, b;
  a.grid = b.grid = grid;
  a.values.resize(11);
  b.values.resize(11);
  for (int i = 0; i < 11; ++i) {
    double x = grid.points(i, 0);
    a.values[i] = x;
    b.values[i] = 2 * x;
  }
  CHECK(discrete_sobolev_distance(a, a) == 0.0);

  // Constant shift on uniform weights: distance = |c|.
  IndirectUtility c = a;
  c.values.array() += 0.37;
  CHECK(discrete_sobolev_distance(a, c) == doctest::Approx(0.37).epsilon(1e-12));

  // u1 = x vs u2 = 2x on the 11-point uniform grid: value part is the grid
  // average of x^2, gradient part is exactly 1.
  double value_part = 0;
  for (int i = 0; i < 11; ++i) value_part += (grid.points(i, 0) * grid.points(i, 0)) / 11.0;
  CHECK(discrete_sobolev_distance(a, b) ==
        doctest::Approx(std::sqrt(value_part + 1.0)).epsilon(1e-12));

  IndirectUtility tiny;
  tiny.grid = make_agent_grid(q, std::vector<int>{1});
  tiny.values = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(discrete_sobolev_distance(tiny, tiny), GridTooSmallError);
}

TEST_CASE("convex combinations of menu utilities stay in the dual class") {
  // Pointwise combinations of menu-generated utilities are reproduced by the
  // menu/utility duality up to the product-grid resolution on every builtin
  // that certifies concave-side (all of them satisfy segment convexity).
  for (const auto& name : builtin_model_names()) {
    ModelSpec spec = builtin_model(name);
    AgentGrid grid = make_agent_grid(spec, std::vector<int>{15});
    Eigen::MatrixXd product_grid = uniform_product_grid(spec, 41);
    double h = (spec.Y.hi[0] - spec.Y.lo[0]) / 40.0;
    Rng rng(31);
    for (int trial = 0; trial < 5; ++trial) {
      Menu m0 = random_menu(spec, rng, 5);
      Menu m1 = random_menu(spec, rng, 5);
      IndirectUtility u0 = utility_from_menu(spec, m0, grid);
      IndirectUtility u1 = utility_from_menu(spec, m1, grid);
      for (double t : {0.25, 0.5, 0.75}) {
        IndirectUtility ut = u0;
        ut.has_assignment = false;
        ut.values = (1 - t) * u0.values + t * u1.values;
        IndirectUtility back =
            utility_from_menu(spec, menu_from_utility(spec, ut, product_grid), grid);
        // Reproduction never overshoots, and the grid gap is O(h).
        CHECK((back.values - ut.values).maxCoeff() < 1e-9);
        CHECK((ut.values - back.values).maxCoeff() < 2 * h);
      }
    }
  }
}
