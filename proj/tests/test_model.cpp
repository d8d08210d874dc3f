#include <doctest.h>

#include <cmath>

#include "gscreen/errors.hpp"
#include "gscreen/model.hpp"
#include "gscreen/sampling.hpp"
#include "test_support.hpp"

using namespace gscreen;
using testsupport::box1;
using testsupport::vec1;

namespace {

ModelSpec raw_model(const char* g, const char* pi, Box X, Box Y, double zlo, double zhi,
                    double y_out = 0, double z_out = 0) {
  ModelSpec spec;
  spec.m = spec.n = 1;
  spec.X = X;
  spec.Y = Y;
  spec.z_lo = zlo;
  spec.z_hi = zhi;
  auto vars = model_variables(1, 1);
  spec.G = parse(g, vars);
  spec.pi = parse(pi, vars);
  spec.y_outside = vec1(y_out);
  spec.z_outside = z_out;
  validate(spec);
  return spec;
}

}  // namespace

TEST_CASE("builtin models validate and register") {
  for (const auto& name : builtin_model_names()) {
    ModelSpec spec = builtin_model(name);
    CHECK(spec.m == 1);
    CHECK(spec.family.has_value());
  }
  CHECK_THROWS_AS(builtin_model("nope"), InputError);
}

TEST_CASE("family templates assemble G and pi") {
  ModelSpec q = builtin_model("quasilinear");
  Eigen::VectorXd x = vec1(0.5), y = vec1(0.8);
  CHECK(q.utility(x, y, 0.3) == doctest::Approx(0.5 * 0.8 - 0.3));
  CHECK(q.profit(x, y, 0.3) == doctest::Approx(0.3 - 0.32));

  ModelSpec zs = builtin_model("zero_sum_profit");
  CHECK(zs.profit(x, y, 0.3) == doctest::Approx(-zs.utility(x, y, 0.3)));

  ModelSpec ps = builtin_model("price_sensitive");
  CHECK(ps.utility(x, y, 0.5) == doctest::Approx(0.4 - 0.25));
}

TEST_CASE("G4 sign check") {
  CHECK(check_G4(builtin_model("quasilinear"), 256).status == HypothesisEntry::Status::Pass);
  CHECK(check_G4(builtin_model("price_sensitive"), 256).status == HypothesisEntry::Status::Pass);
  ModelSpec bad = raw_model("x1*y1 + z", "z", box1(0, 1), box1(0, 1), 0, 2);
  HypothesisEntry e = check_G4(bad, 256);
  CHECK(e.status == HypothesisEntry::Status::Fail);
  CHECK(!e.witnesses.empty());
}

TEST_CASE("G1 twist check") {
  CHECK(check_G1_twist(builtin_model("quasilinear"), 32).status == HypothesisEntry::Status::Pass);
  CHECK(check_G1_twist(builtin_model("price_sensitive"), 32).status ==
        HypothesisEntry::Status::Pass);
  // No z dependence kills injectivity (rank drops in the z column).
  ModelSpec flat = raw_model("x1*y1", "z", box1(0, 1), box1(0, 1), 0, 2);
  HypothesisEntry e = check_G1_twist(flat, 32);
  CHECK(e.status == HypothesisEntry::Status::Fail);
}

TEST_CASE("G6 rank check") {
  CHECK(check_G6_rank(builtin_model("quasilinear"), 256).status == HypothesisEntry::Status::Pass);
  ModelSpec zero = raw_model("0*x1*y1*z", "z", box1(0, 1), box1(0, 1), 0, 2);
  CHECK(check_G6_rank(zero, 16).status == HypothesisEntry::Status::Fail);
  // Bilinear with Y = (1,2): singular values bounded below on the box.
  ModelSpec shifted = raw_model("x1*y1 - z", "z", box1(0, 1), box1(1, 2), 0, 2, 1.0, 0.0);
  CHECK(check_G6_rank(shifted, 256).status == HypothesisEntry::Status::Pass);
}

TEST_CASE("hypothesis report bundles and G5 warning") {
  ModelSpec q = builtin_model("quasilinear");
  HypothesisReport rep = check_hypotheses(q, 128, 3);
  CHECK(rep.all_pass());
  CHECK(rep.find("G2")->status == HypothesisEntry::Status::Skipped);
  CHECK(rep.find("G7")->status == HypothesisEntry::Status::Pass);
  CHECK(rep.seed == 3);

  // A weak price channel makes the capped price attractive, violating the
  // price-cap inequality; the report carries it as a warning only.
  ModelSpec warn = raw_model("x1*y1 - 0.1*z", "z", box1(0, 1), box1(0, 1), 0, 1);
  HypothesisReport wrep = check_hypotheses(warn, 128);
  CHECK(!wrep.warnings.empty());
}

TEST_CASE("invert_price closed form and roundtrip") {
  ModelSpec q = builtin_model("quasilinear");
  CHECK(invert_price(q, vec1(0.5), vec1(1.0), 0.2) == doctest::Approx(0.3).epsilon(1e-12));

  ModelSpec ps = builtin_model("price_sensitive");
  // x*y - z^2 = 0 at x = y = 1 gives z = 1.
  CHECK(invert_price(ps, vec1(1.0), vec1(1.0), 0.0) == doctest::Approx(1.0).epsilon(1e-10));

  for (const auto& name : builtin_model_names()) {
    ModelSpec spec = builtin_model(name);
    Box d = spec.domain().shrunk(1e-6);
    Rng rng(7);
    for (int s = 0; s < 1000; ++s) {
      Eigen::VectorXd p = rng.uniform_in(d.lo, d.hi);
      Eigen::VectorXd x = spec.x_of(p), y = spec.y_of(p);
      double z = spec.z_of(p);
      double u = spec.utility(x, y, z);
      CHECK(std::abs(invert_price(spec, x, y, u) - z) < 1e-10);
    }
  }
}

TEST_CASE("invert_price monotone decreasing in u") {
  ModelSpec ps = builtin_model("price_sensitive");
  Eigen::VectorXd x = vec1(0.7), y = vec1(0.6);
  double u_lo = ps.utility(x, y, ps.z_hi), u_hi = ps.utility(x, y, ps.z_lo);
  double prev = ps.z_hi + 1;
  for (int k = 0; k < 50; ++k) {
    double u = u_lo + (u_hi - u_lo) * (k + 0.5) / 50;
    double z = invert_price(ps, x, y, u);
    CHECK(z < prev);
    prev = z;
  }
}

TEST_CASE("invert_price range errors") {
  ModelSpec q = builtin_model("quasilinear");
  Eigen::VectorXd x = vec1(0.5), y = vec1(0.5);
  double top = q.utility(x, y, q.z_lo);
  CHECK_THROWS_AS(invert_price(q, x, y, top + 1.0), OutOfRangeError);
  double bottom = q.utility(x, y, q.z_hi);
  CHECK_THROWS_AS(invert_price(q, x, y, bottom - 1.0), OutOfRangeError);
}

TEST_CASE("model validation rejects bad input") {
  CHECK_THROWS_AS(raw_model("x1*y1 - z", "z", box1(1, 0), box1(0, 1), 0, 2), InputError);
  CHECK_THROWS_AS(raw_model("x1*y1 - z", "z", box1(0, 1), box1(0, 1), 2, 0), InputError);
  CHECK_THROWS_AS(raw_model("x1*y1 - z", "z", box1(0, 1), box1(0, 1), 0, 2, 5.0), InputError);
  // m >= n enforced.
  ModelSpec spec;
  spec.m = 1;
  spec.n = 2;
  spec.X = box1(0, 1);
  Box y2;
  y2.lo.resize(2);
  y2.hi.resize(2);
  y2.lo << 0, 0;
  y2.hi << 1, 1;
  spec.Y = y2;
  spec.z_lo = 0;
  spec.z_hi = 1;
  auto vars = model_variables(1, 2);
  spec.G = parse("x1*y1 - z", vars);
  spec.pi = parse("z", vars);
  spec.y_outside = Eigen::VectorXd::Zero(2);
  spec.z_outside = 0;
  CHECK_THROWS_AS(validate(spec), InputError);
}

TEST_CASE("hypothesis checks are deterministic given the seed") {
  ModelSpec ps = builtin_model("price_sensitive");
  HypothesisReport a = check_hypotheses(ps, 64, 11);
  HypothesisReport b = check_hypotheses(ps, 64, 11);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) CHECK(a.entries[i].status == b.entries[i].status);
}
