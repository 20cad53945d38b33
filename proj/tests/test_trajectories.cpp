#include "lvfa/trajectories.hpp"

#include <doctest.h>

#include <cmath>

#include "lvfa/errors.hpp"

using namespace lvfa;

namespace {

SystemSpec make_spec(const std::vector<std::string>& a,
                     const std::vector<std::vector<std::string>>& b, double wlo = -20.0,
                     double whi = 20.0, int samples = 4001) {
  SystemSpec s;
  s.n = static_cast<int>(a.size());
  for (const auto& e : a) s.a.push_back(TimeFn::parse(e));
  for (const auto& row : b) {
    s.b.emplace_back();
    for (const auto& e : row) s.b.back().push_back(TimeFn::parse(e));
  }
  s.window_lo = wlo;
  s.window_hi = whi;
  s.sample_count = samples;
  return s;
}

SystemSpec symmetric_pair() {
  return make_spec({"3", "3"}, {{"2", "-1"}, {"-1", "2"}});
}

}  // namespace

TEST_SUITE_BEGIN("trajectories");

TEST_CASE("pull-back finds the constant coexistence state of the symmetric pair") {
  const auto spec = symmetric_pair();
  const auto out = search_witness(spec, ConditionKind::A, SupportSet::full(2));
  REQUIRE(out.witness.has_value());
  const auto star = compute_star(spec, *out.witness);
  CHECK(star.residual <= 1e-8);
  CHECK(star.horizon >= 40.0);
  for (double tq : {-20.0, -7.3, 0.0, 11.9, 20.0}) {
    const Vec u = star.at(tq);
    CHECK(u[0] == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(u[1] == doctest::Approx(3.0).epsilon(1e-7));
  }
}

TEST_CASE("pull-back limit of the periodic logistic equation matches quadrature") {
  const auto spec = make_spec({"2+sin(t)"}, {{"1"}});
  const auto out = search_witness(spec, ConditionKind::A, SupportSet::full(1));
  REQUIRE(out.witness.has_value());
  const auto star = compute_star(spec, *out.witness);
  // 1/u solves a linear equation; its bounded solution at t=0 is
  // integral_{-inf}^0 exp(1 + 2s - cos s) ds = 0.65910329373390073,
  // evaluated independently with adaptive quadrature.
  CHECK(star.at(0.0)[0] == doctest::Approx(1.5172128701328099).epsilon(1e-6));
  CHECK(star.at(M_PI / 2)[0] == doctest::Approx(2.8589477726228322).epsilon(1e-6));
  // periodicity of the limit
  CHECK(star.at(2.0 * M_PI)[0] == doctest::Approx(star.at(0.0)[0]).epsilon(1e-6));
  for (const auto& u : star.u) {
    CHECK(u[0] >= out.witness->dbar[0] - 1e-8);
    CHECK(u[0] <= out.witness->d[0] + 1e-8);
  }
}

TEST_CASE("pull-back respects a restricted support") {
  const auto spec = make_spec({"2", "-1"}, {{"1", "-0.1"}, {"-0.1", "1"}});
  const auto I = SupportSet::of(2, {0});
  const auto sub = subcommunity(spec, I);
  const auto a = search_witness(sub, ConditionKind::A, SupportSet::full(1));
  REQUIRE(a.witness.has_value());
  Witness w;
  w.support = I;
  w.d = embed_state(a.witness->d, I);
  w.dbar = embed_state(a.witness->dbar, I);
  const auto star = compute_star(spec, w);
  const Vec u0 = star.at(0.0);
  CHECK(u0[0] == doctest::Approx(2.0).epsilon(1e-7));  // equilibrium of u' = u(2-u)
  CHECK(u0[1] == 0.0);
  for (const auto& u : star.u) CHECK(u[1] == 0.0);
}

TEST_CASE("the zero support yields the zero solution") {
  const auto spec = symmetric_pair();
  Witness w;
  w.support = SupportSet::none(2);
  const auto star = compute_star(spec, w);
  CHECK(star.at(0.0).norm() == 0.0);
  CHECK(star.residual == 0.0);
}

TEST_CASE("an empty witness box is rejected") {
  const auto spec = symmetric_pair();
  Witness w;
  w.support = SupportSet::full(2);
  w.d = Vec::Constant(2, 1.0);
  w.dbar = Vec::Constant(2, 2.0);  // floor above ceiling
  CHECK_THROWS_AS(compute_star(spec, w), ArgError);
}

TEST_CASE("contraction estimate recovers the linearized decay rate") {
  const auto spec = symmetric_pair();
  Vec u0(2), v0(2);
  u0 << 0.5, 4.0;
  v0 << 2.0, 1.0;
  const auto est = estimate_contraction(spec, u0, v0, 0.0, 30.0, 0.5);
  CHECK(!est.degenerate);
  // eigenvalues at the coexistence state (3,3) are -3 and -9
  CHECK(est.fitted_decay == doctest::Approx(3.0).epsilon(0.05));
  CHECK(est.sigma1 == doctest::Approx(3.0).epsilon(0.05));
  CHECK(est.predicted_decay == doctest::Approx(0.5 * est.sigma1));
  CHECK(est.fitted_decay >= est.predicted_decay - 0.1);
  CHECK(est.kappa >= 0.0);
}

TEST_CASE("contraction estimate flags identical starts as degenerate") {
  const auto spec = symmetric_pair();
  Vec u0(2);
  u0 << 2.0, 2.0;
  const auto est = estimate_contraction(spec, u0, u0, 0.0, 10.0);
  CHECK(est.degenerate);
}

TEST_CASE("support survey certifies exactly the persistent sub-communities") {
  const auto spec = make_spec({"2", "-1"}, {{"1", "-0.1"}, {"-0.1", "1"}});
  const auto survey = list_complete_solutions(spec);
  REQUIRE(survey.items.size() == 4);
  CHECK(survey.items[0].support.empty());
  CHECK(survey.items[0].certified);
  CHECK(survey.items[1].support.label() == "{1}");
  CHECK(survey.items[1].certified);
  CHECK(survey.items[1].witness.dbar[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(survey.items[2].support.label() == "{2}");
  CHECK(!survey.items[2].certified);
  CHECK(survey.items[2].note.find("coexistence") != std::string::npos);
  CHECK(survey.items[3].support.label() == "{1,2}");
  CHECK(!survey.items[3].certified);
}

TEST_CASE("support survey of a permanent system certifies every support") {
  const auto survey = list_complete_solutions(symmetric_pair());
  REQUIRE(survey.items.size() == 4);
  for (const auto& item : survey.items) CHECK(item.certified);
  // sub-community boxes really contain the sub-community states
  const auto& pair_item = survey.items[3];
  CHECK(pair_item.witness.dbar.minCoeff() > 0.0);
  CHECK(pair_item.witness.d.minCoeff() >= 3.0);
}

TEST_SUITE_END();
