#include "lvfa/skeleton.hpp"

#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "lvfa/errors.hpp"

using namespace lvfa;

namespace {

SystemSpec make_spec(const std::vector<std::string>& a,
                     const std::vector<std::vector<std::string>>& b, double wlo = -40.0,
                     double whi = 40.0, int samples = 8001) {
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

// u' = u(1-u) feeding v' = v(1+u-v); every subset of species admits a
// bounded trajectory, so the skeleton has four nodes and five runs.
SystemSpec coupled_pair() { return make_spec({"1", "1"}, {{"1", "-1"}, {"0", "1"}}); }

SystemSpec logistic(double wlo = -100.0, double whi = 100.0) {
  return make_spec({"1"}, {{"1"}}, wlo, whi, 20001);
}

CompleteSolution star_on(const SystemSpec& spec, const std::vector<int>& idx, double box_lo,
                         double box_hi) {
  Witness w;
  w.support = SupportSet::of(spec.n, idx);
  w.d = Vec::Zero(spec.n);
  w.dbar = Vec::Zero(spec.n);
  for (int i : idx) {
    w.d[i] = box_hi;
    w.dbar[i] = box_lo;
  }
  return compute_star(spec, w);
}

CompleteSolution zero_star(const SystemSpec& spec) {
  Witness w;
  w.support = SupportSet::none(spec.n);
  w.d = Vec::Zero(spec.n);
  w.dbar = Vec::Zero(spec.n);
  return compute_star(spec, w);
}

}  // namespace

TEST_SUITE_BEGIN("skeleton");

TEST_CASE("seed direction puts equal weight on every listed coordinate") {
  Mat U(2, 1);
  U << 1.0 / std::sqrt(5.0), 2.0 / std::sqrt(5.0);
  const Vec v = seed_direction(U, {1});
  REQUIRE(v.size() == 2);
  CHECK(v[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(1.0).epsilon(1e-12));

  const Vec w = seed_direction(Mat::Identity(2, 2), {0, 1});
  CHECK(w[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("seed direction rejects mismatched or tangent bundles") {
  Mat U(2, 1);
  U << 0.6, 0.8;
  CHECK_THROWS_AS(seed_direction(U, {0, 1}), SkeletonError);

  Mat E1 = Mat::Zero(2, 1);
  E1(0, 0) = 1.0;  // no component along coordinate 1
  CHECK_THROWS_AS(seed_direction(E1, {1}), SkeletonError);
}

TEST_CASE("trace connects the zero state to the scalar coexistence state") {
  const auto spec = coupled_pair();
  const auto zero = zero_star(spec);
  const auto one = star_on(spec, {0}, 0.5, 1.5);

  const ConnectionTrace tr = trace_connection(spec, zero, one);
  CHECK(tr.source == SupportSet::none(2));
  CHECK(tr.target == SupportSet::of(2, {0}));
  CHECK(tr.alpha == 1e-8);  // the smallest seed already works
  CHECK(tr.direction.size() == 1);
  CHECK(tr.direction[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(tr.backward_error == doctest::Approx(1e-8).epsilon(1e-9));
  CHECK(tr.forward_error <= 1e-5);
  CHECK(tr.departure_rate == doctest::Approx(1.0).epsilon(0.1));
  CHECK(tr.t_seed == doctest::Approx(-30.0));
  CHECK(tr.t_arrive == doctest::Approx(40.0));
  CHECK(tr.path.t_front() == doctest::Approx(-30.0));
  CHECK(tr.path.t_back() == doctest::Approx(40.0));
}

TEST_CASE("trace from a face into the interior uses the transversal direction") {
  const auto spec = coupled_pair();
  const auto face = star_on(spec, {0}, 0.5, 1.5);
  const auto interior = star_on(spec, {0, 1}, 0.3, 3.0);

  const ConnectionTrace tr = trace_connection(spec, face, interior);
  REQUIRE(tr.direction.size() == 2);
  // Backward-decaying direction of [[-1,1],[0,1]] is (1,2)/sqrt(5), scaled to
  // unit weight on the missing coordinate.
  CHECK(tr.direction[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(tr.direction[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(tr.forward_error <= 1e-5);
  CHECK(tr.departure_rate == doctest::Approx(1.0).epsilon(0.1));
  // Arrival state is the coexistence point (2, 1).
  const Vec z = tr.path.eval(tr.t_arrive);
  CHECK(z[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(z[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("trace tolerates an oscillating plateau once the gap saturates") {
  // With time-dependent growth rates the gap to the source oscillates after
  // the run settles near the target; only the departure phase is monotone.
  const auto spec =
      make_spec({"3+0.5*sin(t)", "3+0.5*cos(t)"}, {{"2", "-1"}, {"-1", "2"}});
  const auto zero = zero_star(spec);
  const auto one = star_on(spec, {0}, 1.0, 2.0);

  const ConnectionTrace tr = trace_connection(spec, zero, one);
  CHECK(tr.forward_error <= 1e-5);
  // Departure rate tracks the mean growth rate a1 = 3.
  CHECK(tr.departure_rate == doctest::Approx(3.0).epsilon(0.15));
}

TEST_CASE("trace requires strictly nested supports") {
  const auto spec = coupled_pair();
  const auto zero = zero_star(spec);
  const auto one = star_on(spec, {0}, 0.5, 1.5);
  CHECK_THROWS_AS(trace_connection(spec, one, zero), ArgError);
  CHECK_THROWS_AS(trace_connection(spec, one, one), ArgError);
}

TEST_CASE("backward runs above the carrying capacity blow up in finite time") {
  const auto spec = logistic(-60.0, 60.0);
  const auto esc = detect_backward_unbounded(spec, Vec::Constant(1, 2.0), 0.0, 50.0);
  REQUIRE(esc.has_value());
  CHECK(*esc < 0.0);
  CHECK(*esc > -2.0);  // the singularity sits at t = -log(2)

  CHECK_FALSE(detect_backward_unbounded(spec, Vec::Constant(1, 0.5), 0.0, 50.0).has_value());
  CHECK_FALSE(detect_backward_unbounded(spec, Vec::Constant(1, 1.0), 0.0, 50.0).has_value());
}

TEST_CASE("skeleton of the coupled pair has four nodes and five runs") {
  const auto spec = coupled_pair();
  const Skeleton sk = build_skeleton(spec);

  CHECK(sk.regime.describe() == "permanence");
  REQUIRE(sk.nodes.size() == 4);
  for (std::size_t k = 0; k < 4; ++k)  // ascending support mask
    CHECK(sk.nodes[k].support.mask() == k);
  CHECK(sk.annotations.empty());

  const SkeletonNode* full = sk.node(SupportSet::full(2));
  REQUIRE(full != nullptr);
  const Vec ustar = full->star.at(0.0);
  CHECK(ustar[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(ustar[1] == doctest::Approx(1.0).epsilon(1e-8));

  REQUIRE(sk.edges.size() == 5);
  const std::vector<std::pair<std::uint32_t, std::uint32_t>> expect = {
      {0u, 1u}, {0u, 2u}, {0u, 3u}, {1u, 3u}, {2u, 3u}};
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(sk.edges[k].source.mask() == expect[k].first);
    CHECK(sk.edges[k].target.mask() == expect[k].second);
    CHECK(sk.edges[k].trace.forward_error <= 1e-5);
    CHECK(sk.edges[k].trace.departure_rate > 0.0);
  }

  // A state on a face flows from the zero state to the face's node.
  Vec u0(2);
  u0 << 0.5, 0.0;
  const Classification c = classify_initial(spec, sk, u0);
  CHECK(c.label == "connection:s0->s1");
  CHECK(c.support == SupportSet::of(2, {0}));
  REQUIRE(c.forward_node.has_value());
  CHECK(*c.forward_node == SupportSet::of(2, {0}));
  REQUIRE(c.backward_node.has_value());
  CHECK(c.backward_node->empty());
}

TEST_CASE("skeleton of a one-species-extinct pair annotates random starts") {
  const auto spec = make_spec({"2", "-1"}, {{"1", "-0.1"}, {"-0.1", "1"}});
  const Skeleton sk = build_skeleton(spec);

  CHECK(sk.regime.describe() == "extinction-of-1");
  REQUIRE(sk.nodes.size() == 2);
  CHECK(sk.nodes[0].support.empty());
  CHECK(sk.nodes[1].support == SupportSet::of(2, {0}));
  REQUIRE(sk.edges.size() == 1);
  CHECK(sk.edges[0].source.empty());
  CHECK(sk.edges[0].target == SupportSet::of(2, {0}));

  REQUIRE(sk.annotations.size() == 20);
  for (const auto& line : sk.annotations) {
    CHECK(line.find("forward gap to {1}") != std::string::npos);
    CHECK(line.find("backward") != std::string::npos);
  }
}

TEST_CASE("skeleton of a dying community is a single node") {
  const auto spec = make_spec({"-1", "-1+0.2*cos(t)"}, {{"1", "0"}, {"0", "1"}});
  const Skeleton sk = build_skeleton(spec);
  CHECK(sk.regime.describe() == "total-extinction");
  REQUIRE(sk.nodes.size() == 1);
  CHECK(sk.nodes[0].support.empty());
  CHECK(sk.edges.empty());
  CHECK(sk.annotations.size() == 20);
}

TEST_CASE("classification of scalar logistic states matches the phase line") {
  const auto spec = logistic();
  const Skeleton sk = build_skeleton(spec);
  CHECK(sk.regime.describe() == "permanence");
  REQUIRE(sk.nodes.size() == 2);
  REQUIRE(sk.edges.size() == 1);

  const auto on_node = classify_initial(spec, sk, Vec::Constant(1, 1.0));
  CHECK(on_node.label == "node:s1");
  const auto at_zero = classify_initial(spec, sk, Vec::Zero(1));
  CHECK(at_zero.label == "node:s0");

  const auto below = classify_initial(spec, sk, Vec::Constant(1, 0.3));
  CHECK(below.label == "connection:s0->s1");
  CHECK_FALSE(below.backward_escape_time.has_value());
  CHECK(below.forward_distance <= 1e-5);

  const auto above = classify_initial(spec, sk, Vec::Constant(1, 1.7));
  CHECK(above.label == "unbounded-backward");
  REQUIRE(above.backward_escape_time.has_value());
  CHECK(*above.backward_escape_time < 0.0);
  CHECK(*above.backward_escape_time > -5.0);
  REQUIRE(above.forward_node.has_value());
  CHECK(*above.forward_node == SupportSet::of(1, {0}));
}

TEST_CASE("classification validates its input") {
  const auto spec = logistic();
  const Skeleton sk = build_skeleton(spec);
  CHECK_THROWS_AS(classify_initial(spec, sk, Vec::Constant(2, 0.5)), ArgError);
  CHECK_THROWS_AS(classify_initial(spec, sk, Vec::Constant(1, -0.5)), ArgError);
  CHECK_THROWS_AS(classify_initial(spec, sk, Vec::Constant(1, 0.5), 500.0), ArgError);
}

TEST_SUITE_END();
