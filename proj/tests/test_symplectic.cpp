#include <catch2/catch_amalgamated.hpp>

#include "support/test_support.hpp"

#include <cmath>

using namespace riccati;
using namespace riccati::testing;

TEST_CASE("flow matrix starts at the identity and rejects negative times") {
  const SymplecticFlow flow(ref_system());
  REQUIRE(max_abs_diff(flow.sigma_at(0.0), Mat::Identity(4, 4)) == 0.0);
  REQUIRE_THROWS_AS(flow.sigma_at(-0.1), RiccatiError);
}

TEST_CASE("zero generator freezes the flow at the identity") {
  const LinearSystem still(Mat::Zero(2, 2), Mat::Zero(2, 2), Mat::Zero(2, 2));
  const SymplecticFlow flow(still);
  REQUIRE(max_abs_diff(flow.sigma_at(1.0), Mat::Identity(4, 4)) < 1e-15);
}

TEST_CASE("flow matrices compose over time splits") {
  const SymplecticFlow flow(ref_system());
  const std::pair<double, double> splits[] = {
      {0.5, 0.5}, {0.3, 1.7}, {1.0, 1.0}, {0.05, 1.95}};
  for (const auto& [t, s] : splits) {
    const Mat lhs = flow.sigma_at(t + s);
    const Mat rhs = flow.sigma_at(t) * flow.sigma_at(s);
    REQUIRE(rel_diff(lhs, rhs) < 1e-9);
  }
}

TEST_CASE("flow solve returns the initial condition at time zero") {
  const SymplecticFlow flow(ref_system());
  Rng gen(211);
  const SymMat p0 = random_sym(gen, 2, 3.0);
  REQUIRE(max_abs_diff(solve_symplectic(flow, p0, 0.0).mat(), p0.mat()) == 0.0);
}

TEST_CASE("flow solve tracks the adaptive reference on a global solution") {
  const LinearSystem sys = ref_system();
  const SymplecticFlow flow(sys);
  const SymMat p0(-0.1 * Mat::Identity(2, 2));

  std::vector<double> times;
  for (int k = 1; k <= 16; ++k) times.push_back(0.25 * k);
  const SolveTrace ref = rk45_dre(sys, p0, times);
  REQUIRE_FALSE(ref.truncated_at_escape);
  REQUIRE(ref.samples.size() == times.size());

  for (std::size_t i = 0; i < times.size(); ++i) {
    const SymMat p = solve_symplectic(flow, p0, times[i]);
    REQUIRE(max_abs_diff(p.mat(), ref.samples[i].second.mat()) < 1e-5);
  }
}

TEST_CASE("flow solve throws when the characteristic block degenerates") {
  const LinearSystem sys = ref_system();
  const SymplecticFlow flow(sys);
  Mat p0m = Mat::Zero(2, 2);
  p0m(0, 0) = 2.0;
  p0m(1, 1) = 6.5;
  const SymMat p0(p0m);

  // Bisect the sign change of det(X_t) to land almost exactly on the
  // singular time, where the rank screen must fire.
  const auto det_x = [&](double t) {
    const Mat sigma = flow.sigma_at(t);
    const Mat x = sigma.topLeftCorner(2, 2) + sigma.topRightCorner(2, 2) * p0.mat();
    return x.determinant();
  };
  double lo = 2.8, hi = 2.9;
  REQUIRE(det_x(lo) * det_x(hi) < 0.0);
  for (int i = 0; i < 50; ++i) {
    const double mid = 0.5 * (lo + hi);
    (det_x(mid) * det_x(lo) > 0.0 ? lo : hi) = mid;
  }
  REQUIRE_THROWS_AS(solve_symplectic(flow, p0, 0.5 * (lo + hi)),
                    EscapeEncountered);
}

TEST_CASE("continuation past the escape time leaves the solution class") {
  const LinearSystem sys = ref_system();
  const SymplecticFlow flow(sys);
  Mat p0m = Mat::Zero(2, 2);
  p0m(0, 0) = 2.0;
  p0m(1, 1) = 6.5;

  const SymMat before = solve_symplectic(flow, SymMat(p0m), 2.0);
  const auto in_class =
      classify_definiteness(SymMat(before.mat() - ref_m().mat()));
  REQUIRE(in_class.classification == Definiteness::PositiveDefinite);

  const SymMat after = solve_symplectic(flow, SymMat(p0m), 3.0);
  const auto out_of_class =
      classify_definiteness(SymMat(after.mat() - ref_m().mat()));
  REQUIRE(out_of_class.classification != Definiteness::PositiveDefinite);
}

TEST_CASE("escape scan clears global solutions") {
  const LinearSystem sys = ref_system();
  const SymplecticFlow flow(sys);

  const SymMat m0 = solve_are_stabilizing(sys);
  const EscapeReport stationary = escape_scan_symplectic(flow, m0, 4.0, 0.05);
  REQUIRE(stationary.verdict == EscapeVerdict::NoEscapeWithinHorizon);
  REQUIRE_FALSE(stationary.escape_bracket.has_value());

  const SymMat small(-0.1 * Mat::Identity(2, 2));
  const EscapeReport clear = escape_scan_symplectic(flow, small, 4.0, 0.05);
  REQUIRE(clear.verdict == EscapeVerdict::NoEscapeWithinHorizon);
}

TEST_CASE("escape scan brackets the blow-up of a finite-time solution") {
  const LinearSystem sys = ref_system();
  const SymplecticFlow flow(sys);
  Mat p0m = Mat::Zero(2, 2);
  p0m(0, 0) = 2.0;
  p0m(1, 1) = 6.5;
  const SymMat p0(p0m);

  const EscapeReport coarse = escape_scan_symplectic(flow, p0, 4.0, 0.1);
  REQUIRE(coarse.verdict == EscapeVerdict::EscapeInBracket);
  REQUIRE(coarse.escape_bracket.has_value());
  REQUIRE(coarse.escape_bracket->first == 2.8);
  REQUIRE(coarse.escape_bracket->second == 2.9);

  const EscapeReport fine = escape_scan_symplectic(flow, p0, 4.0, 0.05);
  REQUIRE(fine.verdict == EscapeVerdict::EscapeInBracket);
  REQUIRE(fine.escape_bracket->first >= coarse.escape_bracket->first);
  REQUIRE(fine.escape_bracket->second <= coarse.escape_bracket->second);
}

TEST_CASE("escape scan spends one invertibility probe per grid node") {
  const LinearSystem sys = ref_system();
  const SymplecticFlow flow(sys);
  const SymMat small(-0.1 * Mat::Identity(2, 2));

  instrument::reset();
  escape_scan_symplectic(flow, small, 4.0, 0.05);
  REQUIRE(instrument::invertibility_checks == 80);
  REQUIRE(instrument::definiteness_checks == 0);
}
