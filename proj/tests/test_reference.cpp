#include <catch2/catch_amalgamated.hpp>

#include "support/test_support.hpp"

#include <cmath>

using namespace riccati;
using namespace riccati::testing;

namespace {

LinearSystem scalar_system(double a, double b, double c) {
  Mat am(1, 1), bm(1, 1), cm(1, 1);
  am << a;
  bm << b;
  cm << c;
  return LinearSystem(am, bm, cm);
}

}  // namespace

TEST_CASE("integrator settings are validated before use") {
  const LinearSystem sys = scalar_system(-1.0, 0.0, 0.0);
  const SymMat p0(Mat::Ones(1, 1));

  IntegratorConfig bad;
  bad.abs_tol = 0.0;
  REQUIRE_THROWS_AS(rk45_dre(sys, p0, std::vector<double>{1.0}, bad),
                    RiccatiError);
  bad = IntegratorConfig{};
  bad.rel_tol = 1.0;
  REQUIRE_THROWS_AS(rk45_dre(sys, p0, std::vector<double>{1.0}, bad),
                    RiccatiError);
  bad = IntegratorConfig{};
  bad.blow_up_threshold = 0.5;
  REQUIRE_THROWS_AS(rk45_dre(sys, p0, std::vector<double>{1.0}, bad),
                    RiccatiError);
}

TEST_CASE("reference integrator reproduces a scalar linear decay") {
  // With b = 0 and c = 0 the equation collapses to dp/dt = 2ap.
  const LinearSystem sys = scalar_system(-1.0, 0.0, 0.0);
  const SymMat p0(3.0 * Mat::Ones(1, 1));
  const std::vector<double> times = {0.0, 0.5, 1.0, 2.0};
  const SolveTrace trace = rk45_dre(sys, p0, times);

  REQUIRE(trace.samples.size() == times.size());
  REQUIRE(trace.samples[0].second.mat()(0, 0) == 3.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double exact = 3.0 * std::exp(-2.0 * times[i]);
    REQUIRE(trace.samples[i].second.mat()(0, 0) ==
            Catch::Approx(exact).epsilon(1e-10));
  }
  REQUIRE_FALSE(trace.truncated_at_escape);
}

TEST_CASE("reference integrator reproduces the scalar tangent solution") {
  // a = 0, b = 1, c = 1 gives dp/dt = p^2 + 1, so p(t) = tan(t) from zero.
  const LinearSystem sys = scalar_system(0.0, 1.0, 1.0);
  const SymMat p0(Mat::Zero(1, 1));
  const SolveTrace trace = rk45_dre(sys, p0, std::vector<double>{0.5, 1.0});

  REQUIRE(trace.samples[0].second.mat()(0, 0) ==
          Catch::Approx(scalar_tan_solution(0.0, 1.0, 0.5)).epsilon(1e-9));
  REQUIRE(trace.samples[1].second.mat()(0, 0) ==
          Catch::Approx(scalar_tan_solution(0.0, 1.0, 1.0)).epsilon(1e-9));
}

TEST_CASE("reference integrator truncates at a finite-time blow-up") {
  const LinearSystem sys = scalar_system(0.0, 1.0, 1.0);
  const SymMat p0(Mat::Zero(1, 1));
  const std::vector<double> times = {1.0, 1.5, 1.57, 2.0, 3.0};
  const SolveTrace trace = rk45_dre(sys, p0, times);

  REQUIRE(trace.truncated_at_escape);
  REQUIRE(trace.samples.size() == 3);
  REQUIRE(trace.samples.back().first == 1.57);
  const double half_pi = 2.0 * std::atan(1.0);
  for (const auto& [t, p] : trace.samples) REQUIRE(t < half_pi);
}

TEST_CASE("step-size underflow truncates instead of overflowing") {
  const LinearSystem sys = scalar_system(0.0, 1.0, 1.0);
  const SymMat p0(Mat::Zero(1, 1));
  IntegratorConfig cfg;
  cfg.blow_up_threshold = 1e300;
  const SolveTrace trace =
      rk45_dre(sys, p0, std::vector<double>{1.0, 2.0}, cfg);
  REQUIRE(trace.truncated_at_escape);
  REQUIRE(trace.samples.size() == 1);
  REQUIRE(std::isfinite(trace.samples[0].second.mat()(0, 0)));
}

TEST_CASE("stationary initial data stays put under the reference integrator") {
  const LinearSystem sys = ref_system();
  const SymMat m0 = solve_are_stabilizing(sys);
  const std::vector<double> times = {0.5, 1.0, 2.0, 4.0};
  const SolveTrace trace = rk45_dre(sys, m0, times);

  for (const auto& [t, p] : trace.samples)
    REQUIRE(max_abs_diff(p.mat(), m0.mat()) < 1e-8);
}

TEST_CASE("horizon wrapper samples a uniform grid") {
  const LinearSystem sys = ref_system();
  const SymMat p0(-0.1 * Mat::Identity(2, 2));
  const SolveTrace trace = rk45_dre(sys, p0, 4.0);
  REQUIRE(trace.samples.size() == 80);
  REQUIRE(trace.samples.back().first == Catch::Approx(4.0));
}

TEST_CASE("block system starts from the lifted basis matrix") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);
  const auto blocks = rk45_q_blocks(sys, basis, std::vector<double>{0.0, 0.5});
  REQUIRE(blocks.size() == 2);
  REQUIRE(blocks[0].first == 0.0);
  REQUIRE(block_diff(blocks[0].second, mu(basis.M, basis)) == 0.0);
}

TEST_CASE("block system agrees with the flow transform along the horizon") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);
  const SymplecticFlow flow(sys);
  const std::vector<double> times = {0.5, 1.0, 2.0};
  const auto blocks = rk45_q_blocks(sys, basis, times);

  for (std::size_t i = 0; i < times.size(); ++i) {
    const BlockSym2n direct = xi(flow.sigma_at(times[i]), basis);
    REQUIRE(block_diff(blocks[i].second, direct) < 1e-6);
  }
}

TEST_CASE("block system drift terms satisfy the propagator identities") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);
  const Mat m = basis.M.mat();
  const auto blocks = rk45_q_blocks(sys, basis, std::vector<double>{1.0});
  const BlockSym2n& q = blocks[0].second;

  // Independent oracle: fixed-step integration of the joint system for the
  // upper-left block, the closed-loop propagator U, and its Gramian G. Then
  // Q12 = -U M and Q22 - M = M G M.
  const Index n = sys.n();
  const auto unpack = [n](const Vec& y, Index off) {
    Mat x(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) x(i, j) = y(off + i * n + j);
    return x;
  };
  const auto pack = [n](const Mat& x, Vec& y, Index off) {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) y(off + i * n + j) = x(i, j);
  };
  const auto rhs = [&](double, const Vec& y) {
    const Mat q11 = unpack(y, 0);
    const Mat u = unpack(y, n * n);
    const Mat g = unpack(y, 2 * n * n);
    (void)g;
    const Mat closed = sys.A() + sys.BBt() * q11;
    Vec dy(3 * n * n);
    pack(sys.A().transpose() * q11 + q11 * sys.A() +
             q11 * sys.BBt() * q11 + sys.CtC(),
         dy, 0);
    pack(closed.transpose() * u, dy, n * n);
    pack(u.transpose() * sys.BBt() * u, dy, 2 * n * n);
    return dy;
  };
  Vec y0 = Vec::Zero(3 * n * n);
  pack(m, y0, 0);
  pack(Mat::Identity(n, n), y0, n * n);
  const Vec y1 = rk4_integrate(rhs, y0, 0.0, 1.0, 2000);
  const Mat u1 = unpack(y1, n * n);
  const Mat g1 = unpack(y1, 2 * n * n);

  REQUIRE(max_abs_diff(q.b12(), Mat(-u1 * m)) < 1e-6);
  REQUIRE(max_abs_diff(Mat(q.b22().mat() - m), Mat(m * g1 * m)) < 1e-6);
}

TEST_CASE("block system lower-right block grows from the basis matrix") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);
  std::vector<double> times;
  for (int k = 1; k <= 8; ++k) times.push_back(0.5 * k);
  const auto blocks = rk45_q_blocks(sys, basis, times);

  Mat prev = basis.M.mat();
  for (const auto& [t, q] : blocks) {
    const auto gap = classify_definiteness(SymMat(q.b22().mat() - prev));
    REQUIRE(gap.min_eig >= -1e-9);
    prev = q.b22().mat();
  }
  const auto pd =
      classify_definiteness(SymMat(blocks[1].second.b22().mat() -
                                   basis.M.mat()));
  REQUIRE(pd.classification == Definiteness::PositiveDefinite);
}

TEST_CASE("upper-left block is pinched between envelope and fixed point") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);
  const SymMat m0 = solve_are_stabilizing(sys);
  const std::vector<double> times = {0.5, 1.0, 2.0};
  const auto blocks = rk45_q_blocks(sys, basis, times);

  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    const Mat tail = expm(sys.A().transpose() * t) * basis.M.mat() *
                     expm(sys.A() * t);
    const Mat envelope =
        simpson(
            [&](double s) {
              const Mat e = expm(sys.A() * s);
              return Mat(e.transpose() * sys.CtC() * e);
            },
            t, 200) +
        tail;
    const Mat q11 = blocks[i].second.b11().mat();
    REQUIRE(classify_definiteness(SymMat(q11 - envelope)).min_eig >= -1e-6);
    REQUIRE(classify_definiteness(SymMat(m0.mat() - q11)).min_eig >= -1e-6);
  }
}

TEST_CASE("ordered initial data produces ordered solutions") {
  const LinearSystem sys = ref_system();
  const SymMat low(-0.1 * Mat::Identity(2, 2));
  const SymMat high = solve_are_stabilizing(sys);

  REQUIRE(monotonicity_check(sys, low, high, 2.0));
  REQUIRE(monotonicity_check(sys, low, low, 2.0));
  REQUIRE_THROWS_AS(monotonicity_check(sys, high, low, 2.0), DomainViolation);

  Rng gen(419);
  for (int trial = 0; trial < 3; ++trial) {
    const LinearSystem rnd = random_stable_system(gen, 2);
    const SymMat base = solve_are_stabilizing(rnd);
    const SymMat lower(base.mat() - random_spd(gen, 2, 1.0, 0.0).mat());
    REQUIRE(monotonicity_check(rnd, lower, base, 1.0));
  }
}
