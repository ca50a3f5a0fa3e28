#include <catch2/catch_amalgamated.hpp>

#include "support/test_support.hpp"

#include <cmath>

using namespace riccati;
using namespace riccati::testing;

namespace {

BasisMatrix scalar_basis(double m) {
  Mat mm(1, 1);
  mm << m;
  return make_basis(SymMat(mm), std::nullopt);
}

BasisMatrix plain_basis(const SymMat& m) { return make_basis(m, std::nullopt); }

}  // namespace

TEST_CASE("lift embeds a matrix between fixed off-diagonal blocks") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);

  const BlockSym2n q0 = mu(basis.M, basis);
  REQUIRE(max_abs_diff(q0.b11().mat(), basis.M.mat()) == 0.0);
  REQUIRE(max_abs_diff(q0.b12(), Mat(-basis.M.mat())) == 0.0);
  REQUIRE(max_abs_diff(q0.b22().mat(), basis.M.mat()) == 0.0);

  Mat p(1, 1);
  p << 2.0;
  const BlockSym2n scalar = mu(SymMat(p), scalar_basis(-1.0));
  Mat expected(2, 2);
  expected << 2.0, 1.0, 1.0, -1.0;
  REQUIRE(max_abs_diff(scalar.assemble(), expected) == 0.0);
}

TEST_CASE("half-space involution matches scalar closed form") {
  const BasisMatrix basis = scalar_basis(-1.0);
  Mat p(1, 1);
  p << 0.0;
  REQUIRE(std::abs(upsilon(SymMat(p), basis).mat()(0, 0)) < 1e-14);
  REQUIRE(std::abs(upsilon_inv(SymMat(p), basis).mat()(0, 0)) < 1e-14);
}

TEST_CASE("half-space involutions invert each other inside their domains") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);

  const SymMat p(basis.M.mat() + Mat::Identity(2, 2));
  const SymMat round = upsilon_inv(upsilon(p, basis), basis);
  REQUIRE(max_abs_diff(round.mat(), p.mat()) < 1e-10);

  Rng gen(307);
  for (int trial = 0; trial < 10; ++trial) {
    const SymMat m(-random_spd(gen, 3, 1.0, 1.0).mat());
    const BasisMatrix b = plain_basis(m);
    const SymMat in_domain(m.mat() + random_spd(gen, 3, 1.0, 1.0).mat());
    const SymMat back = upsilon_inv(upsilon(in_domain, b), b);
    REQUIRE(rel_diff(back.mat(), in_domain.mat()) < 1e-9);
  }
}

TEST_CASE("half-space involution saturates at the negated basis matrix") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);
  const SymMat far(basis.M.mat() + 1e6 * Mat::Identity(2, 2));
  REQUIRE(max_abs_diff(upsilon(far, basis).mat(), Mat(-basis.M.mat())) < 1e-4);
}

TEST_CASE("half-space involutions reject boundary input") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);
  REQUIRE_THROWS_AS(upsilon(basis.M, basis), DomainViolation);
  REQUIRE_THROWS_AS(upsilon_inv(SymMat(-basis.M.mat()), basis), DomainViolation);
}

TEST_CASE("flow-to-block transform fixes the identity flow") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);
  const BlockSym2n q = xi(Mat::Identity(4, 4), basis);
  const BlockSym2n q0 = mu(basis.M, basis);
  REQUIRE(block_diff(q, q0) < 1e-14);
}

TEST_CASE("flow-to-block transform inverts exactly on the identity image") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);
  const Mat sigma = xi_inv(mu(basis.M, basis), basis);
  REQUIRE(max_abs_diff(sigma, Mat::Identity(4, 4)) < 1e-12);
}

TEST_CASE("flow-to-block transform round-trips on a propagated flow") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);
  const SymplecticFlow flow(sys);
  const Mat sigma = flow.sigma_at(1.0);

  const BlockSym2n q = xi(sigma, basis);
  const Mat back = xi_inv(q, basis);
  REQUIRE(rel_diff(back, sigma) < 1e-9);

  const BlockSym2n q_again = xi(back, basis);
  REQUIRE(block_diff(q_again, q) < 1e-9);
}

TEST_CASE("flow-to-block transform agrees with the block differential system") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);
  const SymplecticFlow flow(sys);

  const auto blocks = rk45_q_blocks(sys, basis, std::vector<double>{1.0});
  REQUIRE(blocks.size() == 1);
  const Mat sigma = xi_inv(blocks[0].second, basis);
  REQUIRE(rel_diff(sigma, flow.sigma_at(1.0)) < 1e-6);
}

TEST_CASE("flow-to-block transform rejects out-of-domain flows") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);

  Mat degenerate = Mat::Identity(4, 4);
  degenerate(0, 0) = 0.0;
  degenerate(1, 1) = 0.0;
  REQUIRE_THROWS_AS(xi(degenerate, basis), DomainViolation);

  Rng gen(311);
  const Mat arbitrary = random_mat(gen, 4, 4, 2.0) + 3.0 * Mat::Identity(4, 4);
  REQUIRE_THROWS_AS(xi(arbitrary, basis), SymmetryViolation);
}

TEST_CASE("kernel extraction matches a scalar hand computation") {
  const BasisMatrix basis = scalar_basis(-1.0);
  BlockSym2n lam(SymMat(Mat::Zero(1, 1)), Mat::Ones(1, 1),
                 SymMat(-3.0 * Mat::Ones(1, 1)));
  const BlockSym2n q = pi(lam, basis);
  REQUIRE(q.b11().mat()(0, 0) == Catch::Approx(0.25));
  REQUIRE(q.b12()(0, 0) == Catch::Approx(0.25));
  REQUIRE(q.b22().mat()(0, 0) == Catch::Approx(-0.75));
}

TEST_CASE("kernel extraction and its inverse cancel in both orders") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);
  const SymplecticFlow flow(sys);

  const BlockSym2n q = xi(flow.sigma_at(0.05), basis);
  const BlockSym2n lam = pi_inv(q, basis);
  REQUIRE(block_diff(pi(lam, basis), q) < 1e-10);

  const BlockSym2n lam_back = pi_inv(pi(lam, basis), basis);
  REQUIRE(block_diff(lam_back, lam) < 1e-10);

  Rng gen(313);
  for (int trial = 0; trial < 10; ++trial) {
    const SymMat m(-random_spd(gen, 2, 1.0, 1.0).mat());
    const BasisMatrix b = plain_basis(m);
    const BlockSym2n rand_lam(
        random_sym(gen, 2), random_mat(gen, 2, 2),
        SymMat(-m.mat() - random_spd(gen, 2, 1.0, 1.0).mat()));
    const BlockSym2n round = pi_inv(pi(rand_lam, b), b);
    REQUIRE(block_diff(round, rand_lam) < 1e-8);
  }
}

TEST_CASE("kernel extraction rejects boundary input") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);

  const BlockSym2n at_boundary(basis.M, Mat::Identity(2, 2),
                               SymMat(-basis.M.mat()));
  REQUIRE_THROWS_AS(pi(at_boundary, basis), DomainViolation);
  REQUIRE_THROWS_AS(pi_inv(mu(basis.M, basis), basis), DomainViolation);
}

TEST_CASE("kernel at the grid step reproduces the published matrix") {
  const LinearSystem sys = ref_system();
  const BasisMatrix basis = ref_basis(sys);
  const SymplecticFlow flow(sys);

  const BlockSym2n lam = pi_inv(xi(flow.sigma_at(0.05), basis), basis);
  REQUIRE(max_abs_diff(lam.assemble(), published_lambda_delta()) < 5e-2);
}
