#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "realnet/selftest.hpp"

using namespace realnet;
using Catch::Matchers::WithinAbs;

namespace {

std::mt19937_64 rng(8128);

Mat random_complex(int r, int c) {
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

Mat random_real(int r, int c) {
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

Mat random_unitary(int n, bool real_only) {
  const Mat g = real_only ? random_real(n, n) : random_complex(n, n);
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ();
}

/// Random +-1 observable: conjugate a random sign diagonal by a random
/// (real or complex) unitary.
Mat random_involution(int n, bool real_only) {
  const Mat q = random_unitary(n, real_only);
  RVec s(n);
  for (int i = 0; i < n; ++i) s(i) = (rng() & 1) ? 1.0 : -1.0;
  return q * s.cast<cplx>().asDiagonal() * q.adjoint();
}

Mat random_hermitian(int n) {
  const Mat a = random_complex(n, n);
  return 0.5 * (a + a.adjoint());
}

CVec random_ket(int n) {
  CVec v = random_complex(n, 1);
  return v / v.norm();
}

DenseMatrix real_state(int n, std::vector<int> dims) {
  const Mat a = random_real(n, n);
  Mat p = a * a.adjoint();
  p /= p.trace().real();
  return DenseMatrix(std::move(p), std::move(dims));
}

/// All-real strategy on the swap network: real sources, real +-1 local
/// observables, a real rank-1 projective middle measurement.
Strategy random_real_strategy() {
  Strategy s;
  s.state_ab1 = real_state(4, {2, 2});
  s.state_b2c = real_state(4, {2, 2});
  for (int x = 0; x < 3; ++x)
    s.alice[x] = DenseMatrix(random_involution(2, true), {2});
  for (int z = 0; z < 6; ++z)
    s.charlie[z] = DenseMatrix(random_involution(2, true), {2});
  const Mat q = random_unitary(4, true);
  for (int b = 0; b < 4; ++b) {
    const CVec col = q.col(b);
    s.bob[b] = DenseMatrix(Mat(col * col.adjoint()), {2, 2});
  }
  return s;
}

std::array<Mat, 3> ideal_alice() {
  return {pauli_z().m, pauli_x().m, pauli_y().m};
}

double expectation(const Mat& op, const CVec& psi) {
  return (psi.adjoint() * op * psi)(0).real();
}

}  // namespace

TEST_CASE("regularize snaps Hermitian operators to involutions") {
  SECTION("diagonal example: zero eigenvalues map to +1") {
    Mat d = Mat::Zero(3, 3);
    d(0, 0) = 2.0;
    d(1, 1) = -3.0;
    d(2, 2) = 0.0;
    const Mat r = regularize(d);
    REQUIRE_THAT(r(0, 0).real(), WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(r(1, 1).real(), WithinAbs(-1.0, 1e-12));
    REQUIRE_THAT(r(2, 2).real(), WithinAbs(1.0, 1e-12));
    REQUIRE(r.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);  // stays diagonal
  }

  SECTION("near-zero eigenvalues inside the tolerance also map to +1") {
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = -1e-12;
    d(1, 1) = 5.0;
    const Mat r = regularize(d);
    REQUIRE_THAT(r(0, 0).real(), WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(r(1, 1).real(), WithinAbs(1.0, 1e-12));
  }

  SECTION("involutions are fixed points") {
    const Mat z = pauli_z().m;
    REQUIRE((regularize(z) - z).cwiseAbs().maxCoeff() < 1e-12);
    const Mat h = (pauli_z().m + pauli_x().m) / kSqrt2;
    REQUIRE((regularize(h) - h).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("random Hermitian inputs: square is I, input commutes") {
    for (int trial = 0; trial < 40; ++trial) {
      const int n = 2 + static_cast<int>(rng() % 15);  // dims 2..16
      const Mat o = random_hermitian(n);
      const Mat r = regularize(o);
      REQUIRE((r * r - Mat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
      REQUIRE((r - r.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
      // eigenvectors preserved <=> commutes with the input
      REQUIRE((r * o - o * r).cwiseAbs().maxCoeff() < 1e-8);
    }
  }

  SECTION("non-Hermitian input is rejected") {
    REQUIRE_THROWS_AS(regularize(random_complex(3, 3)), std::invalid_argument);
    const DenseMatrix bad(random_complex(2, 2), {2});
    REQUIRE_THROWS_AS(regularize(bad), std::invalid_argument);
  }
}

TEST_CASE("charlie surrogates and the circuit isometry") {
  const Strategy ideal = ideal_strategy();

  SECTION("ideal strategy: surrogates collapse to exact Z, X, Y") {
    const auto hat = charlie_zxy_hat(detail::obs6(ideal.charlie));
    REQUIRE((hat[0] - pauli_z().m).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((hat[1] - pauli_x().m).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((hat[2] - pauli_y().m).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("W is an isometry for random involution inputs") {
    for (int trial = 0; trial < 6; ++trial) {
      const int da = 2 + 2 * static_cast<int>(rng() % 2);  // 2 or 4
      const int dc = 2 + 2 * static_cast<int>(rng() % 2);
      const bool real_only = trial % 2 == 0;
      std::array<Mat, 3> alice, chat;
      for (auto& o : alice) o = random_involution(da, real_only);
      for (auto& o : chat) o = random_involution(dc, real_only);
      const Mat w = swap_isometry_matrix(alice, chat);
      REQUIRE(w.rows() == da * dc * 16);
      REQUIRE(w.cols() == da * dc);
      REQUIRE((w.adjoint() * w - Mat::Identity(da * dc, da * dc))
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
    }
  }

  SECTION("norm preservation through the six-observable entry point") {
    for (int trial = 0; trial < 5; ++trial) {
      std::array<Mat, 6> charlie;
      for (auto& o : charlie) o = random_involution(2, false);
      const Ket psi(random_ket(4), {2, 2});
      const Ket out = swap_isometry(ideal_alice(), charlie, psi);
      REQUIRE(out.dims == std::vector<int>{2, 2, 2, 2, 2, 2});
      REQUIRE_THAT(out.norm(), WithinAbs(psi.norm(), 1e-10));
    }
  }

  SECTION("non-involutions are rejected") {
    std::array<Mat, 3> alice = ideal_alice();
    std::array<Mat, 3> chat = ideal_alice();
    alice[1] *= 0.9;
    REQUIRE_THROWS_AS(swap_isometry_matrix(alice, chat),
                      std::invalid_argument);
    auto charlie = detail::obs6(ideal.charlie);
    charlie[3] += 0.3 * Mat::Identity(2, 2);
    REQUIRE_THROWS_AS(charlie_zxy_hat(charlie), std::invalid_argument);
  }
}

TEST_CASE("conditional states of the swap") {
  const Strategy ideal = ideal_strategy();
  const auto conds = conditional_states(ideal);
  const auto bell = bell_basis();

  SECTION("ideal: omega_b = |bell_b><bell_b| / 4") {
    Mat total = Mat::Zero(4, 4);
    for (int b = 0; b < 4; ++b) {
      REQUIRE(conds[b].dims == std::vector<int>{2, 2});
      REQUIRE_THAT(conds[b].m.trace().real(), WithinAbs(0.25, 1e-12));
      const Mat want = 0.25 * projector(bell[b]).m;
      REQUIRE((conds[b].m - want).cwiseAbs().maxCoeff() < 1e-12);
      total += conds[b].m;
    }
    // outcomes sum back to the reduced source state I/2 (x) I/2
    REQUIRE((total - Mat::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("missing tensor structure is rejected") {
    Strategy broken = ideal;
    broken.state_ab1.dims.clear();
    REQUIRE_THROWS_AS(conditional_states(broken), std::invalid_argument);
  }
}

TEST_CASE("reference targets") {
  SECTION("junk state equals the +-i product mixture") {
    const Ket kp = ket_plus_i(), km = ket_minus_i();
    const Mat alt = 0.5 * (projector(tensor(kp, kp)).m +
                           projector(tensor(km, km)).m);
    REQUIRE((perfect_junk().m - alt).cwiseAbs().maxCoeff() < 1e-14);
  }

  SECTION("per-outcome targets factor as bell pair times junk") {
    Mat sum = Mat::Zero(16, 16);
    for (int b = 0; b < 4; ++b) {
      const DenseMatrix tg = perfect_state(b);
      REQUIRE(tg.dims == std::vector<int>{2, 2, 2, 2});
      REQUIRE_THAT(tg.m.trace().real(), WithinAbs(1.0, 1e-12));
      REQUIRE(is_psd(tg, 1e-12));
      const DenseMatrix front = partial_trace(tg, {0, 1});
      const DenseMatrix back = partial_trace(tg, {2, 3});
      REQUIRE((front.m - projector(bell_basis()[b]).m).cwiseAbs().maxCoeff() <
              1e-12);
      REQUIRE((back.m - perfect_junk().m).cwiseAbs().maxCoeff() < 1e-12);
      sum += 0.25 * tg.m;
    }
    REQUIRE((sum - suma_state().m).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE_THROWS_AS(perfect_state(4), std::invalid_argument);
  }

  SECTION("trace distance oracles") {
    const DenseMatrix p0 = projector(basis_ket(2, 0));
    const DenseMatrix p1 = projector(basis_ket(2, 1));
    REQUIRE_THAT(trace_distance(p0, p0), WithinAbs(0.0, 1e-15));
    REQUIRE_THAT(trace_distance(p0, p1), WithinAbs(1.0, 1e-12));
    CVec plus(2);
    plus << 1.0 / kSqrt2, 1.0 / kSqrt2;
    const DenseMatrix pp = projector(Ket(plus, {2}));
    // pure states: distance sqrt(1 - |<a|b>|^2) = 1/sqrt2
    REQUIRE_THAT(trace_distance(p0, pp), WithinAbs(1.0 / kSqrt2, 1e-12));
  }
}

TEST_CASE("ideal complex extraction leaves the pure junk branch") {
  const IsometryOutput out = extract_network(ideal_strategy());
  const Ket kp = ket_plus_i();
  const Mat pure_junk = projector(tensor(kp, kp)).m;

  Mat weighted = Mat::Zero(16, 16);
  for (int b = 0; b < 4; ++b) {
    REQUIRE_THAT(out.weights[b], WithinAbs(0.25, 1e-10));
    REQUIRE(out.per_b_state[b].dims == std::vector<int>{2, 2, 2, 2});
    REQUIRE_THAT(out.per_b_state[b].m.trace().real(), WithinAbs(1.0, 1e-10));
    REQUIRE(is_psd(out.per_b_state[b], 1e-9));
    // exact closed form: |b><b| (x) |ii><ii| -- the junk branch is PURE
    const Mat want =
        tensor(projector(bell_basis()[b]), DenseMatrix(pure_junk, {2, 2})).m;
    REQUIRE((out.per_b_state[b].m - want).cwiseAbs().maxCoeff() < 1e-10);
    // ... and therefore sits at trace distance exactly 1/2 from the target
    REQUIRE_THAT(trace_distance(out.per_b_state[b], perfect_state(b)),
                 WithinAbs(0.5, 1e-9));
    weighted += out.weights[b] * out.per_b_state[b].m;
  }
  REQUIRE((out.summed_state.m - weighted).cwiseAbs().maxCoeff() < 1e-10);
  const Mat summed_want =
      tensor(DenseMatrix(Mat(Mat::Identity(4, 4) / 4.0), {2, 2}),
             DenseMatrix(pure_junk, {2, 2}))
          .m;
  REQUIRE((out.summed_state.m - summed_want).cwiseAbs().maxCoeff() < 1e-10);
  REQUIRE_THAT(trace_distance(out.summed_state, suma_state()),
               WithinAbs(0.5, 1e-9));
}

TEST_CASE("embedded real ideal extraction hits the targets exactly") {
  const Strategy ideal = ideal_strategy();
  const auto conds = conditional_states(ideal);

  std::array<Mat, 3> al_e;
  std::array<Mat, 6> ch_e;
  for (int x = 0; x < 3; ++x) al_e[x] = embed_observable(ideal.alice[x].m);
  for (int z = 0; z < 6; ++z) ch_e[z] = embed_observable(ideal.charlie[z].m);
  std::array<DenseMatrix, 4> conds_e;
  for (int b = 0; b < 4; ++b) {
    const DenseMatrix e = embed_ac_state(conds[b]);
    REQUIRE(e.dims == std::vector<int>{2, 2, 2, 2});
    REQUIRE(is_real(e, 1e-12));
    REQUIRE(is_psd(e, 1e-12));
    REQUIRE_THAT(e.m.trace().real(), WithinAbs(0.25, 1e-12));  // weight kept
    conds_e[b] = DenseMatrix(e.m, {4, 4});
  }

  SECTION("embedded observables stay real involutions") {
    for (const Mat& o : al_e) {
      REQUIRE(o.imag().cwiseAbs().maxCoeff() < 1e-14);
      REQUIRE((o * o - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  SECTION("embedded strategy still attains 6 sqrt2 on every branch") {
    for (int b = 0; b < 4; ++b) {
      const Mat that = t_hat_b(b, al_e, ch_e);
      const double val =
          (conds_e[b].m * that).trace().real() / conds_e[b].m.trace().real();
      REQUIRE_THAT(val, WithinAbs(kSixSqrt2, 1e-9));
    }
  }

  SECTION("extraction lands on the perfect targets") {
    const IsometryOutput out = extract_network(al_e, ch_e, conds_e);
    for (int b = 0; b < 4; ++b) {
      REQUIRE_THAT(out.weights[b], WithinAbs(0.25, 1e-10));
      REQUIRE(trace_distance(out.per_b_state[b], perfect_state(b)) < 1e-9);
    }
    REQUIRE(trace_distance(out.summed_state, suma_state()) < 1e-9);
  }
}

TEST_CASE("sum-of-squares certificates") {
  const Strategy ideal = ideal_strategy();

  SECTION("ideal operators reproduce the maximum at operator level") {
    const auto alice = ideal_alice();
    const auto charlie = detail::obs6(ideal.charlie);
    for (int b = 0; b < 4; ++b) {
      const Mat that = t_hat_b(b, alice, charlie);
      const CVec psi = bell_basis()[b].v;
      REQUIRE_THAT(expectation(that, psi), WithinAbs(kSixSqrt2, 1e-12));
    }
  }

  SECTION("both identities hold for random involutions") {
    for (int trial = 0; trial < 20; ++trial) {
      const int da = 2 + static_cast<int>(rng() % 3);  // 2..4
      const int dc = 2 + static_cast<int>(rng() % 4);  // 2..5
      const bool real_only = trial % 2 == 0;
      std::array<Mat, 3> alice;
      std::array<Mat, 6> charlie;
      for (auto& o : alice) o = random_involution(da, real_only);
      for (auto& o : charlie) o = random_involution(dc, real_only);
      const int b = static_cast<int>(rng() % 4);
      const SosReport rep = verify_sos(b, alice, charlie);
      REQUIRE(rep.residual_first < 1e-9);
      REQUIRE(rep.residual_second < 1e-9);
    }
  }

  SECTION("commuting diagonal observables satisfy the identity too") {
    std::array<Mat, 3> alice;
    std::array<Mat, 6> charlie;
    for (auto& o : alice) {
      RVec s(3);
      for (int i = 0; i < 3; ++i) s(i) = (rng() & 1) ? 1.0 : -1.0;
      o = s.cast<cplx>().asDiagonal();
    }
    for (auto& o : charlie) {
      RVec s(3);
      for (int i = 0; i < 3; ++i) s(i) = (rng() & 1) ? 1.0 : -1.0;
      o = s.cast<cplx>().asDiagonal();
    }
    for (int b = 0; b < 4; ++b) {
      const SosReport rep = verify_sos(b, alice, charlie);
      REQUIRE(rep.residual_first < 1e-9);
      REQUIRE(rep.residual_second < 1e-9);
    }
  }

  SECTION("each square annihilates the ideal conditional state") {
    const auto alice = ideal_alice();
    const auto charlie = detail::obs6(ideal.charlie);
    for (int b = 0; b < 4; ++b) {
      const CVec psi = bell_basis()[b].v;
      for (const Mat& t : sos_terms_first(b, alice, charlie))
        REQUIRE((t * psi).norm() < 1e-9);
      for (const Mat& t : sos_terms_second(b, alice, charlie))
        REQUIRE((t * psi).norm() < 1e-9);
    }
  }

  SECTION("non-involutions are rejected") {
    auto alice = ideal_alice();
    auto charlie = detail::obs6(ideal.charlie);
    alice[0] *= 1.1;
    REQUIRE_THROWS_AS(verify_sos(0, alice, charlie), std::invalid_argument);
  }
}

TEST_CASE("operator relations on the ideal conditional states") {
  const Strategy ideal = ideal_strategy();
  const auto alice = ideal_alice();
  const auto hat = charlie_zxy_hat(detail::obs6(ideal.charlie));
  for (int b = 0; b < 4; ++b) {
    const Ket psi(bell_basis()[b].v, {2, 2});
    const IdentityResiduals r = identity_residuals(b, alice, hat, psi);
    for (double v : r.anticommutator) REQUIRE(v < 1e-9);
    for (double v : r.charlie_match) REQUIRE(v < 1e-9);
    REQUIRE(r.za_expectation < 1e-12);
  }
}

TEST_CASE("epsilon budget and the critical noise level") {
  SECTION("zero deficit gives a zero budget") {
    const EpsilonBudget b = epsilon_budget(0.0);
    REQUIRE_THAT(b.epsilon1, WithinAbs(0.0, 1e-15));
    REQUIRE_THAT(b.epsilon2, WithinAbs(0.0, 1e-15));
    REQUIRE_THAT(b.eps1_bound + b.eps2_bound, WithinAbs(0.0, 1e-15));
  }

  SECTION("fields are consistent and the total is strictly increasing") {
    double prev = -1.0;
    for (int k = 0; k <= 100; ++k) {
      const double eps = 1e-3 * k / 100.0;
      const EpsilonBudget b = epsilon_budget(eps);
      REQUIRE_THAT(b.epsilon1, WithinAbs(std::sqrt(kSqrt2 * eps), 1e-15));
      REQUIRE_THAT(b.epsilon2,
                   WithinAbs(kIsometryDefectConstant * b.epsilon1, 1e-12));
      REQUIRE(b.eps1_bound >= 0.0);
      REQUIRE(b.eps2_bound >= 0.0);
      REQUIRE(b.total() > prev);
      prev = b.total();
    }
    REQUIRE_THROWS_AS(epsilon_budget(-1e-6), std::invalid_argument);
  }

  SECTION("critical epsilon matches the frozen value") {
    const double ec = critical_epsilon();
    REQUIRE_THAT(ec, WithinAbs(7.18070625080145e-05, 1e-13));
    // 2% window around the published rounding
    REQUIRE_THAT(ec, WithinAbs(7.18e-05, 0.02 * 7.18e-05));
    // the budget crosses 1 exactly there
    REQUIRE(epsilon_budget(ec).total() <= 1.0);
    REQUIRE(epsilon_budget(ec * 1.001).total() > 1.0);
  }
}

TEST_CASE("approximate extraction checks") {
  const Strategy ideal = ideal_strategy();

  SECTION("ideal strategy: all distances vanish") {
    const auto checks = approximate_extraction_check(ideal, 0.0);
    REQUIRE(checks.size() == 4);
    for (const ExtractionCheck& c : checks) {
      REQUIRE_THAT(c.weight, WithinAbs(0.25, 1e-10));
      REQUIRE(std::abs(c.realized_epsilon) < 1e-9);
      REQUIRE(c.distance < 1e-9);
      REQUIRE(c.norm_error < 1e-9);
      REQUIRE(c.za_expectation < 1e-9);
      nlohmann::json j = c;
      REQUIRE(j["pass"].get<bool>());
    }
  }

  SECTION("supplied epsilon must match the realized deficit") {
    REQUIRE_THROWS_AS(approximate_extraction_check(ideal, 1e-3),
                      std::invalid_argument);
  }

  SECTION("rotated-observable family stays within the bounds") {
    std::uniform_real_distribution<double> logth(-4.0, -2.5);
    const std::array<Mat, 3> axes = ideal_alice();
    for (int trial = 0; trial < 6; ++trial) {
      const double th = std::pow(10.0, logth(rng));
      const int k = static_cast<int>(rng() % 6);
      const Mat axis = axes[rng() % 3];
      const Mat r = std::cos(th) * Mat::Identity(2, 2) -
                    cplx(0.0, 1.0) * std::sin(th) * axis;
      Strategy s = ideal;
      s.charlie[k] = DenseMatrix(Mat(r * s.charlie[k].m * r.adjoint()), {2});

      const auto deficits = realized_deficits(s);
      double eps = 0.0;
      for (double d : deficits) eps = std::max(eps, d);
      REQUIRE(eps > 1e-9);  // the rotation is actually felt

      const auto checks = approximate_extraction_check(s, eps);
      for (const ExtractionCheck& c : checks) {
        REQUIRE(c.realized_epsilon > -1e-12);
        REQUIRE(c.distance <= c.distance_bound + 1e-12);
        REQUIRE(c.norm_error <= c.norm_bound + 1e-12);
        REQUIRE(c.za_expectation <= c.za_bound + 1e-12);
      }
    }
  }

  SECTION("deterministic example: 1e-3 rotation on the first observable") {
    const Mat axis = pauli_y().m;
    const double th = 1e-3;
    const Mat r = std::cos(th) * Mat::Identity(2, 2) -
                  cplx(0.0, 1.0) * std::sin(th) * axis;
    Strategy s = ideal;
    s.charlie[0] = DenseMatrix(Mat(r * s.charlie[0].m * r.adjoint()), {2});
    const auto deficits = realized_deficits(s);
    double eps = 0.0;
    for (double d : deficits) eps = std::max(eps, d);
    const auto checks = approximate_extraction_check(s, eps);
    const double bound = kIsometryDefectConstant * std::sqrt(kSqrt2 * eps);
    for (const ExtractionCheck& c : checks) {
      REQUIRE(c.distance <= bound + 1e-12);
      REQUIRE(c.distance > 0.0);  // the defect is visible, just bounded
    }
  }
}

TEST_CASE("distance to the partial-transpose-invariant set") {
  SECTION("the averaged target sits at distance 1") {
    REQUIRE_THAT(ppt_set_distance(suma_state()), WithinAbs(1.0, 1e-6));
  }

  SECTION("the maximally mixed state is a member") {
    const DenseMatrix mixed(Mat(Mat::Identity(16, 16) / 16.0), {2, 2, 2, 2});
    REQUIRE(ppt_set_distance(mixed) < 1e-7);
  }

  SECTION("real product states across the party split are members") {
    const DenseMatrix ra = real_state(4, {2, 2});   // (A', A'')
    const DenseMatrix rc = real_state(4, {2, 2});   // (C', C'')
    // (A',A'',C',C'') -> reporting order (A',C',A'',C'')
    const DenseMatrix big = permute_systems(tensor(ra, rc), {0, 2, 1, 3});
    REQUIRE(ppt_set_distance(big) < 1e-8);
  }

  SECTION("the complex ideal's summed output sits at distance 1") {
    const IsometryOutput out = extract_network(ideal_strategy());
    REQUIRE_THAT(ppt_set_distance(out.summed_state), WithinAbs(1.0, 1e-6));
  }

  SECTION("any all-real strategy extracts a PT-invariant summed state") {
    const Strategy s = random_real_strategy();
    const IsometryOutput out = extract_network(s);
    REQUIRE(ppt_set_distance(out.summed_state) < 1e-8);
  }

  SECTION("two-qubit cross-check against the solver suite's frozen toy") {
    const DenseMatrix phip = projector(bell_basis()[0]);
    REQUIRE_THAT(ppt_set_distance(phip, {0}), WithinAbs(1.0, 1e-6));
  }

  SECTION("invalid inputs are rejected") {
    const DenseMatrix ok(Mat(Mat::Identity(16, 16) / 16.0), {2, 2, 2, 2});
    REQUIRE_THROWS_AS(ppt_set_distance(ok, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(ppt_set_distance(ok, {7}), std::invalid_argument);
    const DenseMatrix skewed(random_complex(16, 16), {2, 2, 2, 2});
    REQUIRE_THROWS_AS(ppt_set_distance(skewed), std::invalid_argument);
    const DenseMatrix wrong_trace(Mat(Mat::Identity(16, 16)), {2, 2, 2, 2});
    REQUIRE_THROWS_AS(ppt_set_distance(wrong_trace), std::invalid_argument);
  }
}
