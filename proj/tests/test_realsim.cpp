#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "realnet/bellfunc.hpp"
#include "realnet/netsim.hpp"
#include "realnet/realsim.hpp"

using namespace realnet;
using Catch::Matchers::WithinAbs;

namespace {

std::mt19937_64 rng(31415);

Mat random_complex(int r, int c) {
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

DenseMatrix random_state(int n, std::vector<int> dims) {
  Mat a = random_complex(n, n);
  Mat p = a * a.adjoint();
  p /= p.trace().real();
  return DenseMatrix(std::move(p), std::move(dims));
}

// complete POVM with `k` outcomes: G_r PSD, E_r = S^{-1/2} G_r S^{-1/2}
std::vector<DenseMatrix> random_povm(int n, int k, std::vector<int> dims) {
  std::vector<Mat> gs;
  Mat s = Mat::Zero(n, n);
  for (int r = 0; r < k; ++r) {
    Mat a = random_complex(n, n);
    gs.push_back(Mat(a * a.adjoint()));
    s += gs.back();
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  Mat isqrt = es.operatorInverseSqrt();
  std::vector<DenseMatrix> povm;
  for (const Mat& g : gs) povm.emplace_back(Mat(isqrt * g * isqrt), dims);
  return povm;
}

double direct_prob(const DenseMatrix& rho, const DenseMatrix& effect) {
  return (rho.m * effect.m).trace().real();
}

}  // namespace

TEST_CASE("single-system embedding") {
  SECTION("real state embeds as rho (x) I/2") {
    Mat re = random_complex(3, 3);
    Mat sym = re.real().cast<cplx>();
    sym = (sym * sym.adjoint()).eval();
    sym /= sym.trace().real();
    const DenseMatrix rho(sym, {3});
    const EmbeddedSystem e = embed_single(rho, {});
    const Mat want = tensor(rho, DenseMatrix(Mat(Mat::Identity(2, 2) / 2.0), {2})).m;
    REQUIRE((e.state.m - want).cwiseAbs().maxCoeff() < 1e-14);
  }

  SECTION("|+i> state: both closed forms agree entry-wise") {
    const DenseMatrix rho = projector(ket_plus_i());
    const EmbeddedSystem e = embed_single(rho, {});
    REQUIRE(e.embedded_dims == std::vector<int>{4});
    // form 1: Re(rho) (x) I/2 + Im(rho) (x) (1/2)[[0,1],[-1,0]]
    Mat j(2, 2);
    j << 0, 1, -1, 0;
    Mat form1 = Mat::Zero(4, 4);
    const Mat re = rho.m.real().cast<cplx>(), im = rho.m.imag().cast<cplx>();
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        form1.block(2 * r, 2 * c, 2, 2) =
            0.5 * re(r, c) * Mat::Identity(2, 2) + 0.5 * im(r, c) * j;
    // form 2: (rho (x) P+i + rho* (x) P-i)/2
    const Mat form2 = 0.5 * (tensor(rho, projector(ket_plus_i())).m +
                             tensor(conjugate(rho), projector(ket_minus_i())).m);
    REQUIRE((e.state.m - form1).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((e.state.m - form2).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE(is_real(e.state, 1e-12));
    REQUIRE(is_psd(e.state, 1e-12));
    REQUIRE_THAT(e.state.m.trace().real(), WithinAbs(1.0, 1e-12));
  }

  SECTION("probabilities preserved for 100 random instances") {
    for (int trial = 0; trial < 100; ++trial) {
      const int d = 2 + static_cast<int>(rng() % 3);
      const DenseMatrix rho = random_state(d, {d});
      const auto povm = random_povm(d, 3, {d});
      const EmbeddedSystem e = embed_single(rho, {povm});
      REQUIRE(is_real(e.state, 1e-12));
      Mat sum = Mat::Zero(2 * d, 2 * d);
      for (std::size_t r = 0; r < povm.size(); ++r) {
        const DenseMatrix& mapped = e.effects[0][0][r];
        REQUIRE(is_real(mapped, 1e-12));
        REQUIRE(is_psd(mapped, 1e-9));
        REQUIRE_THAT(direct_prob(e.state, mapped),
                     WithinAbs(direct_prob(rho, povm[r]), 1e-12));
        sum += mapped.m;
      }
      REQUIRE((sum - Mat::Identity(2 * d, 2 * d)).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  SECTION("invalid inputs rejected") {
    Mat notpsd(2, 2);
    notpsd << 1.5, 0, 0, -0.5;
    REQUIRE_THROWS_AS(embed_single(DenseMatrix(notpsd, {2}), {}),
                      std::invalid_argument);
    const DenseMatrix rho = random_state(2, {2});
    // incomplete POVM
    std::vector<DenseMatrix> bad{DenseMatrix(Mat(0.5 * Mat::Identity(2, 2)), {2})};
    REQUIRE_THROWS_AS(embed_single(rho, {bad}), std::invalid_argument);
  }
}

TEST_CASE("bipartite embedding") {
  SECTION("probabilities preserved for 50 random instances") {
    for (int trial = 0; trial < 50; ++trial) {
      const DenseMatrix rho = random_state(4, {2, 2});
      const auto pa = random_povm(2, 2, {2});
      const auto pb = random_povm(2, 3, {2});
      const EmbeddedSystem e = embed_bipartite(rho, {pa}, {pb});
      REQUIRE(is_real(e.state, 1e-12));
      REQUIRE(is_psd(e.state, 1e-9));
      REQUIRE(e.embedded_dims == std::vector<int>{4, 4});
      for (std::size_t a = 0; a < pa.size(); ++a)
        for (std::size_t b = 0; b < pb.size(); ++b) {
          const DenseMatrix joint = tensor(e.effects[0][0][a], e.effects[1][0][b]);
          const DenseMatrix orig = tensor(pa[a], pb[b]);
          REQUIRE_THAT(direct_prob(e.state, joint),
                       WithinAbs(direct_prob(rho, orig), 1e-12));
        }
    }
  }

  SECTION("real bipartite state embeds with identical correlators") {
    // classical correlated state, diagonal projective measurements
    Mat rho = Mat::Zero(4, 4);
    rho(0, 0) = 0.5;
    rho(3, 3) = 0.5;
    const DenseMatrix state(rho, {2, 2});
    std::vector<DenseMatrix> za{projector(basis_ket(2, 0)), projector(basis_ket(2, 1))};
    const EmbeddedSystem e = embed_bipartite(state, {za}, {za});
    double corr = 0, corr_orig = 0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const double sign = (a == b) ? 1.0 : -1.0;
        corr += sign * direct_prob(e.state, tensor(e.effects[0][0][a], e.effects[1][0][b]));
        corr_orig += sign * direct_prob(state, tensor(za[a], za[b]));
      }
    REQUIRE_THAT(corr, WithinAbs(corr_orig, 1e-14));
    REQUIRE_THAT(corr, WithinAbs(1.0, 1e-14));
  }

  SECTION("optimal single-source strategy embeds to a real one, same table") {
    // state phi+, Alice Z/X/Y, the partner the six diagonal-combination
    // observables; this reaches the 6 sqrt2 combination and uses genuinely
    // complex operators (Y), so the embedded version must invoke the ancilla
    const Ket phip = bell_basis()[0];
    const DenseMatrix rho = projector(phip);
    const Strategy net = ideal_strategy();  // reuse its observable tables
    std::vector<std::vector<DenseMatrix>> pa, pc;
    auto split = [](const DenseMatrix& obs) {
      const Mat id = Mat::Identity(2, 2);
      return std::vector<DenseMatrix>{DenseMatrix(Mat((id + obs.m) / 2), {2}),
                                      DenseMatrix(Mat((id - obs.m) / 2), {2})};
    };
    for (int x = 0; x < 3; ++x) pa.push_back(split(net.alice[x]));
    for (int z = 0; z < 6; ++z) pc.push_back(split(net.charlie[z]));
    const EmbeddedSystem e = embed_bipartite(DenseMatrix(rho.m, {2, 2}), pa, pc);
    REQUIRE(is_real(e.state, 1e-12));
    std::array<std::array<double, 6>, 3> table{}, orig{};
    for (int x = 0; x < 3; ++x)
      for (int z = 0; z < 6; ++z)
        for (int a = 0; a < 2; ++a)
          for (int c = 0; c < 2; ++c) {
            const double sign = (a == c) ? 1.0 : -1.0;
            table[x][z] += sign * direct_prob(e.state,
                tensor(e.effects[0][x][a], e.effects[1][z][c]));
            orig[x][z] += sign * direct_prob(DenseMatrix(rho.m, {2, 2}),
                tensor(pa[x][a], pc[z][c]));
          }
    for (int x = 0; x < 3; ++x)
      for (int z = 0; z < 6; ++z)
        REQUIRE_THAT(table[x][z], WithinAbs(orig[x][z], 1e-12));
    REQUIRE_THAT(chsh3_value(table), WithinAbs(kSixSqrt2, 1e-12));
  }
}

TEST_CASE("classical-basis simulation of independent preparations") {
  SECTION("N=2 random qubit preparations, 4-outcome joint POVM") {
    const std::vector<DenseMatrix> s0{random_state(2, {2}), random_state(2, {2})};
    const std::vector<DenseMatrix> s1{random_state(2, {2}), random_state(2, {2}),
                                      random_state(2, {2})};
    const auto povm = random_povm(4, 4, {2, 2});
    const ClassicalSimulation sim =
        simulate_independent_preparations({s0, s1}, povm);
    REQUIRE(sim.dims == std::vector<int>{2, 3});
    for (int p0 = 0; p0 < 2; ++p0)
      for (int p1 = 0; p1 < 3; ++p1)
        for (std::size_t r = 0; r < povm.size(); ++r) {
          const double want =
              direct_prob(tensor(s0[p0], s1[p1]), povm[r]);
          const double got = direct_prob(
              tensor(sim.states[0][p0], sim.states[1][p1]), sim.effects[r]);
          REQUIRE_THAT(got, WithinAbs(want, 1e-12));
          REQUIRE(is_real(sim.effects[r], 1e-12));
          REQUIRE(is_psd(sim.effects[r], 1e-12));
        }
  }

  SECTION("N=1 trivial measurement") {
    const std::vector<DenseMatrix> preps{random_state(3, {3}), random_state(3, {3})};
    const std::vector<DenseMatrix> id{DenseMatrix(Mat(Mat::Identity(3, 3)), {3})};
    const ClassicalSimulation sim = simulate_independent_preparations({preps}, id);
    for (int p = 0; p < 2; ++p)
      REQUIRE_THAT(direct_prob(sim.states[0][p], sim.effects[0]),
                   WithinAbs(1.0, 1e-14));
  }

  SECTION("two non-orthogonal preparations with the antidistinguishing basis") {
    // preparations {|0>, |+>} at each of two sources, measured in the joint
    // basis that never reports the label pair it would exclude
    const Ket zero = basis_ket(2, 0);
    CVec plus(2);
    plus << 1.0 / kSqrt2, 1.0 / kSqrt2;
    const DenseMatrix p0 = projector(zero);
    const DenseMatrix pp = projector(Ket{plus, {2}});
    auto kv = [](std::initializer_list<cplx> v) {
      CVec k(4);
      int i = 0;
      for (cplx c : v) k(i++) = c;
      return Ket{k, {2, 2}};
    };
    const double r = 1.0 / kSqrt2, h = 0.5;
    // orthonormal joint basis: (|01>+|10>)/sqrt2, (|0->+|1+>)/sqrt2,
    // (|+1>+|-0>)/sqrt2, (|+->+|-+>)/sqrt2
    std::vector<DenseMatrix> povm{
        projector(kv({0, r, r, 0})),
        projector(kv({h, -h, h, h})),
        projector(kv({h, h, -h, h})),
        projector(kv({r, 0, 0, -r}))};
    const ClassicalSimulation sim =
        simulate_independent_preparations({{p0, pp}, {p0, pp}}, povm);
    for (int pa = 0; pa < 2; ++pa)
      for (int pb = 0; pb < 2; ++pb) {
        const DenseMatrix joint = tensor(pa ? pp : p0, pb ? pp : p0);
        const DenseMatrix lbl =
            tensor(sim.states[0][pa], sim.states[1][pb]);
        for (int rr = 0; rr < 4; ++rr)
          REQUIRE_THAT(direct_prob(lbl, sim.effects[rr]),
                       WithinAbs(direct_prob(joint, povm[rr]), 1e-12));
      }
    // the defining antidistinguishing property survives the simulation
    REQUIRE_THAT(direct_prob(tensor(sim.states[0][0], sim.states[1][0]),
                             sim.effects[0]),
                 WithinAbs(0.0, 1e-12));
  }

  SECTION("incomplete POVM rejected") {
    const std::vector<DenseMatrix> preps{random_state(2, {2})};
    std::vector<DenseMatrix> bad{DenseMatrix(Mat(0.5 * Mat::Identity(2, 2)), {2})};
    REQUIRE_THROWS_AS(simulate_independent_preparations({preps}, bad),
                      std::invalid_argument);
  }
}

TEST_CASE("negative control: the middle party's measurement does not embed") {
  const NegativeControl nc = negative_control_bob();
  // per-link embedding leaves no joint ancilla for a measurement that spans
  // both links: the only locally available map fails completeness
  REQUIRE(!nc.completeness_ok);
  REQUIRE(nc.completeness_defect > 0.4);
  REQUIRE((!nc.reality_ok || !nc.completeness_ok));
}
