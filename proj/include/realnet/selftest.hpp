#pragma once

// Device-independent extraction checks for the swap network.
//
// Given only the observed correlations at the quantum maximum, the untrusted
// measurement operators of the end parties can be turned into a local circuit
// (two ancilla qubit pairs per run) that pulls a known reference state out of
// any maximally violating strategy. This header implements that machinery:
//
//   * sign regularization of near-involutions (regularize),
//   * the four-step swap-isometry circuit and its action on conditional
//     states (swap_isometry, extract_network),
//   * the reference targets and the sigma_b vectors the circuit must emit,
//   * two sum-of-squares certificates for 6*sqrt2 - T^_b >= 0 (verify_sos),
//   * closed-form robustness budgets and the critical noise level
//     (epsilon_budget, critical_epsilon, approximate_extraction_check),
//   * the trace-norm distance to the partial-transpose-invariant state set,
//     as a semidefinite program (ppt_set_distance).
//
// Factor conventions, used consistently below:
//   full space      [A, C, A', A'', C'', C']   (ancillas 2-dimensional),
//   after trace AC  [A', A'', C'', C'],
//   reporting order (A', C', A'', C'')         so targets factor as
//                   (bell pair on A'C') (x) (junk on A''C'').

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "realnet/bellfunc.hpp"
#include "realnet/netsim.hpp"
#include "realnet/qcore.hpp"
#include "realnet/realsim.hpp"
#include "realnet/sdp.hpp"

namespace realnet {

/// Constants of the closed-form robustness bounds: at functional deficit
/// epsilon (value 6*sqrt2 - epsilon) with epsilon1 = sqrt(sqrt2 * epsilon),
///   || W psi - sigma_b ||     <= (15 + 13 sqrt2) epsilon1,
///   | ||sigma_b||^2 - 1 |     <= (3 + sqrt2) epsilon1,
///   | <psi| Z^A (x) I |psi> | <= (3 + sqrt2) epsilon1.
inline const double kIsometryDefectConstant = 15.0 + 13.0 * kSqrt2;
inline const double kNormDefectConstant = 3.0 + kSqrt2;

// ---------------------------------------------------------------------------
// Operator regularization
// ---------------------------------------------------------------------------

/// Snap a Hermitian operator to the nearest +-1 involution with the same
/// eigenvectors: eigenvalues with |lambda| < ztol map to +1 (the convention
/// for exact zeros), all others to sign(lambda). The zero tolerance is
/// 1e-10 absolute because floating point produces near-zeros where the
/// constructions place exact ones.
inline Mat regularize(const Mat& o, double ztol = 1e-10) {
  if (o.rows() != o.cols())
    throw std::invalid_argument("regularize: input not square");
  if ((o - o.adjoint()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("regularize: input not Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es(o);
  RVec s = es.eigenvalues();
  for (Eigen::Index i = 0; i < s.size(); ++i)
    s(i) = (std::abs(s(i)) < ztol) ? 1.0 : (s(i) > 0.0 ? 1.0 : -1.0);
  Mat out = es.eigenvectors() * s.cast<cplx>().asDiagonal() *
            es.eigenvectors().adjoint();
  return out;
}

inline DenseMatrix regularize(const DenseMatrix& o, double ztol = 1e-10) {
  return DenseMatrix(regularize(o.m, ztol), o.dims);
}

namespace detail {

inline Mat kron2(const Mat& a, const Mat& b) {
  return tensor(DenseMatrix(a), DenseMatrix(b)).m;
}

inline void require_involution(const Mat& o, const char* who,
                               double tol = 1e-9) {
  if (o.rows() != o.cols())
    throw std::invalid_argument(std::string(who) + ": observable not square");
  if ((o - o.adjoint()).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument(std::string(who) +
                                ": observable not Hermitian");
  const Mat sq = o * o;
  if ((sq - Mat::Identity(o.rows(), o.cols())).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument(std::string(who) +
                                ": observable is not a +-1 involution");
}

inline Mat hadamard() {
  Mat h(2, 2);
  h << 1.0, 1.0, 1.0, -1.0;
  return h / kSqrt2;
}

inline Mat kron_all(const std::vector<Mat>& factors) {
  Mat out = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) out = kron2(out, factors[i]);
  return out;
}

/// op acting on tensor factor k of a system with the given factor dims.
inline Mat embed_factor(const Mat& op, int k, const std::vector<int>& dims) {
  std::vector<Mat> f;
  f.reserve(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i)
    f.push_back(static_cast<int>(i) == k
                    ? op
                    : Mat(Mat::Identity(dims[i], dims[i])));
  return kron_all(f);
}

/// |0><0|_ctrl (x) I + |1><1|_ctrl (x) U_targ on the given factor layout.
inline Mat controlled(const Mat& u, int ctrl, int targ,
                      const std::vector<int>& dims) {
  Mat p0 = Mat::Zero(2, 2), p1 = Mat::Zero(2, 2);
  p0(0, 0) = 1.0;
  p1(1, 1) = 1.0;
  std::vector<Mat> f0, f1;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const int k = static_cast<int>(i);
    f0.push_back(k == ctrl ? p0 : Mat(Mat::Identity(dims[i], dims[i])));
    f1.push_back(k == ctrl ? p1
                           : (k == targ ? u
                                        : Mat(Mat::Identity(dims[i], dims[i]))));
  }
  return kron_all(f0) + kron_all(f1);
}

inline std::array<Mat, 3> obs3(const std::array<DenseMatrix, 3>& v) {
  return {v[0].m, v[1].m, v[2].m};
}

inline std::array<Mat, 6> obs6(const std::array<DenseMatrix, 6>& v) {
  return {v[0].m, v[1].m, v[2].m, v[3].m, v[4].m, v[5].m};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The swap-isometry circuit
// ---------------------------------------------------------------------------

/// Charlie's regularized Z/X/Y surrogates from his six observables
/// (D_zx, E_zx, D_zy, E_zy, D_xy, E_xy):
///   Z^ = reg((D_zx + E_zx)/sqrt2),  X^ = reg((D_zx - E_zx)/sqrt2),
///   Y^ = reg((D_zy - E_zy)/sqrt2).
inline std::array<Mat, 3> charlie_zxy_hat(const std::array<Mat, 6>& charlie,
                                          double ztol = 1e-10) {
  for (const Mat& o : charlie)
    detail::require_involution(o, "charlie_zxy_hat");
  return {regularize(Mat((charlie[0] + charlie[1]) / kSqrt2), ztol),
          regularize(Mat((charlie[0] - charlie[1]) / kSqrt2), ztol),
          regularize(Mat((charlie[2] - charlie[3]) / kSqrt2), ztol)};
}

/// The four-step circuit as an isometry W: A (x) C -> [A,C,A',A'',C'',C'],
/// ancillas prepared in |0000>. Steps (each controlled gate is controlled by
/// the primed ancilla, acting on the party system):
///   1. Hadamard on all four ancillas; ctrl-Z^A from A', ctrl-Z^^C from C'.
///   2. Hadamard on A', C'; ctrl-X^A from A', ctrl-X^^C from C'.
///   3. ctrl-(Y^A X^A) from A''; ctrl-(Y^^C X^^C) from C''.
///   4. Hadamard on A'', C''.
/// Returns the (dA*dC*16) x (dA*dC) matrix W = U (I_AC (x) |0000>).
inline Mat swap_isometry_matrix(const std::array<Mat, 3>& alice_zxy,
                                const std::array<Mat, 3>& charlie_hat) {
  for (const Mat& o : alice_zxy)
    detail::require_involution(o, "swap_isometry_matrix[A]");
  for (const Mat& o : charlie_hat)
    detail::require_involution(o, "swap_isometry_matrix[C]");
  const int da = static_cast<int>(alice_zxy[0].rows());
  const int dc = static_cast<int>(charlie_hat[0].rows());
  const std::vector<int> dims = {da, dc, 2, 2, 2, 2};
  enum { iA = 0, iC = 1, iAp = 2, iApp = 3, iCpp = 4, iCp = 5 };

  const Mat h = detail::hadamard();
  Mat u = Mat::Identity(da * dc * 16, da * dc * 16);
  for (int anc : {iAp, iApp, iCpp, iCp})
    u = detail::embed_factor(h, anc, dims) * u;
  u = detail::controlled(alice_zxy[0], iAp, iA, dims) * u;
  u = detail::controlled(charlie_hat[0], iCp, iC, dims) * u;
  u = detail::embed_factor(h, iAp, dims) * u;
  u = detail::embed_factor(h, iCp, dims) * u;
  u = detail::controlled(alice_zxy[1], iAp, iA, dims) * u;
  u = detail::controlled(charlie_hat[1], iCp, iC, dims) * u;
  u = detail::controlled(Mat(alice_zxy[2] * alice_zxy[1]), iApp, iA, dims) * u;
  u = detail::controlled(Mat(charlie_hat[2] * charlie_hat[1]), iCpp, iC, dims) * u;
  u = detail::embed_factor(h, iApp, dims) * u;
  u = detail::embed_factor(h, iCpp, dims) * u;

  // W = U (I (x) |0000>): ancilla |0000> is index 0 of the 16-block, so
  // column k of W is column k*16 of U.
  Mat w(da * dc * 16, da * dc);
  for (int k = 0; k < da * dc; ++k) w.col(k) = u.col(k * 16);
  return w;
}

/// Apply the circuit to a vector on A (x) C. Charlie's surrogate trio is
/// built internally from his six observables. Linear isometry: output norm
/// equals input norm.
inline Ket swap_isometry(const std::array<Mat, 3>& alice_zxy,
                         const std::array<Mat, 6>& charlie,
                         const Ket& psi_ac) {
  const Mat w = swap_isometry_matrix(alice_zxy, charlie_zxy_hat(charlie));
  const int da = static_cast<int>(alice_zxy[0].rows());
  const int dc = static_cast<int>(charlie[0].rows());
  if (psi_ac.v.size() != static_cast<Eigen::Index>(da) * dc)
    throw std::invalid_argument("swap_isometry: state dimension mismatch");
  if (!psi_ac.dims.empty() && psi_ac.dims != std::vector<int>{da, dc})
    throw std::invalid_argument("swap_isometry: state dims must be {dA, dC}");
  return Ket(w * psi_ac.v, {da, dc, 2, 2, 2, 2});
}

/// Conditional (unnormalized) states of the end parties after the middle
/// measurement: omega_b = tr_{B1 B2}[(rho_AB1 (x) rho_B2C)(I (x) Pi_b (x) I)]
/// on A (x) C. Traces are the outcome weights P(b).
inline std::array<DenseMatrix, 4> conditional_states(const Strategy& s) {
  if (s.state_ab1.dims.size() != 2 || s.state_b2c.dims.size() != 2)
    throw std::invalid_argument(
        "conditional_states: source states need dims = {dA,2} / {2,dC}");
  const int da = s.state_ab1.dims[0], dc = s.state_b2c.dims[1];
  const DenseMatrix joint = tensor(s.state_ab1, s.state_b2c);  // A,B1,B2,C
  std::array<DenseMatrix, 4> out;
  for (int b = 0; b < 4; ++b) {
    const DenseMatrix eff = tensor(
        tensor(identity(da, {da}), s.bob[b]), identity(dc, {dc}));
    DenseMatrix prod(Mat(joint.m * eff.m), joint.dims);
    out[b] = partial_trace(prod, {0, 3});  // dims {dA, dC}
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference states and distances
// ---------------------------------------------------------------------------

/// The residual ancilla-pair state every maximally violating real strategy
/// leaves on A''C'': (psi+ + phi-)/2, equivalently (|ii><ii| + |-i-i><-i-i|)/2.
inline DenseMatrix perfect_junk() {
  const auto bell = bell_basis();
  Mat j = 0.5 * (projector(bell[1]).m + projector(bell[2]).m);
  return DenseMatrix(std::move(j), {2, 2});
}

/// Target output for outcome b in reporting order (A', C', A'', C''):
/// |b><b|_{A'C'} (x) perfect_junk on A''C''.
inline DenseMatrix perfect_state(int b) {
  if (b < 0 || b > 3)
    throw std::invalid_argument("perfect_state: b out of range");
  return tensor(projector(bell_basis()[b]), perfect_junk());
}

/// Outcome-averaged target: I_{A'C'}/4 (x) perfect_junk.
inline DenseMatrix suma_state() {
  return tensor(DenseMatrix(Mat(Mat::Identity(4, 4) / 4.0), {2, 2}),
                perfect_junk());
}

// ---------------------------------------------------------------------------
// Network extraction
// ---------------------------------------------------------------------------

/// What the circuit leaves on the four ancilla qubits, per outcome and
/// averaged. per_b_state are normalized, in reporting order (A',C',A'',C''),
/// dims {2,2,2,2}; weights are the outcome masses P(b);
/// summed_state = sum_b weight_b * per_b_state.
struct IsometryOutput {
  std::array<DenseMatrix, 4> per_b_state;
  std::array<double, 4> weights{};
  DenseMatrix summed_state;
};

/// Conjugate each conditional state by the circuit and trace out A and C.
/// The conditional states are used directly as (possibly mixed) density
/// matrices -- purifications are never constructed, since the choice of
/// purification cannot affect the reduced outputs.
inline IsometryOutput extract_network(
    const std::array<Mat, 3>& alice_zxy, const std::array<Mat, 6>& charlie,
    const std::array<DenseMatrix, 4>& conditional) {
  const Mat w = swap_isometry_matrix(alice_zxy, charlie_zxy_hat(charlie));
  const int da = static_cast<int>(alice_zxy[0].rows());
  const int dc = static_cast<int>(charlie[0].rows());

  IsometryOutput out;
  Mat total = Mat::Zero(16, 16);
  for (int b = 0; b < 4; ++b) {
    const DenseMatrix& om = conditional[b];
    if (om.rows() != static_cast<Eigen::Index>(da) * dc)
      throw std::invalid_argument("extract_network: conditional state size");
    if (!om.dims.empty() && om.dims != std::vector<int>{da, dc})
      throw std::invalid_argument(
          "extract_network: conditional dims must be {dA, dC}");
    if (!is_hermitian(om) || !is_psd(om, 1e-9))
      throw std::invalid_argument(
          "extract_network: conditional state not PSD");
    DenseMatrix big(Mat(w * om.m * w.adjoint()), {da, dc, 2, 2, 2, 2});
    DenseMatrix anc = partial_trace(big, {2, 3, 4, 5});  // A',A'',C'',C'
    DenseMatrix rep = permute_systems(anc, {0, 3, 1, 2});  // A',C',A'',C''
    const double wb = rep.m.trace().real();
    if (wb <= 1e-12)
      throw std::invalid_argument("extract_network: outcome weight vanishes");
    out.weights[b] = wb;
    total += rep.m;
    out.per_b_state[b] = DenseMatrix(Mat(rep.m / wb), {2, 2, 2, 2});
  }
  out.summed_state = DenseMatrix(std::move(total), {2, 2, 2, 2});
  return out;
}

inline IsometryOutput extract_network(const Strategy& s) {
  return extract_network(detail::obs3(s.alice), detail::obs6(s.charlie),
                         conditional_states(s));
}

// ---------------------------------------------------------------------------
// Real doubling of the conditional problem
// ---------------------------------------------------------------------------

/// Real simulation of a +-1 observable: O (x) P(+i) + O* (x) P(-i), the
/// party's rebit ancilla appended (same map realsim applies to effects).
inline Mat embed_observable(const Mat& o) {
  return detail::embed_effect_term(o);
}

/// Trace-preserving real doubling of a (possibly unnormalized) bipartite
/// operator on A (x) C: (omega (x) P+P+ + omega* (x) P-P-)/2 reordered to
/// (A, A_anc, C, C_anc). The unnormalized sibling of realsim's
/// embed_bipartite, for conditional states that carry outcome weights.
inline DenseMatrix embed_ac_state(const DenseMatrix& omega) {
  if (omega.dims.size() != 2)
    throw std::invalid_argument("embed_ac_state: state needs dims = {dA, dC}");
  const DenseMatrix pp = projector(ket_plus_i());
  const DenseMatrix pm = projector(ket_minus_i());
  DenseMatrix big = tensor(tensor(omega, pp), pp);  // (A, C, aA, aC)
  big.m = 0.5 * (big.m + tensor(tensor(conjugate(omega), pm), pm).m);
  return permute_systems(big, {0, 2, 1, 3});  // (A, aA, C, aC)
}

// ---------------------------------------------------------------------------
// Reference output vectors sigma_b
// ---------------------------------------------------------------------------

/// The reference vector the circuit must approximately produce from the
/// conditional state psi on A (x) C at outcome b = 2*b1 + b2:
///   |sigma_b> = [ (O1 (x) I_C |psi>) (x) |b, psi+>
///               + (O2 (x) I_C |psi>) (x) |b, phi-> ] / sqrt2
/// with the ancilla kets laid out on [A', A'', C'', C'] as the bell pair b
/// over (A', C') and the named pair over (A'', C''), and
///   b2 = 0:  O1 = (I + Z^A)/sqrt2,         O2 = Y^A X^A O1,
///   b2 = 1:  O1 = X^A (I - Z^A)/sqrt2,     O2 = Y^A (I - Z^A)/sqrt2.
inline Ket sigma_b(int b, const std::array<Mat, 3>& alice_zxy,
                   const Ket& psi_ac) {
  if (b < 0 || b > 3) throw std::invalid_argument("sigma_b: b out of range");
  const int da = static_cast<int>(alice_zxy[0].rows());
  if (psi_ac.v.size() % da != 0)
    throw std::invalid_argument("sigma_b: state dimension mismatch");
  const int dc = static_cast<int>(psi_ac.v.size()) / da;
  if (!psi_ac.dims.empty() && psi_ac.dims != std::vector<int>{da, dc})
    throw std::invalid_argument("sigma_b: state dims must be {dA, dC}");

  const Mat& za = alice_zxy[0];
  const Mat& xa = alice_zxy[1];
  const Mat& ya = alice_zxy[2];
  const Mat ida = Mat::Identity(da, da);
  const int b2 = b & 1;
  Mat o1, o2;
  if (b2 == 0) {
    o1 = (ida + za) / kSqrt2;
    o2 = ya * xa * o1;
  } else {
    o1 = xa * (ida - za) / kSqrt2;
    o2 = ya * (ida - za) / kSqrt2;
  }

  const auto bell = bell_basis();
  const CVec& bket = bell[b].v;       // over (A', C')
  const CVec& psip = bell[1].v;       // over (A'', C'')
  const CVec& phim = bell[2].v;

  CVec out = CVec::Zero(static_cast<Eigen::Index>(da) * dc * 16);
  const std::array<std::pair<const CVec*, const Mat*>, 2> branches = {
      {{&psip, &o1}, {&phim, &o2}}};
  for (const auto& [pair_ket, op] : branches) {
    CVec anc = CVec::Zero(16);
    for (int i0 = 0; i0 < 2; ++i0)
      for (int j0 = 0; j0 < 2; ++j0) {
        const cplx bamp = bket(i0 * 2 + j0);
        if (std::abs(bamp) < 1e-15) continue;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            // position (A' = i0, A'' = i, C'' = j, C' = j0)
            anc(i0 * 8 + i * 4 + j * 2 + j0) += bamp * (*pair_ket)(i * 2 + j);
      }
    const CVec sys = detail::kron2(*op, Mat::Identity(dc, dc)) * psi_ac.v;
    for (Eigen::Index k = 0; k < sys.size(); ++k)
      out.segment(k * 16, 16) += sys(k) * anc / kSqrt2;
  }
  return Ket(std::move(out), {da, dc, 2, 2, 2, 2});
}

// ---------------------------------------------------------------------------
// The functional as an operator, and its SOS certificates
// ---------------------------------------------------------------------------

/// T^_b on A (x) C: the twelve signed products sgn(b) * A_x (x) C_z of the
/// per-outcome functional, with expectation <T^_b> = T_b on the normalized
/// conditional state.
inline Mat t_hat_b(int b, const std::array<Mat, 3>& alice,
                   const std::array<Mat, 6>& charlie) {
  if (b < 0 || b > 3) throw std::invalid_argument("t_hat_b: b out of range");
  const int b1 = (b >> 1) & 1, b2 = b & 1;
  const Eigen::Index d = alice[0].rows() * charlie[0].rows();
  Mat out = Mat::Zero(d, d);
  for (const TbTerm& t : kTbTerms) {
    const int sgn = t.coef * (((t.e1 * b1 + t.e2 * b2) % 2) ? -1 : 1);
    out += static_cast<double>(sgn) *
           detail::kron2(alice[t.x - 1], charlie[t.z - 1]);
  }
  return out;
}

/// The six bracket operators of the first decomposition of
/// sqrt2 (6 sqrt2 I - T^_b): party operators against Charlie's rotated-basis
/// combinations, signs s1 = (-1)^{b1}, s2 = (-1)^{b2}.
inline std::vector<Mat> sos_terms_first(int b,
                                        const std::array<Mat, 3>& alice,
                                        const std::array<Mat, 6>& charlie) {
  if (b < 0 || b > 3)
    throw std::invalid_argument("sos_terms_first: b out of range");
  const double s1 = ((b >> 1) & 1) ? -1.0 : 1.0;
  const double s2 = (b & 1) ? -1.0 : 1.0;
  const int da = static_cast<int>(alice[0].rows());
  const int dc = static_cast<int>(charlie[0].rows());
  const Mat ia = Mat::Identity(da, da), ic = Mat::Identity(dc, dc);
  auto ax = [&](const Mat& o) { return detail::kron2(o, ic); };
  auto cz = [&](const Mat& o) { return detail::kron2(ia, o); };
  const Mat za = ax(alice[0]), xa = ax(alice[1]), ya = ax(alice[2]);
  return {
      Mat(s2 * za - cz(Mat((charlie[0] + charlie[1]) / kSqrt2))),
      Mat(s1 * xa - cz(Mat((charlie[0] - charlie[1]) / kSqrt2))),
      Mat(s2 * za - cz(Mat((charlie[2] + charlie[3]) / kSqrt2))),
      Mat(s1 * s2 * ya + cz(Mat((charlie[2] - charlie[3]) / kSqrt2))),
      Mat(s1 * xa - cz(Mat((charlie[4] + charlie[5]) / kSqrt2))),
      Mat(s1 * s2 * ya + cz(Mat((charlie[4] - charlie[5]) / kSqrt2))),
  };
}

/// The six bracket operators of the second decomposition: Charlie's
/// observables against Alice's rotated-basis combinations.
inline std::vector<Mat> sos_terms_second(int b,
                                         const std::array<Mat, 3>& alice,
                                         const std::array<Mat, 6>& charlie) {
  if (b < 0 || b > 3)
    throw std::invalid_argument("sos_terms_second: b out of range");
  const double s1 = ((b >> 1) & 1) ? -1.0 : 1.0;
  const double s2 = (b & 1) ? -1.0 : 1.0;
  const int da = static_cast<int>(alice[0].rows());
  const int dc = static_cast<int>(charlie[0].rows());
  const Mat ia = Mat::Identity(da, da), ic = Mat::Identity(dc, dc);
  auto ax = [&](const Mat& o) { return detail::kron2(o, ic); };
  auto cz = [&](const Mat& o) { return detail::kron2(ia, o); };
  const Mat za = s2 * alice[0], xa = s1 * alice[1], ya = s1 * s2 * alice[2];
  return {
      Mat(cz(charlie[0]) - ax(Mat((za + xa) / kSqrt2))),
      Mat(cz(charlie[1]) - ax(Mat((za - xa) / kSqrt2))),
      Mat(cz(charlie[2]) - ax(Mat((za - ya) / kSqrt2))),
      Mat(cz(charlie[3]) - ax(Mat((za + ya) / kSqrt2))),
      Mat(cz(charlie[4]) - ax(Mat((xa - ya) / kSqrt2))),
      Mat(cz(charlie[5]) - ax(Mat((xa + ya) / kSqrt2))),
  };
}

/// Operator-norm residuals of the two algebraic identities
///   sqrt2 (6 sqrt2 I - T^_b) = sum of six squares
/// for concrete +-1 involutions. Both vanish identically whenever the nine
/// observables are genuine involutions, regardless of the attained value.
struct SosReport {
  double residual_first = 0.0;
  double residual_second = 0.0;
};

inline SosReport verify_sos(int b, const std::array<Mat, 3>& alice,
                            const std::array<Mat, 6>& charlie) {
  for (const Mat& o : alice) detail::require_involution(o, "verify_sos[A]");
  for (const Mat& o : charlie) detail::require_involution(o, "verify_sos[C]");
  const Eigen::Index d = alice[0].rows() * charlie[0].rows();
  const Mat rhs = kSqrt2 * (kSixSqrt2 * Mat::Identity(d, d) -
                            t_hat_b(b, alice, charlie));
  auto spectral_norm = [](const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  };
  SosReport rep;
  Mat acc = Mat::Zero(d, d);
  for (const Mat& t : sos_terms_first(b, alice, charlie)) acc += t * t;
  rep.residual_first = spectral_norm(Mat(acc - rhs));
  acc.setZero();
  for (const Mat& t : sos_terms_second(b, alice, charlie)) acc += t * t;
  rep.residual_second = spectral_norm(Mat(acc - rhs));
  return rep;
}

// ---------------------------------------------------------------------------
// Operator relations on the conditional states
// ---------------------------------------------------------------------------

/// Residuals of the relations every maximally violating strategy satisfies
/// on its conditional state |psi> (on A (x) C) at outcome b = 2*b1 + b2:
///   anticommutator[k]: || {X^A,Y^A} psi ||, || {Z^A,X^A} psi ||,
///                      || {Z^A,Y^A} psi ||        (Alice pairs anticommute)
///   charlie_match[k]:  || ((-1)^{b2} Z^A - Z^^C) psi ||,
///                      || ((-1)^{b1} X^A - X^^C) psi ||,
///                      || ((-1)^{b1+b2} Y^A + Y^^C) psi ||
///   za_expectation:    | <psi| Z^A (x) I |psi> |   (Z^A unbiased)
/// All vanish exactly at the quantum maximum. Residuals scale with ||psi||.
struct IdentityResiduals {
  std::array<double, 3> anticommutator{};
  std::array<double, 3> charlie_match{};
  double za_expectation = 0.0;
};

inline IdentityResiduals identity_residuals(
    int b, const std::array<Mat, 3>& alice_zxy,
    const std::array<Mat, 3>& charlie_hat, const Ket& psi_ac) {
  if (b < 0 || b > 3)
    throw std::invalid_argument("identity_residuals: b out of range");
  const int da = static_cast<int>(alice_zxy[0].rows());
  const int dc = static_cast<int>(charlie_hat[0].rows());
  if (psi_ac.v.size() != static_cast<Eigen::Index>(da) * dc)
    throw std::invalid_argument("identity_residuals: state dimension mismatch");
  const double s1 = ((b >> 1) & 1) ? -1.0 : 1.0;
  const double s2 = (b & 1) ? -1.0 : 1.0;
  const Mat ia = Mat::Identity(da, da), ic = Mat::Identity(dc, dc);
  auto ax = [&](const Mat& o) { return detail::kron2(o, ic); };
  auto cz = [&](const Mat& o) { return detail::kron2(ia, o); };
  const Mat za = ax(alice_zxy[0]), xa = ax(alice_zxy[1]), ya = ax(alice_zxy[2]);

  IdentityResiduals out;
  out.anticommutator[0] = ((xa * ya + ya * xa) * psi_ac.v).norm();
  out.anticommutator[1] = ((za * xa + xa * za) * psi_ac.v).norm();
  out.anticommutator[2] = ((za * ya + ya * za) * psi_ac.v).norm();
  out.charlie_match[0] = ((s2 * za - cz(charlie_hat[0])) * psi_ac.v).norm();
  out.charlie_match[1] = ((s1 * xa - cz(charlie_hat[1])) * psi_ac.v).norm();
  out.charlie_match[2] =
      ((s1 * s2 * ya + cz(charlie_hat[2])) * psi_ac.v).norm();
  out.za_expectation = std::abs((psi_ac.v.adjoint() * za * psi_ac.v)(0).real());
  return out;
}

// ---------------------------------------------------------------------------
// Robustness budget and the critical noise level
// ---------------------------------------------------------------------------

/// The closed-form error budget at functional deficit epsilon:
///   epsilon1   = sqrt(sqrt2 * epsilon)
///   epsilon2   = (15 + 13 sqrt2) epsilon1
///   eps1_bound = 2 sqrt([1 + (1 + (3+sqrt2) e1)]^2 / 4
///                       - (1 - ((3+sqrt2) e1 + epsilon2^2)/2)^2)
///   eps2_bound = (7 + 3 sqrt2) e1 + 4 (1 + (3+sqrt2) e1) epsilon
/// The two bounds cap the trace-distance drift of the extracted state from
/// the zero-deficit targets; extraction remains conclusive while their sum
/// stays below 1. Every field is nonnegative and increases with epsilon.
struct EpsilonBudget {
  double epsilon = 0.0;
  double epsilon1 = 0.0;
  double epsilon2 = 0.0;
  double eps1_bound = 0.0;
  double eps2_bound = 0.0;

  double total() const { return eps1_bound + eps2_bound; }
};

inline EpsilonBudget epsilon_budget(double epsilon) {
  if (!(epsilon >= 0.0))
    throw std::invalid_argument("epsilon_budget: epsilon must be >= 0");
  EpsilonBudget b;
  b.epsilon = epsilon;
  b.epsilon1 = std::sqrt(kSqrt2 * epsilon);
  b.epsilon2 = kIsometryDefectConstant * b.epsilon1;
  const double c1e1 = kNormDefectConstant * b.epsilon1;
  const double half = (2.0 + c1e1) / 2.0;
  const double dip = 1.0 - (c1e1 + b.epsilon2 * b.epsilon2) / 2.0;
  b.eps1_bound = 2.0 * std::sqrt(std::max(0.0, half * half - dip * dip));
  b.eps2_bound = (7.0 + 3.0 * kSqrt2) * b.epsilon1 +
                 4.0 * (1.0 + c1e1) * epsilon;
  return b;
}

/// Largest epsilon whose budget total stays below 1, by bisection to
/// relative precision 1e-10. Approximately 7.18e-5.
inline double critical_epsilon() {
  double lo = 0.0, hi = 1e-3;
  while (epsilon_budget(hi).total() < 1.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (epsilon_budget(mid).total() < 1.0 ? lo : hi) = mid;
    if (hi - lo <= 1e-10 * hi) break;
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Approximate extraction checks
// ---------------------------------------------------------------------------

/// Per-outcome deficit 6 sqrt2 - <psi_b| T^_b |psi_b> realized by a strategy,
/// evaluated on the normalized top eigenvector of each conditional state
/// (the pure conditional branch the robustness statements address).
inline std::array<double, 4> realized_deficits(const Strategy& s) {
  const auto conds = conditional_states(s);
  const auto alice = detail::obs3(s.alice);
  const auto charlie = detail::obs6(s.charlie);
  std::array<double, 4> out{};
  for (int b = 0; b < 4; ++b) {
    Eigen::SelfAdjointEigenSolver<Mat> es(conds[b].m);
    const Eigen::Index top = es.eigenvalues().size() - 1;
    CVec psi = es.eigenvectors().col(top);
    psi /= psi.norm();
    const Mat that = t_hat_b(b, alice, charlie);
    out[b] = kSixSqrt2 - (psi.adjoint() * that * psi)(0).real();
  }
  return out;
}

/// One outcome's robustness scorecard: the circuit output distance against
/// the deficit-driven bound, the sigma_b norm defect, and the Z^A bias.
/// A strategy passes when every measured quantity is at most its bound.
struct ExtractionCheck {
  int b = 0;
  double weight = 0.0;            // outcome mass P(b)
  double realized_epsilon = 0.0;  // 6 sqrt2 - <psi_b| T^_b |psi_b>
  double epsilon1 = 0.0;          // sqrt(sqrt2 * max(realized_epsilon, 0))
  double distance = 0.0;          // || W psi_b - sigma_b ||
  double distance_bound = 0.0;    // (15 + 13 sqrt2) epsilon1
  double norm_error = 0.0;        // | ||sigma_b||^2 - 1 |
  double norm_bound = 0.0;        // (3 + sqrt2) epsilon1
  double za_expectation = 0.0;    // | <psi_b| Z^A (x) I |psi_b> |
  double za_bound = 0.0;          // (3 + sqrt2) epsilon1
};

/// Evaluate the robustness bounds on a near-maximal strategy. The supplied
/// epsilon is documentation only: the realized deficit is always recomputed
/// from <T^_b> per outcome, and the call is rejected when the supplied value
/// differs from the worst (largest) realized deficit by more than 1e-9.
inline std::vector<ExtractionCheck> approximate_extraction_check(
    const Strategy& s, double epsilon) {
  const auto conds = conditional_states(s);
  const auto alice = detail::obs3(s.alice);
  const auto charlie = detail::obs6(s.charlie);
  const Mat w = swap_isometry_matrix(alice, charlie_zxy_hat(charlie));

  std::vector<ExtractionCheck> out;
  double worst = 0.0;
  for (int b = 0; b < 4; ++b) {
    Eigen::SelfAdjointEigenSolver<Mat> es(conds[b].m);
    const Eigen::Index top = es.eigenvalues().size() - 1;
    CVec psi = es.eigenvectors().col(top);
    psi /= psi.norm();

    ExtractionCheck c;
    c.b = b;
    c.weight = conds[b].m.trace().real();
    c.realized_epsilon =
        kSixSqrt2 - (psi.adjoint() * t_hat_b(b, alice, charlie) * psi)(0).real();
    worst = std::max(worst, c.realized_epsilon);
    c.epsilon1 = std::sqrt(kSqrt2 * std::max(c.realized_epsilon, 0.0));
    const Ket sg = sigma_b(b, alice, Ket(psi, conds[b].dims));
    c.distance = (w * psi - sg.v).norm();
    c.distance_bound = kIsometryDefectConstant * c.epsilon1;
    c.norm_error = std::abs(sg.v.squaredNorm() - 1.0);
    c.norm_bound = kNormDefectConstant * c.epsilon1;
    const Mat za =
        detail::kron2(alice[0], Mat::Identity(charlie[0].rows(),
                                              charlie[0].rows()));
    c.za_expectation = std::abs((psi.adjoint() * za * psi)(0).real());
    c.za_bound = kNormDefectConstant * c.epsilon1;
    out.push_back(std::move(c));
  }
  if (std::abs(worst - epsilon) > 1e-9)
    throw std::invalid_argument(
        "approximate_extraction_check: supplied epsilon " +
        std::to_string(epsilon) + " inconsistent with realized deficit " +
        std::to_string(worst));
  return out;
}

// ---------------------------------------------------------------------------
// Distance to the partial-transpose-invariant state set
// ---------------------------------------------------------------------------

namespace detail {

/// Orthonormal basis of real symmetric n x n matrices, svec order
/// (columns j, rows i >= j).
inline std::vector<RMat> sym_basis(int n) {
  std::vector<RMat> out;
  out.reserve(n * (n + 1) / 2);
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      RMat e = RMat::Zero(n, n);
      if (i == j)
        e(i, i) = 1.0;
      else
        e(i, j) = e(j, i) = 1.0 / kSqrt2;
      out.push_back(std::move(e));
    }
  return out;
}

/// Orthonormal basis of the real doubling I2 (x) Re(H) + J (x) Im(H) of
/// Hermitian n x n matrices H, inside real symmetric 2n x 2n.
inline std::vector<RMat> herm_basis_doubled(int n) {
  RMat j2(2, 2), i2 = RMat::Identity(2, 2);
  j2 << 0.0, -1.0, 1.0, 0.0;
  std::vector<RMat> out;
  out.reserve(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      RMat a = RMat::Zero(n, n);
      if (i == j)
        a(i, i) = 1.0;
      else
        a(i, j) = a(j, i) = 1.0 / kSqrt2;
      RMat big(2 * n, 2 * n);
      big << a, RMat::Zero(n, n), RMat::Zero(n, n), a;
      out.push_back(big / kSqrt2);
    }
  for (int j = 0; j < n; ++j)
    for (int i = j + 1; i < n; ++i) {
      RMat b = RMat::Zero(n, n);
      b(i, j) = 1.0 / kSqrt2;
      b(j, i) = -1.0 / kSqrt2;
      RMat big(2 * n, 2 * n);
      big << RMat::Zero(n, n), -b, b, RMat::Zero(n, n);
      out.push_back(big / kSqrt2);
    }
  return out;
}

inline RMat real_partial_transpose(const RMat& m, const std::vector<int>& dims,
                                   const std::vector<int>& tset) {
  const DenseMatrix wrapped(Mat(m.cast<cplx>()), dims);
  return partial_transpose(wrapped, tset).m.real();
}

/// Orthonormal spanning set of the partial-transpose-invariant subspace of
/// span(basis): eigenvectors of the (orthogonal, involutive) PT map at
/// eigenvalue +1, read off in basis coordinates.
inline std::vector<RMat> pt_invariant_basis(const std::vector<RMat>& basis,
                                            const std::vector<int>& dims,
                                            const std::vector<int>& tset) {
  const int d = static_cast<int>(basis.size());
  RMat pm(d, d);
  for (int j = 0; j < d; ++j) {
    const RMat pb = real_partial_transpose(basis[j], dims, tset);
    for (int i = 0; i < d; ++i)
      pm(i, j) = (basis[i].array() * pb.array()).sum();
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (pm + pm.transpose()));
  std::vector<RMat> out;
  for (int k = 0; k < d; ++k) {
    if (es.eigenvalues()(k) < 0.5) continue;
    RMat g = RMat::Zero(basis.front().rows(), basis.front().cols());
    for (int i = 0; i < d; ++i) g += es.eigenvectors()(i, k) * basis[i];
    out.push_back(0.5 * (g + g.transpose()));
  }
  return out;
}

}  // namespace detail

/// Minimum trace-norm distance min ||tau - rho0||_1 from rho0 to the states
/// invariant under partial transposition of the listed factors, solved as a
/// semidefinite program:
///   min tr P + tr N   s.t.  P, N >= 0,  P - N = tau - rho0,
///                           tau = tau0 + span of traceless PT-invariant
///                           directions, tau >= 0,
/// where tr P + tr N equals ||tau - rho0||_1 at the optimum. Complex inputs
/// are handled by the real doubling I2 (x) Re + J (x) Im, which represents
/// Hermitian matrices faithfully and doubles every trace norm (hence the
/// result is halved on that path).
inline double ppt_set_distance(const DenseMatrix& rho0,
                               const std::vector<int>& transposed) {
  std::vector<int> dims = rho0.dims;
  if (dims.empty()) {
    if (rho0.rows() != 16)
      throw std::invalid_argument(
          "ppt_set_distance: dims required for non-16-dim input");
    dims = {2, 2, 2, 2};
  }
  if (transposed.empty())
    throw std::invalid_argument("ppt_set_distance: empty transposition set");
  for (int t : transposed)
    if (t < 0 || t >= static_cast<int>(dims.size()))
      throw std::invalid_argument("ppt_set_distance: bad transposed factor");
  if (!is_hermitian(rho0, 1e-9))
    throw std::invalid_argument("ppt_set_distance: state not Hermitian");
  if (std::abs(rho0.m.trace().real() - 1.0) > 1e-6)
    throw std::invalid_argument("ppt_set_distance: state trace != 1");
  if (!is_psd(rho0, 1e-8))
    throw std::invalid_argument("ppt_set_distance: state not PSD");

  const int n = static_cast<int>(rho0.rows());
  const bool complex_input = rho0.m.imag().cwiseAbs().maxCoeff() > 1e-12;
  RMat rho_r;
  std::vector<int> dims_r, tset_r;
  std::vector<RMat> basis;
  double scale;
  if (complex_input) {
    const RMat re = rho0.m.real(), im = rho0.m.imag();
    rho_r.setZero(2 * n, 2 * n);
    rho_r.topLeftCorner(n, n) = re;
    rho_r.bottomRightCorner(n, n) = re;
    rho_r.topRightCorner(n, n) = -im;
    rho_r.bottomLeftCorner(n, n) = im;
    dims_r = {2};
    dims_r.insert(dims_r.end(), dims.begin(), dims.end());
    for (int t : transposed) tset_r.push_back(t + 1);
    basis = detail::herm_basis_doubled(n);
    scale = 0.5;
  } else {
    rho_r = rho0.m.real();
    dims_r = dims;
    tset_r = transposed;
    basis = detail::sym_basis(n);
    scale = 1.0;
  }
  const int nn = static_cast<int>(rho_r.rows());

  // tau = tau0 + sum_t x_t G_t over traceless orthonormal PT-invariant G_t.
  const double tr = rho_r.trace();
  std::vector<RMat> gt;
  for (RMat g : detail::pt_invariant_basis(basis, dims_r, tset_r)) {
    g -= RMat::Identity(nn, nn) * (g.trace() / nn);
    if (g.norm() < 1e-12) continue;
    g /= g.norm();
    for (const RMat& h : gt) g -= (h.array() * g.array()).sum() * h;
    const double gn = g.norm();
    if (gn > 1e-10) gt.push_back(g / gn);
  }

  const int n_p = nn * (nn + 1) / 2;
  const int n_t = static_cast<int>(gt.size());
  SdpProblem prob;
  prob.num_vars = n_p + n_t;
  prob.objective.assign(n_p + n_t, 0.0);
  prob.description = "ppt set distance";
  SdpBlock bp, bn, bt;
  bp.name = "P";
  bn.name = "N";
  bt.name = "tau";
  bp.dim = bn.dim = bt.dim = nn;
  int var = 0;
  for (int j = 0; j < nn; ++j)
    for (int i = j; i < nn; ++i, ++var) {
      const double v = (i == j) ? 1.0 : 1.0 / kSqrt2;
      bp.entries.push_back({var, j, i, v});
      bn.entries.push_back({var, j, i, v});
      if (i == j) prob.objective[var] = -2.0;  // tr N = tr P on feasibility
    }
  for (int t = 0; t < n_t; ++t)
    for (int r = 0; r < nn; ++r)
      for (int c = r; c < nn; ++c) {
        const double v = gt[t](r, c);
        if (std::abs(v) < 1e-14) continue;
        bn.entries.push_back({n_p + t, r, c, -v});
        bt.entries.push_back({n_p + t, r, c, v});
      }
  for (int r = 0; r < nn; ++r) {
    bt.constants.push_back({r, r, -tr / nn});
    for (int c = r; c < nn; ++c) {
      const double v = (r == c ? tr / nn : 0.0) - rho_r(r, c);
      if (std::abs(v) > 1e-14) bn.constants.push_back({r, c, v});
    }
  }
  prob.blocks = {std::move(bp), std::move(bn), std::move(bt)};

  SolveOptions opts;
  opts.gap_tol = 1e-9;
  opts.feas_tol = 1e-9;
  opts.max_iter = 200;
  const SdpSolution sol = solve(prob, opts);
  if (sol.status != SdpStatus::optimal)
    throw std::runtime_error(std::string("ppt_set_distance: solve ended ") +
                             to_string(sol.status));
  return std::max(0.0, -0.5 * (sol.primal_value + sol.dual_value) * scale);
}

/// Reporting-order default: the extracted ancilla state lives on
/// (A', C', A'', C'') and the invariance is under transposing Alice's pair
/// (A', A'') -- factors 0 and 2.
inline double ppt_set_distance(const DenseMatrix& rho0) {
  return ppt_set_distance(rho0, {0, 2});
}

// ---------------------------------------------------------------------------
// JSON views
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const EpsilonBudget& b) {
  j = nlohmann::json{{"epsilon", b.epsilon},
                     {"epsilon1", b.epsilon1},
                     {"epsilon2", b.epsilon2},
                     {"eps1_bound", b.eps1_bound},
                     {"eps2_bound", b.eps2_bound},
                     {"total", b.total()}};
}

inline void to_json(nlohmann::json& j, const ExtractionCheck& c) {
  j = nlohmann::json{{"b", c.b},
                     {"weight", c.weight},
                     {"realized_epsilon", c.realized_epsilon},
                     {"epsilon1", c.epsilon1},
                     {"distance", c.distance},
                     {"distance_bound", c.distance_bound},
                     {"norm_error", c.norm_error},
                     {"norm_bound", c.norm_bound},
                     {"za_expectation", c.za_expectation},
                     {"za_bound", c.za_bound},
                     {"pass", c.distance <= c.distance_bound + 1e-9 &&
                                 c.norm_error <= c.norm_bound + 1e-9 &&
                                 c.za_expectation <= c.za_bound + 1e-9}};
}

}  // namespace realnet
