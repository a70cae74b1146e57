#pragma once

// Real-amplitude simulations of complex quantum systems.
//
// A d-dimensional complex system is simulated on a 2d-dimensional real one
// by attaching a rebit ancilla:
//
//   state:   rho~ = Re(rho) (x) I/2 + Im(rho) (x) (1/2)[[0,1],[-1,0]]
//                 = (rho (x) |+i><+i| + rho* (x) |-i><-i|) / 2
//   effect:  Pi~  = Pi (x) |+i><+i| + Pi* (x) |-i><-i|
//
// with the ancilla appended as the LAST tensor factor of its party. These
// maps preserve Born probabilities exactly: tr(rho Pi) = tr(rho~ Pi~).
// For bipartite states each party receives its own ancilla, giving the
// ordering (A, A_anc, B, B_anc).
//
// The construction is local to a party. It does NOT extend to a measurement
// that spans two independently embedded systems (conjugation is positive but
// not completely positive); `naive_joint_embedding` exposes that failure for
// the negative-control checks.

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "realnet/netsim.hpp"
#include "realnet/qcore.hpp"

namespace realnet {

/// A real-amplitude system simulating a complex one, with its mapped
/// effects laid out exactly like the input: effects[party][measurement][r].
struct EmbeddedSystem {
  DenseMatrix state;
  std::vector<std::vector<std::vector<DenseMatrix>>> effects;
  std::vector<int> original_dims;  // per party
  std::vector<int> embedded_dims;  // per party, = 2 * original
};

namespace detail {

inline void require_state(const DenseMatrix& rho, const char* who) {
  if (!is_hermitian(rho, kDefaultTol) || !is_psd(rho, kDefaultTol) ||
      std::abs(rho.m.trace() - cplx(1.0)) > kDefaultTol)
    throw std::invalid_argument(std::string(who) + ": not a density matrix");
}

inline void require_povm(const std::vector<DenseMatrix>& povm, int dim,
                         const char* who) {
  if (povm.empty()) throw std::invalid_argument(std::string(who) + ": empty POVM");
  Mat sum = Mat::Zero(dim, dim);
  for (const DenseMatrix& e : povm) {
    if (e.m.rows() != dim)
      throw std::invalid_argument(std::string(who) + ": effect dimension mismatch");
    if (!is_hermitian(e, kDefaultTol) || !is_psd(e, kDefaultTol))
      throw std::invalid_argument(std::string(who) + ": effect not PSD");
    sum += e.m;
  }
  if ((sum - Mat::Identity(dim, dim)).cwiseAbs().maxCoeff() > kDefaultTol)
    throw std::invalid_argument(std::string(who) + ": POVM incomplete");
}

/// rho~ for one party: Re(rho) (x) I/2 + Im(rho) (x) (1/2)[[0,1],[-1,0]],
/// ancilla appended after the party's factor.
inline Mat embed_state_term(const Mat& m) {
  Mat re = m.real().cast<cplx>();
  Mat im = m.imag().cast<cplx>();
  Mat half_id(2, 2), half_j(2, 2);
  half_id << 0.5, 0.0, 0.0, 0.5;
  half_j << 0.0, 0.5, -0.5, 0.0;
  Mat out = Mat::Zero(2 * m.rows(), 2 * m.cols());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      out.block(2 * r, 2 * c, 2, 2) +=
          re(r, c) * half_id + im(r, c) * half_j;
    }
  return out;
}

/// Pi~ = Pi (x) P(+i) + Pi* (x) P(-i) = Re(Pi) (x) I + Im(Pi) (x) [[0,1],[-1,0]].
inline Mat embed_effect_term(const Mat& m) {
  Mat re = m.real().cast<cplx>();
  Mat im = m.imag().cast<cplx>();
  Mat id2(2, 2), j2(2, 2);
  id2 << 1.0, 0.0, 0.0, 1.0;
  j2 << 0.0, 1.0, -1.0, 0.0;
  Mat out = Mat::Zero(2 * m.rows(), 2 * m.cols());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c)
      out.block(2 * r, 2 * c, 2, 2) += re(r, c) * id2 + im(r, c) * j2;
  return out;
}

}  // namespace detail

/// Embed a single d-dimensional system into a real 2d-dimensional one.
inline EmbeddedSystem embed_single(
    const DenseMatrix& rho,
    const std::vector<std::vector<DenseMatrix>>& povms) {
  detail::require_state(rho, "embed_single");
  const int d = static_cast<int>(rho.m.rows());
  for (const auto& povm : povms) detail::require_povm(povm, d, "embed_single");

  EmbeddedSystem out;
  out.original_dims = {d};
  out.embedded_dims = {2 * d};
  out.state = DenseMatrix(detail::embed_state_term(rho.m), {d, 2});
  out.effects.resize(1);
  for (const auto& povm : povms) {
    std::vector<DenseMatrix> mapped;
    mapped.reserve(povm.size());
    for (const DenseMatrix& e : povm)
      mapped.emplace_back(detail::embed_effect_term(e.m), std::vector<int>{d, 2});
    out.effects[0].push_back(std::move(mapped));
  }
  return out;
}

/// Embed a bipartite state, one ancilla per party: ordering (A, A_anc, B, B_anc).
inline EmbeddedSystem embed_bipartite(
    const DenseMatrix& rho_ab,
    const std::vector<std::vector<DenseMatrix>>& alice_povms,
    const std::vector<std::vector<DenseMatrix>>& bob_povms) {
  detail::require_state(rho_ab, "embed_bipartite");
  if (rho_ab.dims.size() != 2)
    throw std::invalid_argument("embed_bipartite: state needs dims = {dA, dB}");
  const int da = rho_ab.dims[0], db = rho_ab.dims[1];
  for (const auto& p : alice_povms) detail::require_povm(p, da, "embed_bipartite[A]");
  for (const auto& p : bob_povms) detail::require_povm(p, db, "embed_bipartite[B]");

  // rho~ = (rho (x) |+i,+i><..| + rho* (x) |-i,-i><..|)/2 built on
  // (A,B,Aanc,Banc), then permuted to (A,Aanc,B,Banc).
  const DenseMatrix pp = projector(ket_plus_i());
  const DenseMatrix pm = projector(ket_minus_i());
  DenseMatrix body(rho_ab.m, {da, db});
  DenseMatrix conj_body(conjugate(rho_ab).m, {da, db});
  DenseMatrix big = tensor(tensor(body, pp), pp);
  big.m = 0.5 * (big.m + tensor(tensor(conj_body, pm), pm).m);
  const DenseMatrix reordered = permute_systems(big, {0, 2, 1, 3});

  EmbeddedSystem out;
  out.original_dims = {da, db};
  out.embedded_dims = {2 * da, 2 * db};
  out.state = DenseMatrix(reordered.m, {da, 2, db, 2});
  out.effects.resize(2);
  for (const auto& p : alice_povms) {
    std::vector<DenseMatrix> mapped;
    for (const DenseMatrix& e : p)
      mapped.emplace_back(detail::embed_effect_term(e.m), std::vector<int>{da, 2});
    out.effects[0].push_back(std::move(mapped));
  }
  for (const auto& p : bob_povms) {
    std::vector<DenseMatrix> mapped;
    for (const DenseMatrix& e : p)
      mapped.emplace_back(detail::embed_effect_term(e.m), std::vector<int>{db, 2});
    out.effects[1].push_back(std::move(mapped));
  }
  return out;
}

/// Classical-basis real simulation of N independent preparations measured
/// jointly: source i emits |p_i><p_i| and the joint effects become
/// M_r = sum_p P(r|p_1..p_N) |p_1..p_N><p_1..p_N|.
struct ClassicalSimulation {
  std::vector<std::vector<DenseMatrix>> states;  // states[i][p]: basis projectors
  std::vector<DenseMatrix> effects;              // diagonal real effects
  std::vector<int> dims;                         // {P_1, ..., P_N}
};

inline ClassicalSimulation simulate_independent_preparations(
    const std::vector<std::vector<DenseMatrix>>& prep_sets,
    const std::vector<DenseMatrix>& measurement) {
  if (prep_sets.empty())
    throw std::invalid_argument("simulate_independent_preparations: no sources");
  int joint = 1;
  std::vector<int> source_dim, counts;
  for (const auto& preps : prep_sets) {
    if (preps.empty())
      throw std::invalid_argument("simulate_independent_preparations: empty source");
    for (const DenseMatrix& rho : preps)
      detail::require_state(rho, "simulate_independent_preparations");
    source_dim.push_back(static_cast<int>(preps[0].m.rows()));
    counts.push_back(static_cast<int>(preps.size()));
    joint *= source_dim.back();
  }
  detail::require_povm(measurement, joint, "simulate_independent_preparations");

  const int n = static_cast<int>(prep_sets.size());
  int label_space = 1;
  for (int c : counts) label_space *= c;

  ClassicalSimulation out;
  out.dims = counts;
  out.states.resize(n);
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < counts[i]; ++p)
      out.states[i].push_back(projector(basis_ket(counts[i], p)));

  for (const DenseMatrix& effect : measurement) {
    Mat diag = Mat::Zero(label_space, label_space);
    for (int lbl = 0; lbl < label_space; ++lbl) {
      // decode mixed-radix label, source 0 most significant
      std::vector<int> digit(n);
      int rem = lbl;
      for (int i = n - 1; i >= 0; --i) {
        digit[i] = rem % counts[i];
        rem /= counts[i];
      }
      Mat rho_joint(1, 1);
      rho_joint(0, 0) = 1.0;
      for (int i = 0; i < n; ++i) {
        Mat next(rho_joint.rows() * source_dim[i], rho_joint.cols() * source_dim[i]);
        const Mat& rho_i = prep_sets[i][digit[i]].m;
        for (int r = 0; r < rho_joint.rows(); ++r)
          for (int c = 0; c < rho_joint.cols(); ++c)
            next.block(r * source_dim[i], c * source_dim[i], source_dim[i],
                       source_dim[i]) = rho_joint(r, c) * rho_i;
        rho_joint = std::move(next);
      }
      diag(lbl, lbl) =
          (rho_joint.array() * effect.m.transpose().array()).sum().real();
    }
    out.effects.emplace_back(std::move(diag), counts);
  }
  return out;
}

/// The map a per-link embedding would force on an operator spanning two
/// independently embedded systems: O |-> O (x) P(+i)(x)P(+i) + O* (x) P(-i)(x)P(-i)
/// on (B1, B2, B1_anc, B2_anc), reordered to (B1, B1_anc, B2, B2_anc).
/// Used by the negative control: applied to a complex Bell measurement the
/// mapped effects stay real (the two terms are mutual conjugates) but they
/// no longer sum to the identity -- the map is not measurement-preserving.
inline DenseMatrix naive_joint_embedding(const DenseMatrix& op) {
  if (op.dims.size() != 2)
    throw std::invalid_argument("naive_joint_embedding: dims must be {d1, d2}");
  const DenseMatrix pp = projector(ket_plus_i());
  const DenseMatrix pm = projector(ket_minus_i());
  DenseMatrix mapped = tensor(tensor(op, pp), pp);
  mapped.m += tensor(tensor(conjugate(op), pm), pm).m;
  return permute_systems(mapped, {0, 2, 1, 3});
}

/// Outcome of the negative control on the swap network's middle party.
struct NegativeControl {
  bool reality_ok = false;       // every mapped effect real?
  bool completeness_ok = false;  // mapped effects sum to identity?
  double max_imag = 0.0;
  double completeness_defect = 0.0;
};

/// Embed the two links independently and transplant the complex Bell
/// measurement across them with the only map locality allows. This must
/// fail — a per-link real embedding cannot simulate the joint measurement —
/// and the returned report records exactly how it fails.
inline NegativeControl negative_control_bob() {
  const Strategy s = ideal_strategy();
  NegativeControl out;
  Mat sum = Mat::Zero(16, 16);
  out.reality_ok = true;
  for (int b = 0; b < 4; ++b) {
    const DenseMatrix mapped = naive_joint_embedding(s.bob[b]);
    const double mi = mapped.m.imag().cwiseAbs().maxCoeff();
    out.max_imag = std::max(out.max_imag, mi);
    if (mi > kRealTol) out.reality_ok = false;
    sum += mapped.m;
  }
  out.completeness_defect = (sum - Mat::Identity(16, 16)).cwiseAbs().maxCoeff();
  out.completeness_ok = out.completeness_defect <= kDefaultTol;
  return out;
}

}  // namespace realnet
