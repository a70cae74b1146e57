// realnet/netsim.hpp — the two-source swap network: strategies (states +
// measurements for Alice, Bob, Charlie), the full correlation tensor via the
// Born rule, white-noise application, shared-randomness mixtures, and
// finite-statistics sampling.
//
// Scenario: source 1 feeds Alice (A) and Bob's first qubit (B1); source 2
// feeds Bob's second qubit (B2) and Charlie (C). Alice has 3 two-outcome
// settings, Charlie 6; Bob performs a fixed four-outcome measurement.
// The joint ordering of tensor factors is A (x) B1 (x) B2 (x) C.
//
// Indexing: settings are 0-indexed internally and 1-indexed in all
// human-facing I/O (x in 1..3, z in 1..6). Outcome index 0 means +1 and
// index 1 means -1 for Alice/Charlie. Bob's outcome is the bit pair
// b = 2*b1 + b2 with the frozen Bell-label bijection of qcore::bell_label.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "realnet/qcore.hpp"

namespace realnet {

/// States and measurements for one round of the swap scenario.
struct Strategy {
  DenseMatrix state_ab1;               // density matrix on A (x) B1
  DenseMatrix state_b2c;               // density matrix on B2 (x) C
  std::array<DenseMatrix, 3> alice;    // dichotomic observables on A
  std::array<DenseMatrix, 4> bob;      // projectors on B1 (x) B2, complete
  std::array<DenseMatrix, 6> charlie;  // dichotomic observables on C
};

/// Validate the Strategy invariants; returns a list of human-readable
/// violations (empty means valid).
inline std::vector<std::string> validate(const Strategy& s,
                                         double tol = kDefaultTol) {
  std::vector<std::string> issues;
  auto check_state = [&](const DenseMatrix& rho, const char* name) {
    if (!is_psd(rho, tol)) issues.push_back(std::string(name) + " not PSD");
    if (std::abs(rho.m.trace().real() - 1.0) > tol)
      issues.push_back(std::string(name) + " trace != 1");
  };
  check_state(s.state_ab1, "state_ab1");
  check_state(s.state_b2c, "state_b2c");
  auto check_obs = [&](const DenseMatrix& o, const std::string& name) {
    if (!is_hermitian(o, tol)) issues.push_back(name + " not Hermitian");
    Mat sq = o.m * o.m;
    if ((sq - Mat::Identity(o.rows(), o.cols())).cwiseAbs().maxCoeff() > tol)
      issues.push_back(name + " not an involution (O^2 != I)");
  };
  for (int x = 0; x < 3; ++x)
    check_obs(s.alice[x], "alice[" + std::to_string(x) + "]");
  for (int z = 0; z < 6; ++z)
    check_obs(s.charlie[z], "charlie[" + std::to_string(z) + "]");
  Mat sum = Mat::Zero(s.bob[0].rows(), s.bob[0].cols());
  for (int b = 0; b < 4; ++b) {
    const auto& p = s.bob[b];
    if (!is_hermitian(p, tol)) issues.push_back("bob[" + std::to_string(b) + "] not Hermitian");
    if ((p.m * p.m - p.m).cwiseAbs().maxCoeff() > tol)
      issues.push_back("bob[" + std::to_string(b) + "] not a projector");
    for (int b2 = 0; b2 < b; ++b2)
      if ((s.bob[b].m * s.bob[b2].m).cwiseAbs().maxCoeff() > tol)
        issues.push_back("bob projectors " + std::to_string(b2) + "," +
                         std::to_string(b) + " not orthogonal");
    sum += p.m;
  }
  if ((sum - Mat::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff() > tol)
    issues.push_back("bob projectors incomplete");
  // dimensional compatibility
  const auto dA = s.alice[0].rows(), dC = s.charlie[0].rows();
  const auto dB1 = s.state_ab1.rows() / dA, dB2 = s.state_b2c.rows() / dC;
  if (s.state_ab1.rows() != dA * dB1 || s.bob[0].rows() != dB1 * dB2 ||
      s.state_b2c.rows() != dB2 * dC)
    issues.push_back("dimension mismatch across A, B1, B2, C");
  return issues;
}

/// Full distribution P(a,b,c|x,z): p[b][x][z][ia][ic] with outcome indices
/// ia, ic in {0,1} encoding a = +1, -1 (and likewise c).
struct CorrelationTensor {
  double p[4][3][6][2][2] = {};

  /// sum_{a,c} p(a,b,c|x,z) for given (b,x,z) — equals P(b) for valid input.
  double marginal_b(int b, int x, int z) const {
    double t = 0;
    for (int ia = 0; ia < 2; ++ia)
      for (int ic = 0; ic < 2; ++ic) t += p[b][x][z][ia][ic];
    return t;
  }
};

/// Tensor invariant check: nonnegativity, normalization, no-signalling.
inline std::vector<std::string> validate(const CorrelationTensor& t,
                                         double tol = 1e-10) {
  std::vector<std::string> issues;
  for (int x = 0; x < 3; ++x)
    for (int z = 0; z < 6; ++z) {
      double total = 0;
      for (int b = 0; b < 4; ++b)
        for (int ia = 0; ia < 2; ++ia)
          for (int ic = 0; ic < 2; ++ic) {
            const double v = t.p[b][x][z][ia][ic];
            if (v < -1e-12)
              issues.push_back("negative probability at b=" + std::to_string(b));
            total += v;
          }
      if (std::abs(total - 1.0) > tol)
        issues.push_back("normalization fails at x=" + std::to_string(x + 1) +
                         " z=" + std::to_string(z + 1));
    }
  // no-signalling: sum_a p independent of x; sum_c p independent of z
  for (int b = 0; b < 4; ++b) {
    for (int z = 0; z < 6; ++z)
      for (int ic = 0; ic < 2; ++ic) {
        double ref = 0;
        for (int ia = 0; ia < 2; ++ia) ref += t.p[b][0][z][ia][ic];
        for (int x = 1; x < 3; ++x) {
          double got = 0;
          for (int ia = 0; ia < 2; ++ia) got += t.p[b][x][z][ia][ic];
          if (std::abs(got - ref) > tol)
            issues.push_back("signalling A->C at b=" + std::to_string(b));
        }
      }
    for (int x = 0; x < 3; ++x)
      for (int ia = 0; ia < 2; ++ia) {
        double ref = 0;
        for (int ic = 0; ic < 2; ++ic) ref += t.p[b][x][0][ia][ic];
        for (int z = 1; z < 6; ++z) {
          double got = 0;
          for (int ic = 0; ic < 2; ++ic) got += t.p[b][x][z][ia][ic];
          if (std::abs(got - ref) > tol)
            issues.push_back("signalling C->A at b=" + std::to_string(b));
        }
      }
  }
  return issues;
}

/// The ideal strategy: both sources emit |phi+>, Alice measures
/// (sigma_Z, sigma_X, sigma_Y), Bob measures in the Bell basis, and Charlie
/// measures the six rotated combinations
///   D_zx=(Z+X)/sqrt2, E_zx=(Z-X)/sqrt2, D_zy=(Z+Y)/sqrt2,
///   E_zy=(Z-Y)/sqrt2,  D_xy=(X+Y)/sqrt2, E_xy=(X-Y)/sqrt2
/// in that exact order z = 1..6.
inline Strategy ideal_strategy() {
  Strategy s;
  auto phi = projector(bell_basis()[0]);
  s.state_ab1 = phi;
  s.state_b2c = phi;
  s.alice = {pauli_z(), pauli_x(), pauli_y()};
  const auto bell = bell_basis();
  for (int b = 0; b < 4; ++b) s.bob[b] = projector(bell[b]);
  const Mat Z = pauli_z().m, X = pauli_x().m, Y = pauli_y().m;
  auto obs = [](Mat m) { return DenseMatrix(std::move(m), {2}); };
  s.charlie = {obs((Z + X) / kSqrt2), obs((Z - X) / kSqrt2),
               obs((Z + Y) / kSqrt2), obs((Z - Y) / kSqrt2),
               obs((X + Y) / kSqrt2), obs((X - Y) / kSqrt2)};
  return s;
}

/// P(a,b,c|x,z) = tr[(state_ab1 (x) state_b2c) (A_{a|x} (x) B_b (x) C_{c|z})]
/// with A_{a|x} = (I + a O_x)/2 and C_{c|z} = (I + c O_z)/2.
inline CorrelationTensor correlations(const Strategy& s) {
  const auto dA = s.alice[0].rows(), dC = s.charlie[0].rows();
  const auto dB1 = s.state_ab1.rows() / dA, dB2 = s.state_b2c.rows() / dC;
  if (dA * dB1 != s.state_ab1.rows() || dB2 * dC != s.state_b2c.rows() ||
      dB1 * dB2 != s.bob[0].rows())
    throw std::invalid_argument("correlations: dimension mismatch");

  DenseMatrix sa = s.state_ab1, sb = s.state_b2c;
  sa.dims = {static_cast<int>(dA), static_cast<int>(dB1)};
  sb.dims = {static_cast<int>(dB2), static_cast<int>(dC)};
  const DenseMatrix state = tensor(sa, sb);  // A (x) B1 (x) B2 (x) C

  const Mat IA = Mat::Identity(dA, dA), IC = Mat::Identity(dC, dC);
  CorrelationTensor t;
  for (int b = 0; b < 4; ++b) {
    DenseMatrix pb = s.bob[b];
    pb.dims = {static_cast<int>(dB1), static_cast<int>(dB2)};
    for (int x = 0; x < 3; ++x)
      for (int ia = 0; ia < 2; ++ia) {
        const double a = ia == 0 ? 1.0 : -1.0;
        DenseMatrix ax(Mat((IA + a * s.alice[x].m) / 2.0),
                       {static_cast<int>(dA)});
        for (int z = 0; z < 6; ++z)
          for (int ic = 0; ic < 2; ++ic) {
            const double c = ic == 0 ? 1.0 : -1.0;
            DenseMatrix cz(Mat((IC + c * s.charlie[z].m) / 2.0),
                           {static_cast<int>(dC)});
            const DenseMatrix effect = tensor(ax, pb, cz);
            t.p[b][x][z][ia][ic] = born(state, effect);
          }
      }
  }
  return t;
}

/// Replace each link state rho with v*rho + (1-v)*I/4 (white noise of
/// visibility v on both sources); measurements unchanged.
inline Strategy apply_white_noise(const Strategy& s, double v) {
  if (v < 0.0 || v > 1.0)
    throw std::invalid_argument("apply_white_noise: v outside [0,1]");
  if (s.state_ab1.rows() != 4 || s.state_b2c.rows() != 4)
    throw std::invalid_argument("apply_white_noise: link states must be 4x4");
  Strategy out = s;
  const Mat mix = Mat::Identity(4, 4) / 4.0;
  out.state_ab1.m = v * s.state_ab1.m + (1.0 - v) * mix;
  out.state_b2c.m = v * s.state_b2c.m + (1.0 - v) * mix;
  return out;
}

/// Shared randomness: average of correlation tensors with the given weights
/// (weights must be nonnegative and sum to 1).
inline CorrelationTensor mix(
    const std::vector<std::pair<double, Strategy>>& ensemble,
    double tol = 1e-10) {
  double wsum = 0;
  CorrelationTensor out;
  for (const auto& [w, strat] : ensemble) {
    if (w < -1e-15) throw std::invalid_argument("mix: negative weight");
    wsum += w;
    const CorrelationTensor t = correlations(strat);
    for (int b = 0; b < 4; ++b)
      for (int x = 0; x < 3; ++x)
        for (int z = 0; z < 6; ++z)
          for (int ia = 0; ia < 2; ++ia)
            for (int ic = 0; ic < 2; ++ic)
              out.p[b][x][z][ia][ic] += w * t.p[b][x][z][ia][ic];
  }
  if (std::abs(wsum - 1.0) > tol)
    throw std::invalid_argument("mix: weights do not sum to 1");
  return out;
}

/// One sampled round and aggregate counts.
struct SampleReport {
  CorrelationTensor frequencies;            // empirical p
  std::uint64_t counts[4][3][6][2][2] = {};
  std::uint64_t rounds = 0;
};

namespace detail {
/// Implementation-independent uniform integer in [0, n) from a mt19937_64
/// stream (rejection sampling), so seeded runs are stable across platforms.
inline std::uint64_t uniform_below(std::mt19937_64& eng, std::uint64_t n) {
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
  std::uint64_t r;
  do {
    r = eng();
  } while (r >= limit);
  return r % n;
}
}  // namespace detail

/// i.i.d. sampling with uniform settings; deterministic given the seed.
inline SampleReport sample(const CorrelationTensor& t, std::uint64_t rounds,
                           std::uint64_t seed) {
  if (rounds == 0) throw std::invalid_argument("sample: rounds must be > 0");
  std::mt19937_64 eng(seed);
  SampleReport rep;
  rep.rounds = rounds;
  for (std::uint64_t r = 0; r < rounds; ++r) {
    const int x = static_cast<int>(detail::uniform_below(eng, 3));
    const int z = static_cast<int>(detail::uniform_below(eng, 6));
    // inverse-CDF draw over the 16 outcomes of this setting pair
    const double u =
        static_cast<double>(eng() >> 11) * 0x1.0p-53;  // uniform [0,1)
    double acc = 0.0;
    int hit = 15;
    for (int k = 0; k < 16; ++k) {
      const int b = k >> 2, ia = (k >> 1) & 1, ic = k & 1;
      acc += t.p[b][x][z][ia][ic];
      if (u < acc) {
        hit = k;
        break;
      }
    }
    ++rep.counts[hit >> 2][x][z][(hit >> 1) & 1][hit & 1];
  }
  for (int b = 0; b < 4; ++b)
    for (int x = 0; x < 3; ++x)
      for (int z = 0; z < 6; ++z)
        for (int ia = 0; ia < 2; ++ia)
          for (int ic = 0; ic < 2; ++ic) {
            // each (x,z) pair is drawn with probability 1/18
            const double n_xz = static_cast<double>(rounds) / 18.0;
            rep.frequencies.p[b][x][z][ia][ic] =
                static_cast<double>(rep.counts[b][x][z][ia][ic]) / n_xz;
          }
  return rep;
}

/// JSON schema {"settings":{"x":3,"z":6},"p":{b:{x:{z:{a:{c:value}}}}}}
/// with b as "00".."11" and a, c as "+1"/"-1"; x, z are 1-indexed strings.
inline void to_json(nlohmann::json& j, const CorrelationTensor& t) {
  static const char* bname[4] = {"00", "01", "10", "11"};
  static const char* oname[2] = {"+1", "-1"};
  nlohmann::json p;
  for (int b = 0; b < 4; ++b)
    for (int x = 0; x < 3; ++x)
      for (int z = 0; z < 6; ++z)
        for (int ia = 0; ia < 2; ++ia)
          for (int ic = 0; ic < 2; ++ic)
            p[bname[b]][std::to_string(x + 1)][std::to_string(z + 1)]
             [oname[ia]][oname[ic]] = t.p[b][x][z][ia][ic];
  j = nlohmann::json{{"settings", {{"x", 3}, {"z", 6}}}, {"p", p}};
}

inline void from_json(const nlohmann::json& j, CorrelationTensor& t) {
  static const char* bname[4] = {"00", "01", "10", "11"};
  static const char* oname[2] = {"+1", "-1"};
  const auto& p = j.at("p");
  for (int b = 0; b < 4; ++b)
    for (int x = 0; x < 3; ++x)
      for (int z = 0; z < 6; ++z)
        for (int ia = 0; ia < 2; ++ia)
          for (int ic = 0; ic < 2; ++ic)
            t.p[b][x][z][ia][ic] =
                p.at(bname[b]).at(std::to_string(x + 1)).at(std::to_string(z + 1))
                 .at(oname[ia]).at(oname[ic]).get<double>();
}

}  // namespace realnet
