// realnet/bellfunc.hpp — Bell functionals for the swap network: the
// unnormalized correlators S^b_{xz}, the per-outcome functional T_b, the
// total T, the three-fold CHSH combination with classical bound 6, and the
// visibility threshold sqrt(bound / (6 sqrt 2)).
#pragma once

#include <array>
#include <cmath>
#include <optional>

#include "realnet/netsim.hpp"
#include "realnet/qcore.hpp"

namespace realnet {

inline const double kSixSqrt2 = 6.0 * kSqrt2;  // 8.485281374238571

/// The per-b functional as the six-term signed combination over the
/// (x, z) pairs below. Each term's sign for outcome bits (b1, b2) is
/// coef * (-1)^(e1*b1 + e2*b2). Settings here are 1-indexed as in all
/// human-facing I/O.
struct TbTerm {
  int x, z;       // 1-indexed setting pair
  int coef;       // +1 or -1
  int e1, e2;     // exponents of (-1)^{b1}, (-1)^{b2}
};

/// T_b(P) = (-1)^{b2} (S_{11} + S_{12}) + (-1)^{b1} (S_{21} - S_{22})
///        + (-1)^{b2} (S_{13} + S_{14}) + (-1)^{b1+b2} (-S_{33} + S_{34})
///        + (-1)^{b1} (S_{25} + S_{26}) + (-1)^{b1+b2} (-S_{35} + S_{36}).
inline constexpr std::array<TbTerm, 12> kTbTerms = {{
    {1, 1, +1, 0, 1}, {1, 2, +1, 0, 1},
    {2, 1, +1, 1, 0}, {2, 2, -1, 1, 0},
    {1, 3, +1, 0, 1}, {1, 4, +1, 0, 1},
    {3, 3, -1, 1, 1}, {3, 4, +1, 1, 1},
    {2, 5, +1, 1, 0}, {2, 6, +1, 1, 0},
    {3, 5, -1, 1, 1}, {3, 6, +1, 1, 1},
}};

/// Aggregate score: the four T_b values, their sum, and the outcome weights.
struct BellScore {
  std::array<double, 4> per_b{};
  double total = 0.0;
  std::array<double, 4> p_b{};
};

/// S^b_{xz} = sum_{a,c in {+1,-1}} a*c*P(a,b,c|x,z) — joint correlator
/// weighted by outcome signs, NOT normalized by P(b). Settings 0-indexed.
inline double correlator(const CorrelationTensor& t, int b, int x, int z) {
  if (b < 0 || b > 3 || x < 0 || x > 2 || z < 0 || z > 5)
    throw std::invalid_argument("correlator: index out of range");
  return t.p[b][x][z][0][0] - t.p[b][x][z][0][1] - t.p[b][x][z][1][0] +
         t.p[b][x][z][1][1];
}

/// The six-term signed combination for outcome b (0..3, bits b = 2*b1+b2).
inline double t_b(const CorrelationTensor& t, int b) {
  if (b < 0 || b > 3) throw std::invalid_argument("t_b: b out of range");
  const int b1 = (b >> 1) & 1, b2 = b & 1;
  double acc = 0.0;
  for (const auto& term : kTbTerms) {
    const int sgn = term.coef * (((term.e1 * b1 + term.e2 * b2) % 2) ? -1 : 1);
    acc += sgn * correlator(t, b, term.x - 1, term.z - 1);
  }
  return acc;
}

/// Total functional T(P) = sum_b T_b(P) plus the outcome weights P(b).
inline BellScore t_total(const CorrelationTensor& t) {
  BellScore s;
  for (int b = 0; b < 4; ++b) {
    s.per_b[b] = t_b(t, b);
    s.p_b[b] = t.marginal_b(b, 0, 0);
    s.total += s.per_b[b];
  }
  return s;
}

/// Conditional (normalized) value T_b / P(b); empty when P(b) < 1e-12
/// (a null event must not fabricate a violation).
inline std::optional<double> t_b_conditional(const CorrelationTensor& t, int b) {
  const double pb = t.marginal_b(b, 0, 0);
  if (pb < 1e-12) return std::nullopt;
  return t_b(t, b) / pb;
}

/// Triple CHSH combination on a 3x6 table of two-party correlators
/// E[x][z] = <A_x C_z> (0-indexed): the sum of three CHSH expressions over
/// the setting groups (1,2;1,2), (1,3;3,4), (2,3;5,6), with the sign
/// placement of the b=00 instance of kTbTerms:
///   (E11+E12) + (E21-E22) + (E13+E14) + (-E33+E34) + (E25+E26) + (-E35+E36).
/// Classical bound 6; quantum maximum 6*sqrt2.
inline double chsh3_value(const std::array<std::array<double, 6>, 3>& E,
                          double tol = kDefaultTol) {
  for (const auto& row : E)
    for (double e : row)
      if (std::abs(e) > 1.0 + tol)
        throw std::invalid_argument("chsh3_value: correlator outside [-1,1]");
  double acc = 0.0;
  for (const auto& term : kTbTerms) acc += term.coef * E[term.x - 1][term.z - 1];
  return acc;
}

/// Largest visibility that a given Bell bound still tolerates:
/// v = sqrt(bound / (6 sqrt 2)) since T scales as v^2 under link noise.
inline double visibility_threshold(double bound) {
  if (bound < 0.0 || bound > kSixSqrt2 + 1e-12)
    throw std::invalid_argument("visibility_threshold: bound out of range");
  return std::sqrt(bound / kSixSqrt2);
}

inline void to_json(nlohmann::json& j, const BellScore& s) {
  static const char* bname[4] = {"00", "01", "10", "11"};
  nlohmann::json tb, pb;
  for (int b = 0; b < 4; ++b) {
    tb[bname[b]] = s.per_b[b];
    pb[bname[b]] = s.p_b[b];
  }
  j = nlohmann::json{{"t_b", tb}, {"total", s.total}, {"p_b", pb}};
}

}  // namespace realnet
