#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "realnet/bellfunc.hpp"
#include "realnet/netsim.hpp"

using namespace realnet;
using Catch::Matchers::WithinAbs;

TEST_CASE("term table shape") {
  // 12 terms, each (x,z) pair at most once, z settings 1/2 paired with x=1,2
  REQUIRE(kTbTerms.size() == 12);
  bool seen[3][6] = {};
  for (const TbTerm& t : kTbTerms) {
    REQUIRE(t.x >= 1);
    REQUIRE(t.x <= 3);
    REQUIRE(t.z >= 1);
    REQUIRE(t.z <= 6);
    REQUIRE((t.coef == 1 || t.coef == -1));
    REQUIRE(!seen[t.x - 1][t.z - 1]);
    seen[t.x - 1][t.z - 1] = true;
  }
}

TEST_CASE("per-outcome scores on the ideal network") {
  const CorrelationTensor t = correlations(ideal_strategy());
  const BellScore score = t_total(t);
  SECTION("each branch contributes 6 sqrt2 / 4") {
    for (int b = 0; b < 4; ++b) {
      REQUIRE_THAT(score.per_b[b], WithinAbs(kSixSqrt2 / 4.0, 1e-12));
      REQUIRE_THAT(score.p_b[b], WithinAbs(0.25, 1e-12));
    }
    REQUIRE_THAT(score.total, WithinAbs(kSixSqrt2, 1e-12));
  }
  SECTION("conditional correlators match the ideal table for b=00") {
    // E_xz = S^b_xz / P(b); ideal values are +-1/sqrt2 on the 12 used pairs
    const double r = 1.0 / std::sqrt(2.0);
    const double want[3][6] = {
        {r, r, r, r, 0, 0}, {r, -r, 0, 0, r, r}, {0, 0, -r, r, -r, r}};
    for (const TbTerm& term : kTbTerms) {
      const int x = term.x - 1, z = term.z - 1;
      const double e = correlator(t, 0, x, z) / t.marginal_b(0, x, z);
      REQUIRE_THAT(e, WithinAbs(want[x][z], 1e-12));
    }
  }
  SECTION("conditional score equals per-branch score over P(b)") {
    for (int b = 0; b < 4; ++b) {
      const auto c = t_b_conditional(t, b);
      REQUIRE(c.has_value());
      REQUIRE_THAT(*c, WithinAbs(kSixSqrt2, 1e-12));
    }
  }
}

TEST_CASE("T is linear in the correlation tensor") {
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const CorrelationTensor a = correlations(ideal_strategy());
  const CorrelationTensor b =
      correlations(apply_white_noise(ideal_strategy(), 0.42));
  const double w = u(rng);
  CorrelationTensor m;
  for (int bb = 0; bb < 4; ++bb)
    for (int x = 0; x < 3; ++x)
      for (int z = 0; z < 6; ++z)
        for (int ia = 0; ia < 2; ++ia)
          for (int ic = 0; ic < 2; ++ic)
            m.p[bb][x][z][ia][ic] =
                w * a.p[bb][x][z][ia][ic] + (1 - w) * b.p[bb][x][z][ia][ic];
  REQUIRE_THAT(t_total(m).total,
               WithinAbs(w * t_total(a).total + (1 - w) * t_total(b).total,
                         1e-12));
  for (int bb = 0; bb < 4; ++bb)
    REQUIRE_THAT(t_b(m, bb),
                 WithinAbs(w * t_b(a, bb) + (1 - w) * t_b(b, bb), 1e-12));
}

TEST_CASE("correlator sign convention") {
  // construct a tensor in which only (b=0,x=1,z=1) carries weight, all on a=c
  CorrelationTensor t{};
  for (int b = 0; b < 4; ++b)
    for (int x = 0; x < 3; ++x)
      for (int z = 0; z < 6; ++z)
        for (int ia = 0; ia < 2; ++ia)
          for (int ic = 0; ic < 2; ++ic)
            t.p[b][x][z][ia][ic] = 1.0 / 16.0;  // uniform: all correlators 0
  t.p[0][0][0][0][0] = 0.125;
  t.p[0][0][0][0][1] = 0.0;
  t.p[0][0][0][1][0] = 0.0;
  t.p[0][0][0][1][1] = 0.125;
  REQUIRE(validate(t).empty());
  REQUIRE_THAT(correlator(t, 0, 0, 0), WithinAbs(0.25, 1e-15));
  REQUIRE_THAT(correlator(t, 0, 0, 1), WithinAbs(0.0, 1e-15));
  // anti-correlated instead
  t.p[0][0][0][0][0] = 0.0;
  t.p[0][0][0][0][1] = 0.125;
  t.p[0][0][0][1][0] = 0.125;
  t.p[0][0][0][1][1] = 0.0;
  REQUIRE_THAT(correlator(t, 0, 0, 0), WithinAbs(-0.25, 1e-15));
}

TEST_CASE("conditional correlator undefined on zero-probability branch") {
  CorrelationTensor t{};
  // all weight on b=0, so branches 1..3 have P(b)=0
  for (int x = 0; x < 3; ++x)
    for (int z = 0; z < 6; ++z)
      for (int ia = 0; ia < 2; ++ia)
        for (int ic = 0; ic < 2; ++ic) t.p[0][x][z][ia][ic] = 0.25;
  REQUIRE(validate(t).empty());
  REQUIRE(t_b_conditional(t, 0).has_value());
  REQUIRE(!t_b_conditional(t, 1).has_value());
  REQUIRE(!t_b_conditional(t, 3).has_value());
}

TEST_CASE("three-input CHSH combination") {
  SECTION("ideal conditional correlators reach 6 sqrt2") {
    const CorrelationTensor t = correlations(ideal_strategy());
    std::array<std::array<double, 6>, 3> e{};
    for (int x = 0; x < 3; ++x)
      for (int z = 0; z < 6; ++z)
        e[x][z] = correlator(t, 0, x, z) / t.marginal_b(0, x, z);
    REQUIRE_THAT(chsh3_value(e), WithinAbs(kSixSqrt2, 1e-12));
  }
  SECTION("deterministic strategies cannot exceed 6") {
    // exhaustive search over all +-1 assignments to 3 + 6 observables
    double best = -1e9;
    for (int ma = 0; ma < 8; ++ma)
      for (int mc = 0; mc < 64; ++mc) {
        std::array<std::array<double, 6>, 3> e{};
        for (int x = 0; x < 3; ++x)
          for (int z = 0; z < 6; ++z)
            e[x][z] = ((ma >> x) & 1 ? 1.0 : -1.0) * ((mc >> z) & 1 ? 1.0 : -1.0);
        best = std::max(best, chsh3_value(e));
      }
    REQUIRE_THAT(best, WithinAbs(6.0, 1e-12));
  }
  SECTION("rejects out-of-range correlators") {
    std::array<std::array<double, 6>, 3> e{};
    e[0][0] = 1.5;
    REQUIRE_THROWS_AS(chsh3_value(e), std::invalid_argument);
  }
}

TEST_CASE("visibility threshold") {
  // T(v) = 6 sqrt2 v^2, so the v solving T(v) = bound is sqrt(bound / 6 sqrt2)
  REQUIRE_THAT(visibility_threshold(kSixSqrt2), WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(visibility_threshold(7.6605), WithinAbs(0.9502, 1e-4));
  const double v = visibility_threshold(7.0);
  const CorrelationTensor t =
      correlations(apply_white_noise(ideal_strategy(), v));
  REQUIRE_THAT(t_total(t).total, WithinAbs(7.0, 1e-9));
  REQUIRE_THROWS_AS(visibility_threshold(-1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(visibility_threshold(9.0), std::invalid_argument);
}

TEST_CASE("BellScore JSON") {
  const BellScore s = t_total(correlations(ideal_strategy()));
  nlohmann::json j = s;
  REQUIRE_THAT(j.at("total").get<double>(), WithinAbs(kSixSqrt2, 1e-12));
  REQUIRE(j.at("t_b").size() == 4);
  REQUIRE(j.at("p_b").size() == 4);
  REQUIRE_THAT(j.at("t_b").at("11").get<double>(),
               WithinAbs(kSixSqrt2 / 4.0, 1e-12));
}
