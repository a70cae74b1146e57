#pragma once

// Semidefinite programming in the linear-matrix-inequality form
//
//     maximize    objective . x  +  objective_constant
//     subject to  S_k(x) = sum_j x_j A_kj - C_k  >= 0   for every block k
//
// (diagonal blocks carry elementwise inequalities). The solver is an
// infeasible-start primal-dual interior-point method with Nesterov-Todd
// scaling and a Mehrotra predictor-corrector, using a dense Cholesky of the
// Schur complement. Internally it works on the standard pair
//
//     (P) min  b.y   s.t.  Z = sum_j y_j A_j - C >= 0        (b = -objective)
//     (D) max <C, X> s.t.  <A_j, X> = b_j,  X >= 0
//
// so the returned dual matrices X are upper-bound certificates for the
// maximization: any Y >= 0 with <A_j, Y> = -objective_j proves
// objective . x <= -<C, Y>.
//
// The SDPA sparse interchange (.dat-s) export writes the equivalent
// minimization (line 4 holds -objective); the objective constant rides in a
// leading "*offset" comment so import reproduces the problem exactly.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "realnet/qcore.hpp"

namespace realnet {

using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// One coefficient entry of sum_j x_j A_j: block-local, upper triangle
/// (row <= col); an off-diagonal entry stands for the symmetric pair.
struct SdpEntry {
  int var = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// One entry of the constant matrix C of a block.
struct SdpConstEntry {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct SdpBlock {
  std::string name;
  int dim = 0;
  bool diag = false;  // diagonal block: only row == col entries allowed
  std::vector<SdpEntry> entries;
  std::vector<SdpConstEntry> constants;
};

struct SdpProblem {
  int num_vars = 0;
  std::vector<double> objective;  // maximize objective . x
  double objective_constant = 0.0;
  std::vector<SdpBlock> blocks;
  // Optional metadata enabling rigorous certificate corrections: per-variable
  // bounds |x_j| <= x_abs_bound[j], and a bound on sum_k tr S_k(x) over the
  // feasible set. Empty / zero mean unknown.
  std::vector<double> x_abs_bound;
  double slack_trace_bound = 0.0;
  std::string description;
};

inline std::vector<std::string> validate(const SdpProblem& p) {
  std::vector<std::string> issues;
  if (p.num_vars < 0) issues.push_back("negative variable count");
  if (static_cast<int>(p.objective.size()) != p.num_vars)
    issues.push_back("objective length != num_vars");
  for (double c : p.objective)
    if (!std::isfinite(c)) issues.push_back("non-finite objective coefficient");
  if (!std::isfinite(p.objective_constant))
    issues.push_back("non-finite objective constant");
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    const SdpBlock& b = p.blocks[k];
    const std::string tag = "block " + std::to_string(k) + " (" + b.name + "): ";
    if (b.dim <= 0) issues.push_back(tag + "non-positive dimension");
    for (const SdpEntry& e : b.entries) {
      if (e.var < 0 || e.var >= p.num_vars) issues.push_back(tag + "variable out of range");
      if (e.row < 0 || e.col < 0 || e.row >= b.dim || e.col >= b.dim ||
          e.row > e.col)
        issues.push_back(tag + "entry coordinates invalid");
      if (b.diag && e.row != e.col) issues.push_back(tag + "off-diagonal entry in diagonal block");
      if (!std::isfinite(e.value)) issues.push_back(tag + "non-finite entry");
    }
    for (const SdpConstEntry& e : b.constants) {
      if (e.row < 0 || e.col < 0 || e.row >= b.dim || e.col >= b.dim ||
          e.row > e.col)
        issues.push_back(tag + "constant coordinates invalid");
      if (b.diag && e.row != e.col)
        issues.push_back(tag + "off-diagonal constant in diagonal block");
      if (!std::isfinite(e.value)) issues.push_back(tag + "non-finite constant");
    }
    if (issues.size() > 20) {  // enough to diagnose; avoid flooding
      issues.push_back("...");
      return issues;
    }
  }
  return issues;
}

enum class SdpStatus { optimal, infeasible, numerical_failure };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::infeasible: return "infeasible";
    default: return "numerical-failure";
  }
}

struct SdpIterate {
  double mu, gap, rp, rd;      // duality measure, relative gap, residual norms
  double pobj, dobj;           // max-convention objective values (pobj <= dobj
                               // once both residuals vanish: dobj certifies)
  double comp, yrp, rdx;       // <X, Z> pairing, y . (b - A(X)), <Rd, X>;
                               // exact identity: dobj - pobj == comp + yrp + rdx,
                               // and comp >= 0, so the dual value certifies the
                               // primal as soon as both residual terms vanish
  double step_p, step_d;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::numerical_failure;
  double primal_value = std::numeric_limits<double>::quiet_NaN();
  double dual_value = std::numeric_limits<double>::quiet_NaN();
  std::vector<DenseMatrix> primal_blocks;  // slacks S_k(x)
  std::vector<DenseMatrix> dual_blocks;    // certificate matrices X_k
  std::vector<double> x;
  int iterations = 0;
  double duality_gap = std::numeric_limits<double>::quiet_NaN();
  double primal_residual = std::numeric_limits<double>::quiet_NaN();
  double dual_residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<SdpIterate> history;
};

struct SolveOptions {
  double gap_tol = 1e-7;
  double feas_tol = 1e-7;
  int max_iter = 120;
  bool verbose = false;
  int stall_window = 10;  // iterations without merit progress before bailing
};

namespace detail {

struct BlockWork {
  int n = 0;
  bool diag = false;
  // sorted coefficient entries and per-variable ranges
  std::vector<SdpEntry> ent;
  std::vector<int> vars;            // distinct variable ids, ascending
  std::vector<std::size_t> offs;    // vars[i] owns ent[offs[i]..offs[i+1])
  // dense state
  RMat C, X, Z, R, Rinv, Vlam_vecs;
  RVec Vlam;
  RMat V;
  // diagonal state
  RVec cd, xd, zd, wd, vd;
  std::vector<std::vector<std::pair<int, double>>> rows;  // per-coordinate vars
  double cnorm = 0.0;
};

inline RMat eig_apply(const RVec& w, const RMat& U, double (*f)(double)) {
  RVec fw(w.size());
  for (int i = 0; i < w.size(); ++i) fw(i) = f(w(i));
  return U * fw.asDiagonal() * U.transpose();
}

inline RMat symm(const RMat& m) { return 0.5 * (m + m.transpose()); }

inline double clip_pos(double v) { return v < 1e-300 ? 1e-300 : v; }

inline void eig_sym(const RMat& m, RVec& w, RMat& u) {
  Eigen::SelfAdjointEigenSolver<RMat> es(m);
  w = es.eigenvalues();
  u = es.eigenvectors();
}

inline BlockWork make_work(const SdpBlock& b) {
  BlockWork w;
  w.n = b.dim;
  w.diag = b.diag;
  w.ent = b.entries;
  std::stable_sort(w.ent.begin(), w.ent.end(), [](const SdpEntry& a, const SdpEntry& b2) {
    return a.var < b2.var;
  });
  for (std::size_t i = 0; i < w.ent.size(); ++i) {
    if (w.vars.empty() || w.vars.back() != w.ent[i].var) {
      w.vars.push_back(w.ent[i].var);
      w.offs.push_back(i);
    }
  }
  w.offs.push_back(w.ent.size());
  if (b.diag) {
    w.cd = RVec::Zero(b.dim);
    for (const SdpConstEntry& e : b.constants) w.cd(e.row) += e.value;
    w.rows.resize(b.dim);
    for (const SdpEntry& e : w.ent) w.rows[e.row].emplace_back(e.var, e.value);
    w.cnorm = w.cd.norm();
  } else {
    w.C = RMat::Zero(b.dim, b.dim);
    for (const SdpConstEntry& e : b.constants) {
      w.C(e.row, e.col) += e.value;
      if (e.row != e.col) w.C(e.col, e.row) += e.value;
    }
    w.cnorm = w.C.norm();
  }
  return w;
}

/// sum_j x_j A_j for one block.
inline RMat apply_dense(const BlockWork& w, const std::vector<double>& x) {
  RMat m = RMat::Zero(w.n, w.n);
  for (const SdpEntry& e : w.ent) {
    m(e.row, e.col) += e.value * x[e.var];
    if (e.row != e.col) m(e.col, e.row) += e.value * x[e.var];
  }
  return m;
}

inline RVec apply_diag(const BlockWork& w, const std::vector<double>& x) {
  RVec v = RVec::Zero(w.n);
  for (const SdpEntry& e : w.ent) v(e.row) += e.value * x[e.var];
  return v;
}

/// accumulate <A_j, M> into out[j] for all vars of this block.
inline void dot_dense(const BlockWork& w, const RMat& m, std::vector<double>& out) {
  for (const SdpEntry& e : w.ent)
    out[e.var] += e.value * (e.row == e.col ? m(e.row, e.col)
                                            : m(e.row, e.col) + m(e.col, e.row));
}

inline void dot_diag(const BlockWork& w, const RVec& v, std::vector<double>& out) {
  for (const SdpEntry& e : w.ent) out[e.var] += e.value * v(e.row);
}

}  // namespace detail

/// Solve in the LMI maximization form documented at the top of this header.
inline SdpSolution solve(const SdpProblem& p, SolveOptions opts = {}) {
  {
    const auto issues = validate(p);
    if (!issues.empty())
      throw std::invalid_argument("solve: malformed problem: " + issues.front());
  }
  const int m = p.num_vars;
  std::vector<detail::BlockWork> work;
  work.reserve(p.blocks.size());
  for (const SdpBlock& b : p.blocks) work.push_back(detail::make_work(b));

  std::vector<double> bvec(m);
  double bmax = 0.0;
  for (int j = 0; j < m; ++j) {
    bvec[j] = -p.objective[j];
    bmax = std::max(bmax, std::abs(bvec[j]));
  }
  double cmax = 1.0;
  int ntot = 0;
  for (const auto& w : work) {
    cmax = std::max(cmax, w.cnorm);
    ntot += w.n;
  }

  // iterates: y scalar, per block (X, Z) (dense) or (xd, zd) (diag)
  std::vector<double> y(m, 0.0);
  for (auto& w : work) {
    if (w.diag) {
      w.xd = RVec::Constant(w.n, 1.0 + bmax);
      w.zd = RVec::Constant(w.n, 1.0 + w.cnorm);
    } else {
      w.X = RMat::Identity(w.n, w.n) * (1.0 + bmax);
      w.Z = RMat::Identity(w.n, w.n) * (1.0 + w.cnorm);
    }
  }

  SdpSolution out;
  auto finalize = [&](SdpStatus status, const std::vector<double>& xv,
                      const std::vector<detail::BlockWork>& wk, int iters,
                      double gap, double rp, double rd) {
    out.status = status;
    out.x = xv;
    out.iterations = iters;
    out.duality_gap = gap;
    out.primal_residual = rp;
    out.dual_residual = rd;
    double pobj = 0.0, dobj = 0.0;
    for (int j = 0; j < m; ++j) pobj += bvec[j] * xv[j];
    out.primal_blocks.clear();
    out.dual_blocks.clear();
    for (const auto& w : wk) {
      if (w.diag) {
        RVec s = detail::apply_diag(w, xv) - w.cd;
        Mat sm = Mat::Zero(w.n, w.n);
        Mat xm = Mat::Zero(w.n, w.n);
        for (int i = 0; i < w.n; ++i) {
          sm(i, i) = s(i);
          xm(i, i) = w.xd(i);
          dobj += w.cd(i) * w.xd(i);
        }
        out.primal_blocks.emplace_back(std::move(sm), std::vector<int>{w.n});
        out.dual_blocks.emplace_back(std::move(xm), std::vector<int>{w.n});
      } else {
        RMat s = detail::apply_dense(w, xv) - w.C;
        dobj += (w.C.array() * w.X.array()).sum();
        out.primal_blocks.emplace_back(s.cast<cplx>(), std::vector<int>{w.n});
        out.dual_blocks.emplace_back(w.X.cast<cplx>(), std::vector<int>{w.n});
      }
    }
    out.primal_value = -pobj + p.objective_constant;
    out.dual_value = -dobj + p.objective_constant;
    return out;
  };

  struct Best {
    std::vector<double> y;
    std::vector<detail::BlockWork> work;
    double merit = std::numeric_limits<double>::infinity();
    double gap = 0, rp = 0, rd = 0;
    int iter = 0;
  } best;
  int stall = 0;
  double xgrow_marker = static_cast<double>(ntot) * (1.0 + bmax) * (1.0 + bmax);

  double gap = std::numeric_limits<double>::quiet_NaN();
  double rpn = gap, rdn = gap;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    // residuals Rd = sum y A - Z - C (per block), rp = b - A(X)
    std::vector<RMat> Rd(work.size());
    std::vector<RVec> Rdd(work.size());
    std::vector<double> ax(m, 0.0);
    double mu_num = 0.0, rd_worst = 0.0, dobj = 0.0, rdx = 0.0;
    double xnorm2 = 0.0;
    bool finite = true;
    for (std::size_t k = 0; k < work.size(); ++k) {
      auto& w = work[k];
      if (w.diag) {
        Rdd[k] = detail::apply_diag(w, y) - w.zd - w.cd;
        detail::dot_diag(w, w.xd, ax);
        mu_num += w.xd.dot(w.zd);
        dobj += w.cd.dot(w.xd);
        rdx += Rdd[k].dot(w.xd);
        rd_worst = std::max(rd_worst, Rdd[k].norm());
        xnorm2 += w.xd.squaredNorm();
        finite = finite && w.xd.allFinite() && w.zd.allFinite();
      } else {
        Rd[k] = detail::apply_dense(w, y) - w.Z - w.C;
        detail::dot_dense(w, w.X, ax);
        mu_num += (w.X.array() * w.Z.array()).sum();
        dobj += (w.C.array() * w.X.array()).sum();
        rdx += (Rd[k].array() * w.X.array()).sum();
        rd_worst = std::max(rd_worst, Rd[k].norm());
        xnorm2 += w.X.squaredNorm();
        finite = finite && w.X.allFinite() && w.Z.allFinite();
      }
    }
    const double mu = mu_num / ntot;
    double pobj = 0.0, rp2 = 0.0, bn = 0.0, yrp = 0.0;
    for (int j = 0; j < m; ++j) {
      pobj += bvec[j] * y[j];
      const double r = bvec[j] - ax[j];
      yrp += y[j] * r;
      rp2 += r * r;
      bn += bvec[j] * bvec[j];
    }
    rpn = std::sqrt(rp2) / (1.0 + std::sqrt(bn));
    rdn = rd_worst / (1.0 + cmax);
    gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (!finite || !std::isfinite(mu) || !std::isfinite(rpn)) {
      if (best.merit < std::numeric_limits<double>::infinity())
        return finalize(SdpStatus::numerical_failure, best.y, best.work, it,
                        best.gap, best.rp, best.rd);
      return finalize(SdpStatus::numerical_failure, y, work, it, gap, rpn, rdn);
    }

    out.history.push_back({mu, gap, rpn, rdn, -pobj + p.objective_constant,
                           -dobj + p.objective_constant, mu_num, yrp, rdx, 0.0,
                           0.0});

    // primal infeasibility (Farkas) heuristic: a large X with A(X) ~ 0 and
    // <C, X> > 0 certifies that no x satisfies the LMIs
    {
      const double scale = std::max(1.0, std::sqrt(xnorm2));
      double axn = 0.0;
      for (int j = 0; j < m; ++j) axn = std::max(axn, std::abs(ax[j]) / scale);
      if (axn <= 1e-9 && dobj / scale >= 1e-6) {
        for (auto& w : work) {  // return the normalized certificate
          if (w.diag) w.xd /= scale; else w.X /= scale;
        }
        return finalize(SdpStatus::infeasible, y, work, it, gap, rpn, rdn);
      }
    }

    if (gap < opts.gap_tol && rpn < opts.feas_tol && rdn < opts.feas_tol)
      return finalize(SdpStatus::optimal, y, work, it, gap, rpn, rdn);

    const double merit = gap + rpn + rdn;
    if (merit < best.merit * 0.99) {
      best = {y, work, merit, gap, rpn, rdn, it};
      stall = 0;
    } else if (xnorm2 > 2.0 * xgrow_marker) {
      // X diverging toward a Farkas certificate is progress, not a stall
      xgrow_marker = xnorm2;
      stall = 0;
    } else if (++stall > opts.stall_window) {
      break;
    }
    if (mu < 1e-15) break;

    // Nesterov-Todd scaling per block
    for (std::size_t k = 0; k < work.size(); ++k) {
      auto& w = work[k];
      if (w.diag) {
        w.wd = (w.xd.array() / w.zd.array()).sqrt().matrix();  // W diagonal
        w.vd = (w.xd.array() * w.zd.array()).sqrt().matrix();  // V diagonal
      } else {
        RVec ew;
        RMat eu;
        detail::eig_sym(w.X, ew, eu);
        for (int i = 0; i < ew.size(); ++i) ew(i) = detail::clip_pos(ew(i));
        const RMat xh = detail::eig_apply(ew, eu, [](double v) { return std::sqrt(v); });
        RVec wm;
        RMat um;
        detail::eig_sym(detail::symm(xh * w.Z * xh), wm, um);
        for (int i = 0; i < wm.size(); ++i) wm(i) = detail::clip_pos(wm(i));
        const RMat mhi =
            detail::eig_apply(wm, um, [](double v) { return 1.0 / std::sqrt(v); });
        const RMat W = detail::symm(xh * mhi * xh);
        RVec ww;
        RMat uw;
        detail::eig_sym(W, ww, uw);
        for (int i = 0; i < ww.size(); ++i) ww(i) = detail::clip_pos(ww(i));
        w.R = detail::eig_apply(ww, uw, [](double v) { return std::sqrt(v); });
        w.Rinv = detail::eig_apply(ww, uw, [](double v) { return 1.0 / std::sqrt(v); });
        w.V = detail::symm(w.Rinv * w.X * w.Rinv);
        detail::eig_sym(w.V, w.Vlam, w.Vlam_vecs);
      }
    }

    // scaled data: Ahat_j = R A_j R (dense) / w a_j (diag); Rd_hat = R Rd R
    std::vector<std::vector<RMat>> Ahat(work.size());
    std::vector<RMat> Rdh(work.size());
    std::vector<RVec> Rddh(work.size());
    RMat schur = RMat::Zero(m, m);
    for (std::size_t k = 0; k < work.size(); ++k) {
      auto& w = work[k];
      if (w.diag) {
        Rddh[k] = (w.wd.array() * Rdd[k].array()).matrix();
        for (int i = 0; i < w.n; ++i) {
          const double wi = w.wd(i) * w.wd(i);
          for (const auto& [j1, v1] : w.rows[i])
            for (const auto& [j2, v2] : w.rows[i]) schur(j1, j2) += wi * v1 * v2;
        }
      } else {
        const int nv = static_cast<int>(w.vars.size());
        Ahat[k].resize(nv);
        const int sv = w.n * (w.n + 1) / 2;
        RMat G(nv, sv);
        for (int a = 0; a < nv; ++a) {
          RMat ah = RMat::Zero(w.n, w.n);
          for (std::size_t e = w.offs[a]; e < w.offs[a + 1]; ++e) {
            const SdpEntry& en = w.ent[e];
            ah.noalias() += en.value * (w.R.col(en.row) * w.R.row(en.col));
            if (en.row != en.col)
              ah.noalias() += en.value * (w.R.col(en.col) * w.R.row(en.row));
          }
          ah = detail::symm(ah);
          Ahat[k][a] = ah;
          int idx = 0;
          for (int c = 0; c < w.n; ++c)
            for (int r = c; r < w.n; ++r)
              G(a, idx++) = r == c ? ah(r, c) : ah(r, c) * kSqrt2;
        }
        RMat local = G * G.transpose();
        for (int a = 0; a < nv; ++a)
          for (int b2 = 0; b2 < nv; ++b2) schur(w.vars[a], w.vars[b2]) += local(a, b2);
        Rdh[k] = detail::symm(w.R * Rd[k] * w.R);
      }
    }

    Eigen::LLT<RMat> llt;
    {
      double dmax = 1.0;
      for (int j = 0; j < m; ++j) dmax = std::max(dmax, schur(j, j));
      RMat reg = schur + 1e-14 * dmax * RMat::Identity(m, m);
      llt.compute(reg);
      if (llt.info() != Eigen::Success) {
        reg = schur + 1e-10 * dmax * RMat::Identity(m, m);
        llt.compute(reg);
        if (llt.info() != Eigen::Success) break;  // classified from best iterate
      }
    }

    // direction solve shared by predictor and corrector:
    //   dXh + dZh = T = Lv^{-1}(Rc);  dZh = sum dy Ahat + Rd_hat;
    //   <Ahat_j, dXh> = rp_j   =>   schur dy = Ahat(T) - Ahat(Rd_hat) - rp
    std::vector<RMat> Tk(work.size());
    std::vector<RVec> Tkd(work.size());
    auto solve_dirs = [&](const std::vector<RMat>& rc,
                          const std::vector<RVec>& rcd, std::vector<double>& dy,
                          std::vector<RMat>& dxh, std::vector<RVec>& dxd,
                          std::vector<RMat>& dzh, std::vector<RVec>& dzd) {
      RVec rhs(m);
      for (int j = 0; j < m; ++j) rhs(j) = -(bvec[j] - ax[j]);
      for (std::size_t k = 0; k < work.size(); ++k) {
        auto& w = work[k];
        if (w.diag) {
          Tkd[k] = (rcd[k].array() / w.vd.array()).matrix();
          const RVec diff = Tkd[k] - Rddh[k];
          for (const SdpEntry& e : w.ent)
            rhs(e.var) += e.value * w.wd(e.row) * diff(e.row);
        } else {
          const RMat mt = w.Vlam_vecs.transpose() * rc[k] * w.Vlam_vecs;
          RMat scaled(w.n, w.n);
          for (int r = 0; r < w.n; ++r)
            for (int c = 0; c < w.n; ++c)
              scaled(r, c) = 2.0 * mt(r, c) / (w.Vlam(r) + w.Vlam(c));
          Tk[k] = detail::symm(w.Vlam_vecs * scaled * w.Vlam_vecs.transpose());
          const RMat diff = Tk[k] - Rdh[k];
          for (std::size_t a = 0; a < w.vars.size(); ++a)
            rhs(w.vars[a]) += (Ahat[k][a].array() * diff.array()).sum();
        }
      }
      const RVec dyv = llt.solve(rhs);
      dy.assign(dyv.data(), dyv.data() + m);
      dxh.assign(work.size(), RMat());
      dzh.assign(work.size(), RMat());
      dxd.assign(work.size(), RVec());
      dzd.assign(work.size(), RVec());
      for (std::size_t k = 0; k < work.size(); ++k) {
        auto& w = work[k];
        if (w.diag) {
          RVec dz = Rddh[k];
          for (const SdpEntry& e : w.ent)
            dz(e.row) += dy[e.var] * e.value * w.wd(e.row);
          dzd[k] = dz;
          dxd[k] = Tkd[k] - dz;
        } else {
          RMat dz = Rdh[k];
          for (std::size_t a = 0; a < w.vars.size(); ++a)
            dz.noalias() += dy[w.vars[a]] * Ahat[k][a];
          dzh[k] = detail::symm(dz);
          dxh[k] = detail::symm(Tk[k] - dzh[k]);
        }
      }
    };

    // max step alpha in (0,1] keeping V + alpha D psd (S = V in scaled space)
    auto max_step = [&](const std::vector<RMat>& dm, const std::vector<RVec>& dv) {
      double a = 1.0;
      for (std::size_t k = 0; k < work.size(); ++k) {
        auto& w = work[k];
        if (w.diag) {
          if (!dv[k].allFinite()) return 0.0;
          for (int i = 0; i < w.n; ++i)
            if (dv[k](i) < 0.0) a = std::min(a, -w.vd(i) / dv[k](i));
        } else {
          if (!dm[k].allFinite()) return 0.0;
          RVec lam = w.Vlam;
          for (int i = 0; i < lam.size(); ++i) lam(i) = detail::clip_pos(lam(i));
          RMat si = detail::eig_apply(lam, w.Vlam_vecs,
                                      [](double v) { return 1.0 / std::sqrt(v); });
          Eigen::SelfAdjointEigenSolver<RMat> es(detail::symm(si * dm[k] * si));
          const double lmin = es.eigenvalues().minCoeff();
          if (lmin < 0.0) a = std::min(a, -1.0 / lmin);
        }
      }
      return a;
    };

    // predictor
    std::vector<RMat> rc(work.size());
    std::vector<RVec> rcd(work.size());
    for (std::size_t k = 0; k < work.size(); ++k) {
      if (work[k].diag)
        rcd[k] = -(work[k].vd.array() * work[k].vd.array()).matrix();
      else
        rc[k] = -(work[k].V * work[k].V);
    }
    std::vector<double> dy_a;
    std::vector<RMat> dxh_a, dzh_a;
    std::vector<RVec> dxd_a, dzd_a;
    solve_dirs(rc, rcd, dy_a, dxh_a, dxd_a, dzh_a, dzd_a);
    const double a_aff = std::min(max_step(dxh_a, dxd_a), max_step(dzh_a, dzd_a));
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < work.size(); ++k) {
      auto& w = work[k];
      if (w.diag)
        mu_aff += ((w.vd + a_aff * dxd_a[k]).array() *
                   (w.vd + a_aff * dzd_a[k]).array()).sum();
      else
        mu_aff += ((w.V + a_aff * dxh_a[k]).array() *
                   (w.V + a_aff * dzh_a[k]).array()).sum();
    }
    mu_aff /= ntot;
    const double sigma =
        std::max(std::min(std::pow(mu_aff / mu, 3.0), 1.0), 1e-8);

    // corrector
    for (std::size_t k = 0; k < work.size(); ++k) {
      auto& w = work[k];
      if (w.diag)
        rcd[k] = (sigma * mu - w.vd.array() * w.vd.array() -
                  dxd_a[k].array() * dzd_a[k].array()).matrix();
      else
        rc[k] = detail::symm(sigma * mu * RMat::Identity(w.n, w.n) - w.V * w.V -
                             0.5 * (dxh_a[k] * dzh_a[k] + dzh_a[k] * dxh_a[k]));
    }
    std::vector<double> dy;
    std::vector<RMat> dxh, dzh;
    std::vector<RVec> dxd, dzd;
    solve_dirs(rc, rcd, dy, dxh, dxd, dzh, dzd);
    double ap = max_step(dxh, dxd), ad = max_step(dzh, dzd);
    const double tau = mu < 1e-4 ? 0.99 : 0.98;
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);
    out.history.back().step_p = ap;
    out.history.back().step_d = ad;
    if (ap < 1e-12 && ad < 1e-12) break;

    // unscale and update
    for (std::size_t k = 0; k < work.size(); ++k) {
      auto& w = work[k];
      if (w.diag) {
        w.xd += ap * (w.wd.array() * dxd[k].array()).matrix();
        w.zd += ad * (dzd[k].array() / w.wd.array()).matrix();
      } else {
        w.X = detail::symm(w.X + ap * w.R * dxh[k] * w.R);
        w.Z = detail::symm(w.Z + ad * w.Rinv * dzh[k] * w.Rinv);
      }
    }
    for (int j = 0; j < m; ++j) y[j] += ad * dy[j];
  }

  // loop left without meeting tolerances: classify the best iterate
  if (best.merit < std::numeric_limits<double>::infinity()) {
    const bool ok = best.gap < opts.gap_tol && best.rp < opts.feas_tol &&
                    best.rd < opts.feas_tol;
    return finalize(ok ? SdpStatus::optimal : SdpStatus::numerical_failure,
                    best.y, best.work, it, best.gap, best.rp, best.rd);
  }
  return finalize(
      (gap < opts.gap_tol && rpn < opts.feas_tol && rdn < opts.feas_tol)
          ? SdpStatus::optimal
          : SdpStatus::numerical_failure,
      y, work, it, gap, rpn, rdn);
}

// ---------------------------------------------------------------------------
// Dual certificates

struct CertificateReport {
  double dual_objective = 0.0;   // -sum_k <C_k, Y_k> + objective_constant
  double certified_bound = 0.0;  // with metadata-based rigor corrections
  double max_equality_residual = 0.0;
  double min_eigenvalue = 0.0;
  double residual_correction = 0.0;
  double eigen_correction = 0.0;
};

/// Verify a dual matrix list Y (one per block) as an upper-bound certificate
/// for max objective.x: Y >= 0 and <A_j, Y> = -objective_j give
/// objective.x <= -<C, Y>. Residuals are corrected rigorously when the
/// problem carries |x| bounds / a slack trace bound.
inline CertificateReport certify_upper_bound_report(
    const SdpProblem& p, const std::vector<DenseMatrix>& dual_blocks,
    double feas_tol = 1e-8) {
  if (dual_blocks.size() != p.blocks.size())
    throw std::invalid_argument("certify_upper_bound: block count mismatch");
  CertificateReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  std::vector<double> r(p.objective);  // r_j = objective_j + <A_j, Y>
  double cy = 0.0;
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    const SdpBlock& b = p.blocks[k];
    const Mat& ym = dual_blocks[k].m;
    if (ym.rows() != b.dim || ym.cols() != b.dim)
      throw std::invalid_argument("certify_upper_bound: block dimension mismatch");
    if (ym.imag().cwiseAbs().maxCoeff() > 1e-12)
      throw std::invalid_argument("certify_upper_bound: dual block not real");
    const RMat y = ym.real();
    rep.min_eigenvalue =
        std::min(rep.min_eigenvalue,
                 Eigen::SelfAdjointEigenSolver<RMat>(0.5 * (y + y.transpose()))
                     .eigenvalues()
                     .minCoeff());
    for (const SdpEntry& e : b.entries)
      r[e.var] += e.value * (e.row == e.col ? y(e.row, e.col)
                                            : y(e.row, e.col) + y(e.col, e.row));
    for (const SdpConstEntry& e : b.constants)
      cy += e.value * (e.row == e.col ? y(e.row, e.col)
                                      : y(e.row, e.col) + y(e.col, e.row));
  }
  for (double rj : r)
    rep.max_equality_residual = std::max(rep.max_equality_residual, std::abs(rj));
  if (rep.max_equality_residual > feas_tol)
    throw std::runtime_error(
        "certify_upper_bound: dual equality residual " +
        std::to_string(rep.max_equality_residual) + " exceeds tolerance");
  if (rep.min_eigenvalue < -feas_tol)
    throw std::runtime_error("certify_upper_bound: dual certificate not PSD (min eig " +
                             std::to_string(rep.min_eigenvalue) + ")");
  rep.dual_objective = -cy + p.objective_constant;
  rep.residual_correction = 0.0;
  if (!p.x_abs_bound.empty()) {
    for (int j = 0; j < p.num_vars; ++j)
      rep.residual_correction += std::abs(r[j]) * p.x_abs_bound[j];
  }
  rep.eigen_correction =
      std::max(0.0, -rep.min_eigenvalue) * p.slack_trace_bound;
  rep.certified_bound =
      rep.dual_objective + rep.residual_correction + rep.eigen_correction;
  return rep;
}

inline double certify_upper_bound(const SdpProblem& p, const SdpSolution& sol,
                                  double feas_tol = 1e-8) {
  return certify_upper_bound_report(p, sol.dual_blocks, feas_tol).certified_bound;
}

/// How a concrete point x fares against the constraints: the objective value
/// and the worst slack eigenvalue over the dense and diagonal blocks.  A
/// point is feasible iff both minima are >= 0 (up to the caller's tolerance),
/// in which case `objective` is a valid lower witness for the maximum.
struct PointEvaluation {
  double objective = 0.0;       // c'x + objective_constant
  double min_eigenvalue = 1.0;  // over dense block slacks sum_j x_j A_j - C
  double min_diag = 1.0;        // over diagonal block rows
};

inline PointEvaluation evaluate_point(const SdpProblem& p,
                                      const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != p.num_vars)
    throw std::invalid_argument("evaluate_point: x size mismatch");
  PointEvaluation ev;
  for (int j = 0; j < p.num_vars; ++j) ev.objective += p.objective[j] * x[j];
  ev.objective += p.objective_constant;
  for (const auto& blk : p.blocks) {
    if (blk.diag) {
      RVec s = RVec::Zero(blk.dim);
      for (const auto& e : blk.entries) s(e.row) += e.value * x[e.var];
      for (const auto& e : blk.constants) s(e.row) -= e.value;
      ev.min_diag = std::min(ev.min_diag, s.minCoeff());
    } else {
      RMat s = RMat::Zero(blk.dim, blk.dim);
      for (const auto& e : blk.entries) {
        s(e.row, e.col) += e.value * x[e.var];
        if (e.row != e.col) s(e.col, e.row) += e.value * x[e.var];
      }
      for (const auto& e : blk.constants) {
        s(e.row, e.col) -= e.value;
        if (e.row != e.col) s(e.col, e.row) -= e.value;
      }
      Eigen::SelfAdjointEigenSolver<RMat> es(s, Eigen::EigenvaluesOnly);
      ev.min_eigenvalue = std::min(ev.min_eigenvalue, es.eigenvalues().minCoeff());
    }
  }
  return ev;
}

// ---------------------------------------------------------------------------
// SDPA sparse interchange (.dat-s)

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& tok, int line_no) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw std::runtime_error("sdpa import: line " + std::to_string(line_no) +
                             ": bad number '" + tok + "'");
  return v;
}

inline long parse_int(const std::string& tok, int line_no) {
  long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw std::runtime_error("sdpa import: line " + std::to_string(line_no) +
                             ": bad integer '" + tok + "'");
  return v;
}

struct SdpaRow {
  int k, blk, i, j;  // 1-based, i <= j
  double v;
  bool operator<(const SdpaRow& o) const {
    return std::tie(k, blk, i, j) < std::tie(o.k, o.blk, o.i, o.j);
  }
};

}  // namespace detail

/// Canonical SDPA sparse text for the problem (minimization of -objective).
inline std::string to_sdpa(const SdpProblem& p) {
  {
    const auto issues = validate(p);
    if (!issues.empty())
      throw std::invalid_argument("to_sdpa: malformed problem: " + issues.front());
  }
  std::string s;
  s += "*offset " + detail::format_double(p.objective_constant) + "\n";
  s += std::to_string(p.num_vars) + "\n";
  s += std::to_string(p.blocks.size()) + "\n";
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    if (k) s += ' ';
    s += std::to_string(p.blocks[k].diag ? -p.blocks[k].dim : p.blocks[k].dim);
  }
  s += "\n";
  for (int j = 0; j < p.num_vars; ++j) {
    if (j) s += ' ';
    s += detail::format_double(-p.objective[j]);
  }
  s += "\n";
  std::vector<detail::SdpaRow> rows;
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    const int blk = static_cast<int>(k) + 1;
    for (const SdpConstEntry& e : p.blocks[k].constants)
      rows.push_back({0, blk, e.row + 1, e.col + 1, e.value});
    for (const SdpEntry& e : p.blocks[k].entries)
      rows.push_back({e.var + 1, blk, e.row + 1, e.col + 1, e.value});
  }
  std::sort(rows.begin(), rows.end());
  // canonical form: duplicates merged, exact zeros dropped
  std::string body;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i + 1;
    double v = rows[i].v;
    while (j < rows.size() && !(rows[i] < rows[j])) v += rows[j++].v;
    if (v != 0.0) {
      body += std::to_string(rows[i].k) + ' ' + std::to_string(rows[i].blk) +
              ' ' + std::to_string(rows[i].i) + ' ' + std::to_string(rows[i].j) +
              ' ' + detail::format_double(v) + "\n";
    }
    i = j;
  }
  return s + body;
}

inline SdpProblem from_sdpa(std::istream& in) {
  SdpProblem p;
  std::string line;
  int line_no = 0;
  auto next_data_line = [&](bool allow_comment) -> std::string {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      if (line[0] == '*' || line[0] == '"') {
        if (allow_comment && line.rfind("*offset ", 0) == 0)
          p.objective_constant = detail::parse_double(line.substr(8), line_no);
        continue;
      }
      return line;
    }
    throw std::runtime_error("sdpa import: line " + std::to_string(line_no) +
                             ": unexpected end of file");
  };
  auto tokens = [&](const std::string& l) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : l) {
      if (ch == ' ' || ch == '\t' || ch == ',' || ch == '(' || ch == ')' ||
          ch == '{' || ch == '}' || ch == '\r') {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  };

  const long m = detail::parse_int(tokens(next_data_line(true)).at(0), line_no);
  if (m < 0) throw std::runtime_error("sdpa import: negative mDIM");
  const long nblocks = detail::parse_int(tokens(next_data_line(false)).at(0), line_no);
  if (nblocks <= 0) throw std::runtime_error("sdpa import: bad block count");
  const auto sizes = tokens(next_data_line(false));
  if (static_cast<long>(sizes.size()) != nblocks)
    throw std::runtime_error("sdpa import: line " + std::to_string(line_no) +
                             ": expected " + std::to_string(nblocks) +
                             " block sizes");
  p.num_vars = static_cast<int>(m);
  for (const std::string& t : sizes) {
    const long d = detail::parse_int(t, line_no);
    if (d == 0) throw std::runtime_error("sdpa import: zero block size");
    SdpBlock b;
    b.diag = d < 0;
    b.dim = static_cast<int>(d < 0 ? -d : d);
    b.name = "block" + std::to_string(p.blocks.size() + 1);
    p.blocks.push_back(std::move(b));
  }
  p.objective.assign(p.num_vars, 0.0);
  const auto rhs = tokens(next_data_line(false));
  if (static_cast<long>(rhs.size()) != m)
    throw std::runtime_error("sdpa import: line " + std::to_string(line_no) +
                             ": expected " + std::to_string(m) + " objective values");
  for (int j = 0; j < p.num_vars; ++j)
    p.objective[j] = -detail::parse_double(rhs[j], line_no);

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '*' || line[0] == '"') continue;
    const auto t = tokens(line);
    if (t.empty()) continue;
    if (t.size() != 5)
      throw std::runtime_error("sdpa import: line " + std::to_string(line_no) +
                               ": expected 'k blk i j value'");
    const long k = detail::parse_int(t[0], line_no);
    const long blk = detail::parse_int(t[1], line_no);
    long i = detail::parse_int(t[2], line_no);
    long j = detail::parse_int(t[3], line_no);
    const double v = detail::parse_double(t[4], line_no);
    if (k < 0 || k > m)
      throw std::runtime_error("sdpa import: line " + std::to_string(line_no) +
                               ": constraint index out of range");
    if (blk < 1 || blk > nblocks)
      throw std::runtime_error("sdpa import: line " + std::to_string(line_no) +
                               ": block index out of range");
    SdpBlock& b = p.blocks[blk - 1];
    if (i > j) std::swap(i, j);
    if (i < 1 || j > b.dim)
      throw std::runtime_error("sdpa import: line " + std::to_string(line_no) +
                               ": entry coordinates out of range");
    if (b.diag && i != j)
      throw std::runtime_error("sdpa import: line " + std::to_string(line_no) +
                               ": off-diagonal entry in diagonal block");
    if (k == 0)
      b.constants.push_back({static_cast<int>(i) - 1, static_cast<int>(j) - 1, v});
    else
      b.entries.push_back({static_cast<int>(k) - 1, static_cast<int>(i) - 1,
                           static_cast<int>(j) - 1, v});
  }
  return p;
}

inline void export_sdpa(const SdpProblem& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_sdpa: cannot open " + path);
  out << to_sdpa(p);
  if (!out) throw std::runtime_error("export_sdpa: write failed for " + path);
}

inline SdpProblem import_sdpa(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("import_sdpa: cannot open " + path);
  return from_sdpa(in);
}

// ---------------------------------------------------------------------------
// External-solver interchange: solution JSON written by tools/external_solve.py

struct ExternalSolution {
  std::string solver;
  std::string status;
  double reported_objective = 0.0;   // primal, in this library's max convention
  double reported_dual = 0.0;        // dual, same convention
  std::vector<double> x;
  std::vector<DenseMatrix> dual_blocks;
};

/// Read a solution written by tools/external_solve.py: "value" and
/// "dual_value" are already in this library's max convention (offset applied);
/// "x" has one entry per variable; "y_blocks" holds the dual certificate with
/// diagonal blocks as their diagonal and dense blocks as the flat row-major
/// lower triangle (r >= c).
inline ExternalSolution import_solution_json(const std::string& path,
                                             const SdpProblem& p) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_solution_json: cannot open " + path);
  nlohmann::json j;
  in >> j;
  ExternalSolution s;
  s.solver = j.value("solver", "unknown");
  s.status = j.value("status", "unknown");
  s.x = j.at("x").get<std::vector<double>>();
  if (static_cast<int>(s.x.size()) != p.num_vars)
    throw std::runtime_error("import_solution_json: x length mismatch");
  s.reported_objective = j.at("value").get<double>();
  s.reported_dual = j.value("dual_value", s.reported_objective);
  const auto& yb = j.at("y_blocks");
  if (yb.size() != p.blocks.size())
    throw std::runtime_error("import_solution_json: dual block count mismatch");
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    const int n = p.blocks[k].dim;
    const auto flat = yb[k].get<std::vector<double>>();
    Mat m = Mat::Zero(n, n);
    if (p.blocks[k].diag) {
      if (static_cast<int>(flat.size()) != n)
        throw std::runtime_error("import_solution_json: diag block size mismatch");
      for (int i = 0; i < n; ++i) m(i, i) = flat[i];
    } else {
      if (static_cast<int>(flat.size()) != n * (n + 1) / 2)
        throw std::runtime_error("import_solution_json: block size mismatch");
      std::size_t k2 = 0;
      for (int r = 0; r < n; ++r)
        for (int c = 0; c <= r; ++c) {
          m(r, c) = flat[k2];
          m(c, r) = flat[k2];
          ++k2;
        }
    }
    s.dual_blocks.emplace_back(std::move(m), std::vector<int>{n});
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON debug dump

inline void to_json(nlohmann::json& j, const SdpProblem& p) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const SdpBlock& b : p.blocks) {
    nlohmann::json entries = nlohmann::json::array();
    for (const SdpEntry& e : b.entries)
      entries.push_back({e.var, e.row, e.col, e.value});
    nlohmann::json constants = nlohmann::json::array();
    for (const SdpConstEntry& e : b.constants)
      constants.push_back({e.row, e.col, e.value});
    blocks.push_back({{"name", b.name},
                      {"dim", b.dim},
                      {"diag", b.diag},
                      {"entries", entries},
                      {"constants", constants}});
  }
  j = nlohmann::json{{"num_vars", p.num_vars},
                     {"objective", p.objective},
                     {"objective_constant", p.objective_constant},
                     {"blocks", blocks},
                     {"description", p.description}};
}

inline void to_json(nlohmann::json& j, const SdpSolution& s) {
  j = nlohmann::json{{"status", to_string(s.status)},
                     {"primal_value", s.primal_value},
                     {"dual_value", s.dual_value},
                     {"iterations", s.iterations},
                     {"duality_gap", s.duality_gap},
                     {"primal_residual", s.primal_residual},
                     {"dual_residual", s.dual_residual}};
}

}  // namespace realnet
