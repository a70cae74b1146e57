// realnet command-line front end.
//
// Five subcommands cover the pipeline: `ideal` (network correlations and the
// Bell functional), `bound` (moment relaxations: solve, export, certify),
// `selftest` (isometry extraction and PPT-set distances), `realsim`
// (real-amplitude simulations of complex statistics), `epsilon` (robustness
// budget and noise thresholds). Every numeric claim is printed with nine
// significant digits and the tolerance it was checked against; the exit code
// is 0 exactly when all checks passed.

#include <openssl/evp.h>

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "realnet/bellfunc.hpp"
#include "realnet/netsim.hpp"
#include "realnet/npo.hpp"
#include "realnet/realsim.hpp"
#include "realnet/sdp.hpp"
#include "realnet/selftest.hpp"

namespace {

using namespace realnet;

std::string nine(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Git-style content hash of the canonical parameter dump: the SHA-1 of
/// "blob <len>\0<content>", so a report's inputs can be diffed against a
/// repository object if ever stored as one.
std::string git_blob_sha1(const std::string& content) {
  std::string payload = "blob " + std::to_string(content.size());
  payload.push_back('\0');
  payload += content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(payload.data(), payload.size(), md, &len, EVP_sha1(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

/// Accumulates tolerance-qualified checks, prints them as they are added,
/// and serializes the whole run report to JSON on demand.
class Report {
 public:
  Report(std::string command, nlohmann::json parameters)
      : command_(std::move(command)),
        params_(std::move(parameters)),
        hash_(git_blob_sha1(params_.dump())),
        start_(std::chrono::steady_clock::now()) {
    std::printf("realnet %s\n", command_.c_str());
    std::printf("  parameters %s\n", params_.dump().c_str());
    std::printf("  input-hash %s\n", hash_.c_str());
  }

  nlohmann::json& results() { return results_; }

  void check_abs(const std::string& name, double value, double target,
                 double tol) {
    const bool ok = std::isfinite(value) && std::abs(value - target) <= tol;
    add(name, ok, nine(value),
        "target " + nine(target) + " tol " + nine(tol),
        {{"kind", "abs"}, {"value", value}, {"target", target},
         {"tolerance", tol}, {"pass", ok}});
  }

  void check_range(const std::string& name, double value, double lo,
                   double hi) {
    const bool ok = std::isfinite(value) && lo <= value && value <= hi;
    add(name, ok, nine(value), "range [" + nine(lo) + ", " + nine(hi) + "]",
        {{"kind", "range"}, {"value", value}, {"lo", lo}, {"hi", hi},
         {"pass", ok}});
  }

  void check_max(const std::string& name, double value, double bound) {
    const bool ok = std::isfinite(value) && value <= bound;
    add(name, ok, nine(value), "max " + nine(bound),
        {{"kind", "max"}, {"value", value}, {"bound", bound}, {"pass", ok}});
  }

  void check_true(const std::string& name, bool ok,
                  const std::string& detail) {
    add(name, ok, ok ? "yes" : "no", detail,
        {{"kind", "bool"}, {"value", ok}, {"detail", detail}, {"pass", ok}});
  }

  void note(const std::string& line) {
    std::printf("  note: %s\n", line.c_str());
    notes_.push_back(line);
  }

  bool all_pass() const {
    for (const auto& c : checks_)
      if (!c.at("pass").get<bool>()) return false;
    return true;
  }

  /// Print the summary, write the JSON report when requested, and return the
  /// process exit code (forced_exit overrides the pass/fail code, e.g. for
  /// refused oversized solves).
  int finish(const std::string& json_path, int forced_exit = -1) {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start_)
            .count();
    const bool ok = all_pass();
    std::printf("  wall-time %.3f s\n", wall);
    std::printf("%s %s (%zu/%zu checks)\n", ok ? "PASS" : "FAIL",
                command_.c_str(),
                static_cast<std::size_t>(
                    std::count_if(checks_.begin(), checks_.end(),
                                  [](const nlohmann::json& c) {
                                    return c.at("pass").get<bool>();
                                  })),
                checks_.size());
    if (!json_path.empty()) {
      nlohmann::json j{{"command", command_},   {"parameters", params_},
                       {"input_hash", hash_},   {"results", results_},
                       {"checks", checks_},     {"notes", notes_},
                       {"wall_time_s", wall},   {"pass", ok}};
      std::ofstream out(json_path);
      out << j.dump(2) << "\n";
      if (!out) {
        std::fprintf(stderr, "error: cannot write %s\n", json_path.c_str());
        return 3;
      }
    }
    if (forced_exit >= 0) return forced_exit;
    return ok ? 0 : 1;
  }

 private:
  void add(const std::string& name, bool ok, const std::string& value,
           const std::string& detail, nlohmann::json row) {
    row["name"] = name;
    checks_.push_back(std::move(row));
    std::printf("  [%s] %-32s = %-14s (%s)\n", ok ? " ok " : "FAIL",
                name.c_str(), value.c_str(), detail.c_str());
  }

  std::string command_;
  nlohmann::json params_;
  std::string hash_;
  std::chrono::steady_clock::time_point start_;
  nlohmann::json results_ = nlohmann::json::object();
  std::vector<nlohmann::json> checks_;
  std::vector<std::string> notes_;
};

// --- seeded random instances (shared by realsim and selftest) --------------

Mat random_complex(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

Mat random_real(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

Mat random_unitary(std::mt19937_64& rng, int n, bool real_only) {
  const Mat g =
      real_only ? random_real(rng, n, n) : random_complex(rng, n, n);
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ();
}

Mat random_involution(std::mt19937_64& rng, int n, bool real_only) {
  const Mat q = random_unitary(rng, n, real_only);
  RVec s(n);
  for (int i = 0; i < n; ++i) s(i) = (rng() & 1) ? 1.0 : -1.0;
  return q * s.cast<cplx>().asDiagonal() * q.adjoint();
}

DenseMatrix random_state(std::mt19937_64& rng, int n, std::vector<int> dims,
                         bool real_only = false) {
  const Mat a =
      real_only ? random_real(rng, n, n) : random_complex(rng, n, n);
  Mat p = a * a.adjoint();
  p /= p.trace().real();
  return DenseMatrix(std::move(p), std::move(dims));
}

std::vector<DenseMatrix> projective_povm(std::mt19937_64& rng, int d) {
  const Mat q = random_unitary(rng, d, false);
  std::vector<DenseMatrix> povm;
  for (int r = 0; r < d; ++r) {
    const CVec col = q.col(r);
    povm.emplace_back(Mat(col * col.adjoint()), std::vector<int>{d});
  }
  return povm;
}

std::vector<DenseMatrix> two_outcome_povm(std::mt19937_64& rng, int d) {
  const Mat u = random_unitary(rng, d, false);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  RVec w(d);
  for (int i = 0; i < d; ++i) w(i) = uni(rng);
  const Mat e = u * w.cast<cplx>().asDiagonal() * u.adjoint();
  return {DenseMatrix(e, {d}),
          DenseMatrix(Mat(Mat::Identity(d, d) - e), {d})};
}

/// All-real strategy on the swap network: real product sources, real +-1
/// observables, a real rank-1 projective middle measurement.
Strategy random_real_strategy(std::mt19937_64& rng) {
  Strategy s;
  s.state_ab1 = random_state(rng, 4, {2, 2}, true);
  s.state_b2c = random_state(rng, 4, {2, 2}, true);
  for (int x = 0; x < 3; ++x)
    s.alice[x] = DenseMatrix(random_involution(rng, 2, true), {2});
  for (int z = 0; z < 6; ++z)
    s.charlie[z] = DenseMatrix(random_involution(rng, 2, true), {2});
  const Mat q = random_unitary(rng, 4, true);
  for (int b = 0; b < 4; ++b) {
    const CVec col = q.col(b);
    s.bob[b] = DenseMatrix(Mat(col * col.adjoint()), {2, 2});
  }
  return s;
}

double direct_prob(const DenseMatrix& rho, const DenseMatrix& effect) {
  return (rho.m * effect.m).trace().real();
}

std::vector<DenseMatrix> dichotomic_povm(const DenseMatrix& obs) {
  const Eigen::Index d = obs.m.rows();
  const Mat id = Mat::Identity(d, d);
  return {DenseMatrix(Mat(0.5 * (id + obs.m)), obs.dims),
          DenseMatrix(Mat(0.5 * (id - obs.m)), obs.dims)};
}

// --- subcommands ------------------------------------------------------------

int cmd_ideal(double visibility, std::uint64_t sample_rounds,
              std::uint64_t seed, const std::string& json_path) {
  Report rep("ideal", {{"visibility", visibility},
                       {"sample", sample_rounds},
                       {"seed", seed}});
  Strategy s = ideal_strategy();
  if (visibility != 1.0) s = apply_white_noise(s, visibility);
  const CorrelationTensor t = correlations(s);
  const BellScore score = t_total(t);
  const double expected = kSixSqrt2 * visibility * visibility;

  rep.results()["visibility"] = visibility;
  rep.results()["expected_total"] = expected;
  nlohmann::json bell;
  to_json(bell, score);
  rep.results()["bell"] = bell;

  rep.check_abs("T_total", score.total, expected, 1e-9);
  static const char* bname[4] = {"00", "01", "10", "11"};
  for (int b = 0; b < 4; ++b)
    rep.check_abs(std::string("T_b[") + bname[b] + "]", score.per_b[b],
                  expected / 4.0, 1e-9);
  for (int b = 0; b < 4; ++b)
    rep.check_abs(std::string("P_b[") + bname[b] + "]", score.p_b[b], 0.25,
                  1e-12);

  if (sample_rounds > 0) {
    const SampleReport sr = sample(t, sample_rounds, seed);
    const BellScore emp = t_total(sr.frequencies);
    // Worst-case standard deviation of the empirical total: each round
    // contributes +-18/N to at most one of the 12 correlator terms, so
    // Var <= (18/N)^2 * N * 12/18 = 216/N. The check allows six sigma.
    const double sigma = std::sqrt(216.0 / static_cast<double>(sample_rounds));
    nlohmann::json empj;
    to_json(empj, emp);
    rep.results()["sampled"] = {{"rounds", sample_rounds},
                                {"seed", seed},
                                {"bell", empj},
                                {"stat_sigma", sigma}};
    rep.check_abs("T_total_sampled", emp.total, expected, 6.0 * sigma);
  }
  return rep.finish(json_path);
}

int cmd_bound(int level, const std::string& export_path,
              const std::string& certify_path, double gap_tol, bool pinned,
              bool no_ppt, bool phase1, const std::string& json_path) {
  Report rep("bound", {{"level", level},
                       {"export", export_path},
                       {"certify", certify_path},
                       {"gap_tol", gap_tol},
                       {"pinned", pinned},
                       {"no_ppt", no_ppt},
                       {"phase1", phase1}});
  const MomentStructure st = build_structure(level, level);
  AssembleOptions ao;
  ao.ppt = !no_ppt;
  ao.phase1 = phase1;
  if (pinned) ao.pinned = correlations(ideal_strategy());
  const AssembledSdp a = assemble(st, ao);

  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : a.problem.blocks)
    blocks.push_back({{"name", b.name}, {"dim", b.dim}, {"diag", b.diag}});
  rep.results()["problem"] = {
      {"level", {level, level}},
      {"moment_dim", st.dim},
      {"classes_per_outcome", st.n_classes},
      {"ppt_pairs", st.ppt_pairs.size()},
      {"variables", a.problem.num_vars},
      {"objective_constant", a.problem.objective_constant},
      {"blocks", blocks}};
  rep.note("moment matrices " + std::to_string(st.dim) + "x" +
           std::to_string(st.dim) + ", " + std::to_string(a.problem.num_vars) +
           " variables, " + std::to_string(st.n_classes) +
           " classes per outcome, " + std::to_string(st.ppt_pairs.size()) +
           " partial-transpose pairs");

  if (!export_path.empty()) {
    export_sdpa(a.problem, export_path);
    std::ifstream check(export_path, std::ios::ate | std::ios::binary);
    const long size = check ? static_cast<long>(check.tellg()) : -1;
    rep.check_true("sdpa_exported", size > 0,
                   export_path + " (" + std::to_string(size) + " bytes)");
    const SdpProblem back = import_sdpa(export_path);
    rep.check_true("sdpa_roundtrip",
                   to_sdpa(back) == to_sdpa(a.problem) &&
                       back.num_vars == a.problem.num_vars,
                   "import(export(p)) reproduces the exported text");
    rep.note("no solve requested; pass the file to an external solver, e.g. "
             "python3 tools/external_solve.py " + export_path + " result.json");
    return rep.finish(json_path);
  }

  const bool bound_mode = !pinned && !phase1 && ao.ppt;

  auto certificate_checks = [&](const CertificateReport& cr) {
    rep.results()["certificate"] = {
        {"dual_objective", cr.dual_objective},
        {"certified_bound", cr.certified_bound},
        {"max_equality_residual", cr.max_equality_residual},
        {"min_eigenvalue", cr.min_eigenvalue},
        {"residual_correction", cr.residual_correction},
        {"eigen_correction", cr.eigen_correction}};
    rep.note("certified bound " + nine(cr.certified_bound) +
             " = dual objective " + nine(cr.dual_objective) +
             " + residual correction " + nine(cr.residual_correction) +
             " + eigenvalue correction " + nine(cr.eigen_correction));
    if (bound_mode && level == 1)
      rep.check_range("certified_bound", cr.certified_bound, 7.6605,
                      8.485282);
    if (bound_mode && level >= 2) {
      rep.check_range("certified_bound", cr.certified_bound, 7.659, 7.661);
      rep.check_true("separation_from_complex_value",
                     cr.certified_bound < kSixSqrt2 - 1e-3,
                     "certified bound " + nine(cr.certified_bound) +
                         " < 6*sqrt(2) - 1e-3");
    }
    if (pinned && phase1)
      rep.check_max("pinned_phase1_certificate", cr.certified_bound, -1e-6);
  };

  if (!certify_path.empty()) {
    const ExternalSolution ext = import_solution_json(certify_path, a.problem);
    rep.results()["external"] = {{"solver", ext.solver},
                                 {"status", ext.status},
                                 {"value", ext.reported_objective},
                                 {"dual_value", ext.reported_dual}};
    rep.note("external solution by " + ext.solver + " (" + ext.status +
             "), reported value " + nine(ext.reported_objective));
    const PointEvaluation pe = evaluate_point(a.problem, ext.x);
    rep.results()["primal_point"] = {{"objective", pe.objective},
                                     {"min_eigenvalue", pe.min_eigenvalue},
                                     {"min_diag", pe.min_diag}};
    rep.check_abs("external_primal_consistent", pe.objective,
                  ext.reported_objective, 1e-5);
    try {
      const CertificateReport cr =
          certify_upper_bound_report(a.problem, ext.dual_blocks, 1e-6);
      rep.check_true("dual_certificate_valid", true,
                     "residuals within 1e-6, dual matrices PSD");
      certificate_checks(cr);
    } catch (const std::exception& e) {
      rep.check_true("dual_certificate_valid", false, e.what());
    }
    return rep.finish(json_path);
  }

  // Pinned data without partial-transpose constraints admits an explicit
  // feasible point: the entrywise real parts of the ideal complex moments.
  // No solver is needed to exhibit feasibility.
  if (pinned && no_ppt && !phase1) {
    const StrategyMoments m = moments_from_strategy(ideal_strategy(), st);
    const std::vector<double> x = point_from_moments(a, st, m);
    const PointEvaluation pe = evaluate_point(a.problem, x);
    rep.results()["feasible_point"] = {{"objective", pe.objective},
                                       {"min_eigenvalue", pe.min_eigenvalue},
                                       {"min_diag", pe.min_diag}};
    rep.note("explicit point: real parts of the ideal complex moments");
    rep.check_abs("pinned_objective", pe.objective, kSixSqrt2, 1e-4);
    rep.check_true("ideal_moments_feasible", pe.min_eigenvalue >= -1e-8,
                   "min eigenvalue " + nine(pe.min_eigenvalue) + " >= -1e-8");
    return rep.finish(json_path);
  }

  if (a.problem.num_vars > 10000) {
    const double schur_gb = 8.0 * a.problem.num_vars *
                            static_cast<double>(a.problem.num_vars) / 1e9;
    rep.note("refusing the in-house solve: " +
             std::to_string(a.problem.num_vars) +
             " variables need a dense Schur complement of ~" +
             nine(schur_gb) + " GB; use the external path instead:");
    rep.note("  realnet bound --level " + std::to_string(level) +
             (pinned ? std::string(" --pinned") : std::string()) +
             (phase1 ? std::string(" --phase1") : std::string()) +
             (no_ppt ? std::string(" --no-ppt") : std::string()) +
             " --export problem.dat-s");
    rep.note("  python3 tools/external_solve.py problem.dat-s result.json "
             "--eps 3e-6 --time-limit 14000");
    rep.note("  realnet bound --level " + std::to_string(level) +
             (pinned ? std::string(" --pinned") : std::string()) +
             (phase1 ? std::string(" --phase1") : std::string()) +
             (no_ppt ? std::string(" --no-ppt") : std::string()) +
             " --certify result.json");
    return rep.finish(json_path, 2);
  }

  SolveOptions so;
  so.gap_tol = gap_tol;
  const SdpSolution sol = solve(a.problem, so);
  rep.results()["solution"] = {{"status", to_string(sol.status)},
                               {"primal_value", sol.primal_value},
                               {"dual_value", sol.dual_value},
                               {"iterations", sol.iterations},
                               {"duality_gap", sol.duality_gap},
                               {"primal_residual", sol.primal_residual},
                               {"dual_residual", sol.dual_residual}};
  rep.note("in-house solve: status " + std::string(to_string(sol.status)) +
           ", primal " + nine(sol.primal_value) + ", dual " +
           nine(sol.dual_value) + ", " + std::to_string(sol.iterations) +
           " iterations");
  rep.check_true("solver_status_optimal", sol.status == SdpStatus::optimal,
                 to_string(sol.status));
  try {
    const CertificateReport cr =
        certify_upper_bound_report(a.problem, sol.dual_blocks, 1e-6);
    rep.check_true("dual_certificate_valid", true,
                   "residuals within 1e-6, dual matrices PSD");
    certificate_checks(cr);
    if (bound_mode && level == 1) {
      // Lower-bound sandwich: the ideal complex moments are feasible at
      // level (1,1) even with the partial-transpose constraints.
      const StrategyMoments m = moments_from_strategy(ideal_strategy(), st);
      const std::vector<double> x = point_from_moments(a, st, m);
      const PointEvaluation pe = evaluate_point(a.problem, x);
      rep.results()["ideal_point"] = {{"objective", pe.objective},
                                      {"min_eigenvalue", pe.min_eigenvalue}};
      rep.check_abs("ideal_point_objective", pe.objective, kSixSqrt2, 1e-9);
      rep.check_true("ideal_point_feasible", pe.min_eigenvalue >= -1e-9,
                     "min eigenvalue " + nine(pe.min_eigenvalue) + " >= -1e-9");
      rep.check_true("weak_duality_sandwich",
                     cr.certified_bound >= kSixSqrt2 - 1e-7,
                     "certificate does not undercut the feasible value");
    }
  } catch (const std::exception& e) {
    rep.check_true("dual_certificate_valid", false, e.what());
  }
  return rep.finish(json_path);
}

int cmd_selftest(std::uint64_t seed, int trials,
                 const std::string& json_path) {
  Report rep("selftest", {{"seed", seed}, {"trials", trials}});
  const Strategy ideal = ideal_strategy();

  // Swap isometry on the embedded real ideal: outputs must match the
  // reference states exactly (up to numerical noise).
  std::array<Mat, 3> alice_e;
  for (int k = 0; k < 3; ++k)
    alice_e[k] = embed_observable(ideal.alice[k].m);
  std::array<Mat, 6> charlie_e;
  for (int z = 0; z < 6; ++z)
    charlie_e[z] = embed_observable(ideal.charlie[z].m);
  const auto conds = conditional_states(ideal);
  std::array<DenseMatrix, 4> conds_e;
  for (int b = 0; b < 4; ++b) {
    DenseMatrix e = embed_ac_state(conds[b]);
    conds_e[b] = DenseMatrix(e.m, {4, 4});
  }
  const IsometryOutput ex = extract_network(alice_e, charlie_e, conds_e);
  double worst_perfect = 0.0, worst_weight = 0.0;
  for (int b = 0; b < 4; ++b) {
    worst_perfect = std::max(
        worst_perfect, trace_distance(ex.per_b_state[b], perfect_state(b)));
    worst_weight = std::max(worst_weight, std::abs(ex.weights[b] - 0.25));
  }
  const double dist_suma = trace_distance(ex.summed_state, suma_state());
  rep.results()["extraction"] = {{"max_perfect_state_distance", worst_perfect},
                                 {"max_weight_error", worst_weight},
                                 {"suma_distance", dist_suma}};
  rep.check_max("extraction_perfect_state_distance", worst_perfect, 1e-9);
  rep.check_max("extraction_weight_error", worst_weight, 1e-9);
  rep.check_max("extraction_suma_distance", dist_suma, 1e-9);

  // Distance of the summed reference state to the partial-transpose-
  // invariant set (one 16-dimensional SDP).
  const double d_suma = ppt_set_distance(suma_state());
  rep.results()["ppt_distance_suma"] = d_suma;
  rep.check_abs("ppt_distance_suma", d_suma, 1.0, 1e-6);

  // All-real strategies must land in the invariant set.
  std::mt19937_64 rng(seed);
  double worst_real = 0.0;
  for (int i = 0; i < trials; ++i) {
    const Strategy s = random_real_strategy(rng);
    const IsometryOutput out = extract_network(s);
    worst_real = std::max(worst_real, ppt_set_distance(out.summed_state));
  }
  rep.results()["ppt_distance_real_max"] = worst_real;
  rep.check_max("ppt_distance_real_max", worst_real, 1e-8);

  // Sum-of-squares certificates and operator identities at the ideal point.
  const auto alice_obs = detail::obs3(ideal.alice);
  const auto charlie_obs = detail::obs6(ideal.charlie);
  const auto charlie_hat = charlie_zxy_hat(charlie_obs);
  double worst_sos = 0.0, worst_identity = 0.0;
  for (int b = 0; b < 4; ++b) {
    const SosReport sos = verify_sos(b, alice_obs, charlie_obs);
    worst_sos = std::max({worst_sos, sos.residual_first, sos.residual_second});
    Eigen::SelfAdjointEigenSolver<Mat> es(conds[b].m);
    CVec psi = es.eigenvectors().col(es.eigenvalues().size() - 1);
    psi /= psi.norm();
    const IdentityResiduals ir = identity_residuals(
        b, alice_obs, charlie_hat, Ket(psi, conds[b].dims));
    for (double r : ir.anticommutator) worst_identity = std::max(worst_identity, r);
    for (double r : ir.charlie_match) worst_identity = std::max(worst_identity, r);
    worst_identity = std::max(worst_identity, ir.za_expectation);
  }
  rep.results()["sos_residual_max"] = worst_sos;
  rep.results()["identity_residual_max"] = worst_identity;
  rep.check_max("sos_residual_max", worst_sos, 1e-9);
  rep.check_max("identity_residual_max", worst_identity, 1e-9);

  // The circuit is an isometry on the ideal observables.
  const Mat w = swap_isometry_matrix(
      detail::obs3(ideal.alice), charlie_zxy_hat(detail::obs6(ideal.charlie)));
  const double iso_defect =
      (w.adjoint() * w - Mat::Identity(w.cols(), w.cols()))
          .cwiseAbs()
          .maxCoeff();
  rep.results()["isometry_defect"] = iso_defect;
  rep.check_max("isometry_defect", iso_defect, 1e-12);

  return rep.finish(json_path);
}

int cmd_realsim(int trials, std::uint64_t seed, const std::string& json_path) {
  Report rep("realsim", {{"random_trials", trials}, {"seed", seed}});
  std::mt19937_64 rng(seed);

  // Single-site embeddings: all outcome probabilities must be preserved.
  double dev_single = 0.0;
  for (int i = 0; i < trials; ++i) {
    const int d = 2 + static_cast<int>(rng() % 3);
    const DenseMatrix rho = random_state(rng, d, {d});
    const std::vector<std::vector<DenseMatrix>> povms = {
        projective_povm(rng, d), two_outcome_povm(rng, d)};
    const EmbeddedSystem e = embed_single(rho, povms);
    for (std::size_t m = 0; m < povms.size(); ++m)
      for (std::size_t r = 0; r < povms[m].size(); ++r)
        dev_single = std::max(
            dev_single, std::abs(direct_prob(e.state, e.effects[0][m][r]) -
                                 direct_prob(rho, povms[m][r])));
  }
  rep.results()["single_site_max_dev"] = dev_single;
  rep.check_max("single_site_max_dev", dev_single, 1e-12);

  // Bipartite embeddings with product effects.
  double dev_bi = 0.0;
  for (int i = 0; i < trials; ++i) {
    const int d1 = 2 + static_cast<int>(rng() % 2);
    const int d2 = 2 + static_cast<int>(rng() % 2);
    const DenseMatrix rho = random_state(rng, d1 * d2, {d1, d2});
    const std::vector<std::vector<DenseMatrix>> pa = {projective_povm(rng, d1),
                                                      two_outcome_povm(rng, d1)};
    const std::vector<std::vector<DenseMatrix>> pb = {projective_povm(rng, d2)};
    const EmbeddedSystem e = embed_bipartite(rho, pa, pb);
    for (std::size_t ma = 0; ma < pa.size(); ++ma)
      for (std::size_t ra = 0; ra < pa[ma].size(); ++ra)
        for (std::size_t rb = 0; rb < pb[0].size(); ++rb) {
          const double orig =
              direct_prob(rho, tensor(pa[ma][ra], pb[0][rb]));
          const double emb = direct_prob(
              e.state, tensor(e.effects[0][ma][ra], e.effects[1][0][rb]));
          dev_bi = std::max(dev_bi, std::abs(orig - emb));
        }
  }
  rep.results()["bipartite_max_dev"] = dev_bi;
  rep.check_max("bipartite_max_dev", dev_bi, 1e-12);

  // Independent preparations measured jointly, classical-basis simulation.
  double dev_prep = 0.0;
  for (int n_src = 2; n_src <= 3; ++n_src) {
    const int preps = (n_src == 2) ? 3 : 2;
    std::vector<std::vector<DenseMatrix>> prep_sets(n_src);
    int joint = 1;
    for (int i = 0; i < n_src; ++i) {
      for (int p = 0; p < preps; ++p) {
        CVec v = random_complex(rng, 2, 1);
        v /= v.norm();
        prep_sets[i].push_back(DenseMatrix(Mat(v * v.adjoint()), {2}));
      }
      joint *= 2;
    }
    const std::vector<DenseMatrix> povm = projective_povm(rng, joint);
    const ClassicalSimulation sim =
        simulate_independent_preparations(prep_sets, povm);
    std::vector<int> label(n_src, 0);
    for (;;) {
      DenseMatrix sim_state = sim.states[0][label[0]];
      DenseMatrix orig_state = prep_sets[0][label[0]];
      for (int i = 1; i < n_src; ++i) {
        sim_state = tensor(sim_state, sim.states[i][label[i]]);
        orig_state = tensor(orig_state, prep_sets[i][label[i]]);
      }
      for (std::size_t r = 0; r < povm.size(); ++r)
        dev_prep = std::max(dev_prep,
                            std::abs(direct_prob(sim_state, sim.effects[r]) -
                                     direct_prob(orig_state, povm[r])));
      int k = n_src - 1;
      while (k >= 0 && ++label[k] == preps) label[k--] = 0;
      if (k < 0) break;
    }
  }
  rep.results()["independent_prep_max_dev"] = dev_prep;
  rep.check_max("independent_prep_max_dev", dev_prep, 1e-12);

  // The triple-CHSH-optimal complex strategy embeds to a real one with the
  // same score in the single-source Bell scenario.
  const Strategy ideal = ideal_strategy();
  std::vector<std::vector<DenseMatrix>> apov, cpov;
  for (int x = 0; x < 3; ++x) apov.push_back(dichotomic_povm(ideal.alice[x]));
  for (int z = 0; z < 6; ++z) cpov.push_back(dichotomic_povm(ideal.charlie[z]));
  const EmbeddedSystem e = embed_bipartite(ideal.state_ab1, apov, cpov);
  std::array<std::array<double, 6>, 3> table{};
  for (int x = 0; x < 3; ++x)
    for (int z = 0; z < 6; ++z)
      for (int ai = 0; ai < 2; ++ai)
        for (int ci = 0; ci < 2; ++ci) {
          const double sign = (ai == 0 ? 1.0 : -1.0) * (ci == 0 ? 1.0 : -1.0);
          table[x][z] += sign * direct_prob(
                                    e.state, tensor(e.effects[0][x][ai],
                                                    e.effects[1][z][ci]));
        }
  const double chsh3 = chsh3_value(table);
  rep.results()["chsh3_embedded"] = chsh3;
  rep.check_abs("chsh3_embedded", chsh3, kSixSqrt2, 1e-9);

  // Negative control: transplanting the joint Bell measurement across two
  // independently embedded links must fail reality and completeness.
  const NegativeControl nc = negative_control_bob();
  rep.results()["negative_control"] = {
      {"reality_ok", nc.reality_ok},
      {"completeness_ok", nc.completeness_ok},
      {"max_imag", nc.max_imag},
      {"completeness_defect", nc.completeness_defect}};
  rep.check_true("negative_control_fails",
                 !nc.completeness_ok && nc.completeness_defect > 0.4,
                 "completeness defect " + nine(nc.completeness_defect) +
                     " (mapped effects do not sum to the identity)");
  return rep.finish(json_path);
}

int cmd_epsilon(std::uint64_t seed, const std::string& json_path) {
  Report rep("epsilon", {{"seed", seed}});

  const double ec = critical_epsilon();
  const EpsilonBudget at_ec = epsilon_budget(ec);
  rep.results()["critical_epsilon"] = ec;
  nlohmann::json bj;
  to_json(bj, at_ec);
  rep.results()["budget_at_critical"] = bj;
  rep.check_abs("critical_epsilon", ec, 7.18e-5, 0.02 * 7.18e-5);
  rep.check_max("budget_total_at_critical", at_ec.total(), 1.0 + 1e-9);
  rep.check_true("budget_crosses_above_critical",
                 epsilon_budget(ec * 1.001).total() > 1.0,
                 "total(1.001 * critical) = " +
                     nine(epsilon_budget(ec * 1.001).total()) + " > 1");

  // Noise threshold on a 1e-4 visibility grid against the certified bound.
  const double bound = 7.6605;
  int k = 0;
  for (k = 0; k <= 10000; ++k) {
    const double v = 1e-4 * k;
    if (kSixSqrt2 * v * v > bound) break;
  }
  const double v_grid = 1e-4 * k;
  rep.results()["visibility_grid_threshold"] = v_grid;
  rep.results()["visibility_threshold_continuous"] =
      visibility_threshold(bound);
  rep.check_abs("visibility_grid_threshold", v_grid, 0.9502, 0.0002);
  rep.check_abs("visibility_threshold_continuous",
                visibility_threshold(bound), 0.950157136, 1e-6);

  // Robustness inequalities on a perturbed-strategy family: rotate one of
  // the ideal observables by a small angle and verify every measured
  // quantity stays within its deficit-driven bound.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double worst_margin = -1.0;
  nlohmann::json family = nlohmann::json::array();
  for (int i = 0; i < 10; ++i) {
    Strategy s = ideal_strategy();
    const double theta = std::pow(10.0, -4.0 + 1.5 * uni(rng));
    const int zi = static_cast<int>(rng() % 6);
    const int axis = static_cast<int>(rng() % 3);
    const Mat sig = (axis == 0   ? pauli_x()
                     : axis == 1 ? pauli_y()
                                 : pauli_z())
                        .m;
    const Mat r = std::cos(theta) * Mat::Identity(2, 2) -
                  cplx(0, 1) * std::sin(theta) * sig;
    s.charlie[zi] = DenseMatrix(Mat(r * s.charlie[zi].m * r.adjoint()), {2});
    const auto deficits = realized_deficits(s);
    const double eps = *std::max_element(deficits.begin(), deficits.end());
    const auto checks = approximate_extraction_check(s, eps);
    for (const auto& c : checks) {
      worst_margin = std::max({worst_margin, c.distance - c.distance_bound,
                               c.norm_error - c.norm_bound,
                               c.za_expectation - c.za_bound});
      family.push_back({{"instance", i},
                        {"b", c.b},
                        {"realized_epsilon", c.realized_epsilon},
                        {"distance", c.distance},
                        {"distance_bound", c.distance_bound},
                        {"norm_error", c.norm_error},
                        {"norm_bound", c.norm_bound},
                        {"za_expectation", c.za_expectation},
                        {"za_bound", c.za_bound}});
    }
  }
  rep.results()["perturbed_family"] = family;
  rep.results()["worst_margin"] = worst_margin;
  rep.check_max("robustness_worst_margin", worst_margin, 1e-12);

  return rep.finish(json_path);
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* t = std::getenv("REALNET_MAX_THREADS")) {
    const int n = std::atoi(t);
    if (n > 0) Eigen::setNbThreads(n);
  }

  CLI::App app{"realnet: real-versus-complex quantum network toolkit"};
  app.require_subcommand(1);

  double visibility = 1.0;
  std::uint64_t sample_rounds = 0, seed = 0;
  std::string json_path;
  auto* ideal = app.add_subcommand(
      "ideal", "Ideal network correlations and the Bell functional");
  ideal->add_option("--visibility", visibility, "link visibility in [0,1]")
      ->check(CLI::Range(0.0, 1.0));
  ideal->add_option("--sample", sample_rounds,
                    "also sample this many i.i.d. rounds");
  ideal->add_option("--seed", seed, "sampling seed");
  ideal->add_option("--json", json_path, "write the JSON report here");

  int level = 1;
  std::string export_path, certify_path;
  double gap_tol = 1e-7;
  bool pinned = false, no_ppt = false, phase1 = false;
  std::string bound_json;
  auto* bound = app.add_subcommand(
      "bound", "Moment relaxation of the real-network Bell bound");
  bound->add_option("--level", level, "relaxation level k for (k,k)")
      ->check(CLI::Range(1, 3));
  bound->add_option("--export", export_path, "write SDPA file, no solve");
  bound->add_option("--certify", certify_path,
                    "validate an external solution JSON");
  bound->add_option("--gap-tol", gap_tol, "in-house solver gap tolerance");
  bound->add_flag("--pinned", pinned, "pin the data to the ideal behaviour");
  bound->add_flag("--no-ppt", no_ppt, "drop the partial-transpose constraints");
  bound->add_flag("--phase1", phase1, "feasibility mode: maximize t");
  bound->add_option("--json", bound_json, "write the JSON report here");

  std::uint64_t st_seed = 2718;
  int st_trials = 3;
  std::string st_json;
  auto* selftest = app.add_subcommand(
      "selftest", "Isometry extraction and PPT-set distances");
  selftest->add_option("--seed", st_seed, "random-strategy seed");
  selftest->add_option("--trials", st_trials,
                       "number of random all-real strategies");
  selftest->add_option("--json", st_json, "write the JSON report here");

  int rs_trials = 100;
  std::uint64_t rs_seed = 1;
  std::string rs_json;
  auto* realsim = app.add_subcommand(
      "realsim", "Real-amplitude simulations of complex statistics");
  realsim->add_option("--random-trials", rs_trials, "instances per family");
  realsim->add_option("--seed", rs_seed, "instance seed");
  realsim->add_option("--json", rs_json, "write the JSON report here");

  std::uint64_t ep_seed = 99;
  std::string ep_json;
  auto* epsilon = app.add_subcommand(
      "epsilon", "Robustness budget and noise thresholds");
  epsilon->add_option("--seed", ep_seed, "perturbed-family seed");
  epsilon->add_option("--json", ep_json, "write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ideal) return cmd_ideal(visibility, sample_rounds, seed, json_path);
    if (*bound)
      return cmd_bound(level, export_path, certify_path, gap_tol, pinned,
                       no_ppt, phase1, bound_json);
    if (*selftest) return cmd_selftest(st_seed, st_trials, st_json);
    if (*realsim) return cmd_realsim(rs_trials, rs_seed, rs_json);
    if (*epsilon) return cmd_epsilon(ep_seed, ep_json);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
