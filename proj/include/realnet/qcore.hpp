// realnet/qcore.hpp — dense complex linear algebra for finite-dimensional
// quantum systems: tensor products, partial trace/transpose, Born rule,
// Bell basis, Hermiticity/positivity/reality predicates, JSON (de)serialization.
//
// Conventions (fixed globally):
//   * Row-major storage; JSON flattening is row-major.
//   * Subsystem 0 is the MOST significant tensor factor: for dims (d0,d1),
//     basis index i = i0*d1 + i1.
//   * "Real operator" is a predicate (max |Im entry| <= 1e-12), not a type.
//   * Default tolerance for Hermiticity/positivity predicates: 1e-9.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace realnet {

using cplx = std::complex<double>;
using Mat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

inline constexpr double kDefaultTol = 1e-9;   // PSD / Hermiticity predicates
inline constexpr double kRealTol = 1e-12;     // reality predicate
inline const double kSqrt2 = std::numbers::sqrt2;

/// Dense complex matrix with optional subsystem-dimension metadata.
/// dims empty means "no tensor structure recorded"; operations that need the
/// structure (partial_trace, partial_transpose, ...) throw without it.
struct DenseMatrix {
  Mat m;
  std::vector<int> dims;

  DenseMatrix() = default;
  explicit DenseMatrix(Mat mat, std::vector<int> d = {})
      : m(std::move(mat)), dims(std::move(d)) {
    check_dims();
  }
  Eigen::Index rows() const { return m.rows(); }
  Eigen::Index cols() const { return m.cols(); }

  void check_dims() const {
    if (dims.empty()) return;
    long long p = 1;
    for (int d : dims) {
      if (d <= 0) throw std::invalid_argument("DenseMatrix: nonpositive dim");
      p *= d;
    }
    if (p != m.rows() || p != m.cols())
      throw std::invalid_argument("DenseMatrix: dims do not factor the size");
  }
};

/// Column vector (state) with optional subsystem dimensions. States are
/// normalized unless a caller explicitly works with unnormalized vectors
/// (the self-testing proofs manipulate those; no invariant is enforced here).
struct Ket {
  CVec v;
  std::vector<int> dims;

  Ket() = default;
  explicit Ket(CVec vec, std::vector<int> d = {})
      : v(std::move(vec)), dims(std::move(d)) {
    if (!dims.empty()) {
      long long p = 1;
      for (int d_ : dims) p *= d_;
      if (p != v.size()) throw std::invalid_argument("Ket: dims mismatch");
    }
  }
  double norm() const { return v.norm(); }
};

// ---------------------------------------------------------------------------
// Elementary constructors
// ---------------------------------------------------------------------------

inline DenseMatrix identity(int n, std::vector<int> dims = {}) {
  return DenseMatrix(Mat::Identity(n, n), std::move(dims));
}

inline DenseMatrix pauli_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return DenseMatrix(std::move(m), {2});
}

inline DenseMatrix pauli_y() {
  Mat m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return DenseMatrix(std::move(m), {2});
}

inline DenseMatrix pauli_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return DenseMatrix(std::move(m), {2});
}

/// Computational basis ket |idx> in dimension dim.
inline Ket basis_ket(int dim, int idx, std::vector<int> dims = {}) {
  if (idx < 0 || idx >= dim) throw std::invalid_argument("basis_ket: bad index");
  CVec v = CVec::Zero(dim);
  v(idx) = 1.0;
  if (dims.empty()) dims = {dim};
  return Ket(std::move(v), std::move(dims));
}

/// |+i> = (|0> + i|1>)/sqrt2 and |-i> = (|0> - i|1>)/sqrt2.
inline Ket ket_plus_i() {
  CVec v(2);
  v << cplx(1, 0) / kSqrt2, cplx(0, 1) / kSqrt2;
  return Ket(std::move(v), {2});
}

inline Ket ket_minus_i() {
  CVec v(2);
  v << cplx(1, 0) / kSqrt2, cplx(0, -1) / kSqrt2;
  return Ket(std::move(v), {2});
}

/// Outer product |k><k| carrying the ket's dims.
inline DenseMatrix projector(const Ket& k) {
  return DenseMatrix(k.v * k.v.adjoint(), k.dims);
}

/// Bell basis in the convention used throughout this library:
///   b=0: |phi+> = (|00>+|11>)/sqrt2     b=1: |psi+> = (|10>+|01>)/sqrt2
///   b=2: |phi-> = (|00>-|11>)/sqrt2     b=3: |psi-> = (|10>-|01>)/sqrt2
/// Note |psi-> = (|10>-|01>)/sqrt2 — sign differs from the more common
/// (|01>-|10>)/sqrt2. The bit pair is b = 2*b1 + b2 with
/// 00->phi+, 01->psi+, 10->phi-, 11->psi-.
inline std::array<Ket, 4> bell_basis() {
  auto mk = [](cplx a00, cplx a01, cplx a10, cplx a11) {
    CVec v(4);
    v << a00, a01, a10, a11;
    return Ket(std::move(v), {2, 2});
  };
  const double s = 1.0 / kSqrt2;
  return {mk(s, 0, 0, s), mk(0, s, s, 0), mk(s, 0, 0, -s), mk(0, -s, s, 0)};
}

inline const char* bell_label(int b) {
  static const char* names[4] = {"phi+", "psi+", "phi-", "psi-"};
  if (b < 0 || b > 3) throw std::invalid_argument("bell_label: b out of range");
  return names[b];
}

// ---------------------------------------------------------------------------
// Tensor algebra
// ---------------------------------------------------------------------------

/// Kronecker product; dims metadata concatenates.
inline DenseMatrix tensor(const DenseMatrix& a, const DenseMatrix& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a.m(i, j) * b.m;
  std::vector<int> dims;
  if (!a.dims.empty() && !b.dims.empty()) {
    dims = a.dims;
    dims.insert(dims.end(), b.dims.begin(), b.dims.end());
  }
  return DenseMatrix(std::move(out), std::move(dims));
}

inline Ket tensor(const Ket& a, const Ket& b) {
  CVec out(a.v.size() * b.v.size());
  for (Eigen::Index i = 0; i < a.v.size(); ++i)
    out.segment(i * b.v.size(), b.v.size()) = a.v(i) * b.v;
  std::vector<int> dims;
  if (!a.dims.empty() && !b.dims.empty()) {
    dims = a.dims;
    dims.insert(dims.end(), b.dims.begin(), b.dims.end());
  }
  return Ket(std::move(out), std::move(dims));
}

template <typename T, typename... Rest>
T tensor(const T& a, const T& b, const Rest&... rest) {
  if constexpr (sizeof...(rest) == 0)
    return tensor(a, b);
  else
    return tensor(tensor(a, b), rest...);
}

namespace detail {

inline std::vector<long long> strides(const std::vector<int>& dims) {
  std::vector<long long> s(dims.size());
  long long acc = 1;
  for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
    s[i] = acc;
    acc *= dims[i];
  }
  return s;
}

inline void require_dims(const DenseMatrix& m, const char* op) {
  if (m.dims.empty())
    throw std::invalid_argument(std::string(op) + ": dims metadata required");
  m.check_dims();
}

inline void require_subsystems(const std::vector<int>& sys, size_t nfac,
                               const char* op) {
  for (int s : sys)
    if (s < 0 || static_cast<size_t>(s) >= nfac)
      throw std::invalid_argument(std::string(op) + ": subsystem out of range");
}

}  // namespace detail

/// Partial trace keeping the listed subsystems (original order preserved).
/// Trace is preserved: tr(result) = tr(input).
inline DenseMatrix partial_trace(const DenseMatrix& m, std::vector<int> keep) {
  detail::require_dims(m, "partial_trace");
  detail::require_subsystems(keep, m.dims.size(), "partial_trace");
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());

  std::vector<int> traced;
  for (size_t i = 0; i < m.dims.size(); ++i)
    if (!std::binary_search(keep.begin(), keep.end(), static_cast<int>(i)))
      traced.push_back(static_cast<int>(i));

  const auto st = detail::strides(m.dims);
  long long dk = 1, dt = 1;
  std::vector<int> kdims, tdims;
  for (int i : keep) { dk *= m.dims[i]; kdims.push_back(m.dims[i]); }
  for (int i : traced) { dt *= m.dims[i]; tdims.push_back(m.dims[i]); }

  // Base offsets of every multi-index over the kept / traced factor sets.
  auto offsets = [&](const std::vector<int>& fac, long long count) {
    std::vector<long long> off(count, 0);
    for (long long x = 0; x < count; ++x) {
      long long rem = x;
      for (int i = static_cast<int>(fac.size()) - 1; i >= 0; --i) {
        const int f = fac[i];
        off[x] += (rem % m.dims[f]) * st[f];
        rem /= m.dims[f];
      }
    }
    return off;
  };
  const auto koff = offsets(keep, dk);
  const auto toff = offsets(traced, dt);

  Mat out = Mat::Zero(dk, dk);
  for (long long r = 0; r < dk; ++r)
    for (long long c = 0; c < dk; ++c) {
      cplx acc = 0;
      for (long long t = 0; t < dt; ++t)
        acc += m.m(koff[r] + toff[t], koff[c] + toff[t]);
      out(r, c) = acc;
    }
  return DenseMatrix(std::move(out), std::move(kdims));
}

/// Transpose applied to the listed tensor factors only. Involutive.
inline DenseMatrix partial_transpose(const DenseMatrix& m, std::vector<int> sys) {
  detail::require_dims(m, "partial_transpose");
  detail::require_subsystems(sys, m.dims.size(), "partial_transpose");
  std::sort(sys.begin(), sys.end());
  sys.erase(std::unique(sys.begin(), sys.end()), sys.end());

  const auto st = detail::strides(m.dims);
  const long long n = m.rows();
  Mat out(n, n);
  std::vector<int> ridx(m.dims.size()), cidx(m.dims.size());
  for (long long r = 0; r < n; ++r) {
    long long rem = r;
    for (size_t i = 0; i < m.dims.size(); ++i) {
      ridx[i] = static_cast<int>(rem / st[i]);
      rem %= st[i];
    }
    for (long long c = 0; c < n; ++c) {
      long long remc = c;
      for (size_t i = 0; i < m.dims.size(); ++i) {
        cidx[i] = static_cast<int>(remc / st[i]);
        remc %= st[i];
      }
      long long rr = 0, cc = 0;
      for (size_t i = 0; i < m.dims.size(); ++i) {
        const bool swap = std::binary_search(sys.begin(), sys.end(),
                                             static_cast<int>(i));
        rr += (swap ? cidx[i] : ridx[i]) * st[i];
        cc += (swap ? ridx[i] : cidx[i]) * st[i];
      }
      out(rr, cc) = m.m(r, c);
    }
  }
  return DenseMatrix(std::move(out), m.dims);
}

/// Reorder tensor factors: new factor i is old factor perm[i].
inline DenseMatrix permute_systems(const DenseMatrix& m,
                                   const std::vector<int>& perm) {
  detail::require_dims(m, "permute_systems");
  if (perm.size() != m.dims.size())
    throw std::invalid_argument("permute_systems: perm size mismatch");
  detail::require_subsystems(perm, m.dims.size(), "permute_systems");

  std::vector<int> ndims(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) ndims[i] = m.dims[perm[i]];
  const auto ost = detail::strides(m.dims);
  const auto nst = detail::strides(ndims);
  const long long n = m.rows();

  // map old basis index -> new basis index
  std::vector<long long> map(n);
  for (long long x = 0; x < n; ++x) {
    long long rem = x, nx = 0;
    std::vector<int> idx(m.dims.size());
    for (size_t i = 0; i < m.dims.size(); ++i) {
      idx[i] = static_cast<int>(rem / ost[i]);
      rem %= ost[i];
    }
    for (size_t i = 0; i < perm.size(); ++i) nx += idx[perm[i]] * nst[i];
    map[x] = nx;
  }
  Mat out(n, n);
  for (long long r = 0; r < n; ++r)
    for (long long c = 0; c < n; ++c) out(map[r], map[c]) = m.m(r, c);
  return DenseMatrix(std::move(out), std::move(ndims));
}

// ---------------------------------------------------------------------------
// Predicates and scalar maps
// ---------------------------------------------------------------------------

inline DenseMatrix dagger(const DenseMatrix& m) {
  return DenseMatrix(m.m.adjoint(), m.dims);
}

inline bool is_hermitian(const DenseMatrix& m, double tol = kDefaultTol) {
  return (m.m - m.m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

/// Reality predicate: max |Im entry| <= tol (default 1e-12).
inline bool is_real(const DenseMatrix& m, double tol = kRealTol) {
  return m.m.imag().cwiseAbs().maxCoeff() <= tol;
}

inline double min_eigenvalue(const DenseMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es((Mat((m.m + m.m.adjoint()) / 2.0)));
  return es.eigenvalues().minCoeff();
}

inline bool is_psd(const DenseMatrix& m, double tol = kDefaultTol) {
  return is_hermitian(m, tol) && min_eigenvalue(m) >= -tol;
}

/// Trace norm ||M||_1 = sum of singular values.
inline double trace_norm(const DenseMatrix& m) {
  Eigen::JacobiSVD<Mat> svd(m.m);
  return svd.singularValues().sum();
}

/// Trace distance (1/2)||a-b||_1.
inline double trace_distance(const DenseMatrix& a, const DenseMatrix& b) {
  return 0.5 * trace_norm(DenseMatrix(a.m - b.m));
}

/// Born rule Pr = tr(rho * effect). Validates rho (PSD, trace 1) and the
/// effect (PSD, <= identity) at the given tolerance; asserts the imaginary
/// part of the trace is below tolerance and returns the real part.
inline double born(const DenseMatrix& rho, const DenseMatrix& effect,
                   double tol = kDefaultTol) {
  if (!is_psd(rho, tol)) throw std::invalid_argument("born: rho not PSD");
  if (std::abs(rho.m.trace().real() - 1.0) > tol ||
      std::abs(rho.m.trace().imag()) > tol)
    throw std::invalid_argument("born: rho trace != 1");
  if (!is_psd(effect, tol)) throw std::invalid_argument("born: effect not PSD");
  DenseMatrix gap(Mat(Mat::Identity(effect.rows(), effect.cols()) - effect.m));
  if (!is_psd(gap, tol)) throw std::invalid_argument("born: effect > identity");
  const cplx t = (rho.m * effect.m).trace();
  if (std::abs(t.imag()) > tol)
    throw std::invalid_argument("born: imaginary probability");
  return t.real();
}

/// Entry-wise complex conjugate (the * in the real-embedding formulas).
inline DenseMatrix conjugate(const DenseMatrix& m) {
  return DenseMatrix(m.m.conjugate(), m.dims);
}

// ---------------------------------------------------------------------------
// JSON (de)serialization: {"rows","cols","dims","re":[...],"im":[...]},
// row-major flattening.
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const DenseMatrix& m) {
  std::vector<double> re, im;
  re.reserve(m.rows() * m.cols());
  im.reserve(m.rows() * m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      re.push_back(m.m(r, c).real());
      im.push_back(m.m(r, c).imag());
    }
  j = nlohmann::json{{"rows", m.rows()},
                     {"cols", m.cols()},
                     {"dims", m.dims},
                     {"re", re},
                     {"im", im}};
}

inline void from_json(const nlohmann::json& j, DenseMatrix& m) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  if (re.size() != static_cast<size_t>(rows * cols) || im.size() != re.size())
    throw std::invalid_argument("DenseMatrix JSON: entry count mismatch");
  Mat mat(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const size_t k = static_cast<size_t>(r * cols + c);
      mat(r, c) = cplx(re[k], im[k]);
    }
  m = DenseMatrix(std::move(mat), j.value("dims", std::vector<int>{}));
}

}  // namespace realnet
