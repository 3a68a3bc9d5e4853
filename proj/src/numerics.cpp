#include "uma/numerics.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uma/error.hpp"
#include "uma/kernels.hpp"

namespace uma {

namespace {

using Exec = kernels::Parallel;

void require_mask_shape(const DenseMatrix& a, const ObservationMask& mask, const char* op) {
  if (!mask.matches(a))
    throw DimensionError(std::string(op) + ": mask is " + std::to_string(mask.rows()) + "x" +
                         std::to_string(mask.cols()) + ", matrix is " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()));
}

// Raw LAPACK thin SVD in row-major layout: u is m x k, vt is k x n.
struct RawSvd {
  std::vector<double> u;
  std::vector<double> s;
  std::vector<double> vt;
  int k = 0;
};

RawSvd raw_svd(const DenseMatrix& a, bool vectors) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (m < 1 || n < 1) throw DimensionError("svd: empty matrix");
  RawSvd out;
  out.k = std::min(m, n);
  out.s.resize(out.k);
  if (vectors) {
    out.u.resize(static_cast<std::size_t>(m) * out.k);
    out.vt.resize(static_cast<std::size_t>(out.k) * n);
  }
  const char job = vectors ? 'S' : 'N';
  std::vector<double> work(a.values().begin(), a.values().end());
  int info = LAPACKE_dgesdd(LAPACK_ROW_MAJOR, job, m, n, work.data(), n, out.s.data(),
                            vectors ? out.u.data() : nullptr, out.k,
                            vectors ? out.vt.data() : nullptr, n);
  if (info == 0) return out;
  if (info < 0) throw ParameterError("svd: dgesdd rejected argument " + std::to_string(-info));

  // Divide and conquer failed; QR iteration is slower but more robust.
  work.assign(a.values().begin(), a.values().end());
  std::vector<double> superb(std::max(1, out.k - 1));
  info = LAPACKE_dgesvd(LAPACK_ROW_MAJOR, job, job, m, n, work.data(), n, out.s.data(),
                        vectors ? out.u.data() : nullptr, out.k,
                        vectors ? out.vt.data() : nullptr, n, superb.data());
  if (info == 0) return out;
  double residual = 0.0;
  for (double v : superb) residual += v * v;
  throw NumericalError("svd: no convergence, " + std::to_string(info) +
                           " superdiagonals did not reach zero",
                       std::sqrt(residual));
}

// SVT through the eigenpairs of the smaller Gram matrix G. Only eigenvalues
// above mu^2 are computed. With m <= n and G = Y Y^T = U S^2 U^T,
// svt(Y) = U diag(1 - mu/s) U^T Y; the m > n case works on Y^T Y from the right.
SvtResult svt_gram(const DenseMatrix& y, double mu) {
  const int m = static_cast<int>(y.rows());
  const int n = static_cast<int>(y.cols());
  const bool wide = m <= n;
  const int p = wide ? m : n;
  std::vector<double> gram(static_cast<std::size_t>(p) * p);
  cblas_dsyrk(CblasRowMajor, CblasUpper, wide ? CblasNoTrans : CblasTrans, p, wide ? n : m, 1.0,
              y.values().data(), n, 0.0, gram.data(), p);

  std::vector<double> w(p);
  std::vector<double> z(static_cast<std::size_t>(p) * p);
  std::vector<int> support(2 * static_cast<std::size_t>(p));
  int found = 0;
  const int info = LAPACKE_dsyevr(LAPACK_ROW_MAJOR, 'V', 'V', 'U', p, gram.data(), p, mu * mu,
                                  std::numeric_limits<double>::max(), 0, 0, 0.0, &found, w.data(),
                                  z.data(), p, support.data());
  if (info < 0) throw ParameterError("svt: dsyevr rejected argument " + std::to_string(-info));
  if (info > 0) throw NumericalError("svt: symmetric eigensolver failed to converge", 0.0);

  SvtResult out{DenseMatrix(y.rows(), y.cols()), {}};
  // Eigenvalues come back ascending; keep the descending singular order.
  std::vector<double> basis(static_cast<std::size_t>(p) * found);
  std::vector<double> weighted(basis.size());
  for (int src = found - 1; src >= 0; --src) {
    const double s = std::sqrt(w[src]);
    if (!(s > mu)) continue;
    const std::size_t col = out.shrunk_values.size();
    out.shrunk_values.push_back(s - mu);
    const double factor = 1.0 - mu / s;
    for (int i = 0; i < p; ++i) {
      const double v = z[static_cast<std::size_t>(i) * p + src];
      basis[static_cast<std::size_t>(i) * found + col] = v;
      weighted[static_cast<std::size_t>(i) * found + col] = v * factor;
    }
  }
  const int keep = static_cast<int>(out.shrunk_values.size());
  if (keep == 0) return out;

  double* x = out.value.values().data();
  if (wide) {
    // T = U^T Y (keep x n), X = (U diag) T
    std::vector<double> t(static_cast<std::size_t>(keep) * n);
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, keep, n, m, 1.0, basis.data(), found,
                y.values().data(), n, 0.0, t.data(), n);
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, keep, 1.0, weighted.data(), found,
                t.data(), n, 0.0, x, n);
  } else {
    // T = Y V (m x keep), X = T (V diag)^T
    std::vector<double> t(static_cast<std::size_t>(m) * keep);
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, keep, n, 1.0, y.values().data(), n,
                basis.data(), found, 0.0, t.data(), keep);
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, n, keep, 1.0, t.data(), keep,
                weighted.data(), found, 0.0, x, n);
  }
  return out;
}


}  // namespace

double frobenius_norm(const DenseMatrix& a) { return std::sqrt(kernels::sum_squares(a.values())); }

double inner_product(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw DimensionError("inner_product: shape mismatch");
  return kernels::dot(a.values(), b.values());
}

double l1_norm(const DenseMatrix& a) { return kernels::abs_sum(a.values()); }

double inf_norm(const DenseMatrix& a) { return kernels::abs_max(a.values()); }

std::vector<double> singular_values(const DenseMatrix& a) {
  if (a.empty()) return {};
  return raw_svd(a, false).s;
}

double operator_norm(const DenseMatrix& a) {
  const auto s = singular_values(a);
  return s.empty() ? 0.0 : s.front();
}

double nuclear_norm(const DenseMatrix& a) {
  double sum = 0.0;
  for (double v : singular_values(a)) sum += v;
  return sum;
}

SvdFactors svd(const DenseMatrix& a) {
  RawSvd raw = raw_svd(a, true);
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const std::size_t k = static_cast<std::size_t>(raw.k);
  SvdFactors out{DenseMatrix(m, k, std::move(raw.u)), std::move(raw.s), DenseMatrix(n, k)};
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < n; ++j) out.right(j, i) = raw.vt[i * n + j];
  return out;
}

DenseMatrix project_omega(const DenseMatrix& a, const ObservationMask& mask) {
  require_mask_shape(a, mask, "project_omega");
  DenseMatrix out(a.rows(), a.cols());
  kernels::mask_project<Exec>(a.values(), mask.bitmap(), out.values());
  return out;
}

DenseMatrix soft_threshold(const DenseMatrix& t, double tau) {
  if (!(tau >= 0.0)) throw ParameterError("soft_threshold: tau must be >= 0");
  DenseMatrix out(t.rows(), t.cols());
  kernels::soft_threshold<Exec>(t.values(), tau, out.values());
  return out;
}

SvtResult svt_with_spectrum(const DenseMatrix& y, double mu) {
  if (!(mu >= 0.0)) throw ParameterError("svt: mu must be >= 0");
  if (y.empty()) throw DimensionError("svt: empty matrix");
  if (mu > 0.0 && std::min(y.rows(), y.cols()) >= kSvtGramMinDim) return svt_gram(y, mu);
  const std::size_t m = y.rows();
  const std::size_t n = y.cols();
  RawSvd raw = raw_svd(y, true);
  const std::size_t kmax = static_cast<std::size_t>(raw.k);

  SvtResult out{DenseMatrix(m, n), {}};
  std::size_t keep = 0;
  while (keep < kmax && raw.s[keep] > mu) ++keep;
  if (keep == 0) return out;

  out.shrunk_values.resize(keep);
  for (std::size_t i = 0; i < keep; ++i) out.shrunk_values[i] = raw.s[i] - mu;

  // X = (U_keep * diag(s - mu)) * Vt_keep
  std::vector<double> scaled(m * keep);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < keep; ++j) scaled[i * keep + j] = raw.u[i * kmax + j] * out.shrunk_values[j];
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
              static_cast<int>(keep), 1.0, scaled.data(), static_cast<int>(keep), raw.vt.data(),
              static_cast<int>(n), 0.0, out.value.values().data(), static_cast<int>(n));
  return out;
}

DenseMatrix svt(const DenseMatrix& y, double mu) { return svt_with_spectrum(y, mu).value; }

DenseMatrix ball_project_z(const DenseMatrix& n, const ObservationMask& mask, double delta) {
  if (!(delta > 0.0)) throw ParameterError("ball_project_z: delta must be > 0");
  require_mask_shape(n, mask, "ball_project_z");
  const double norm = std::sqrt(kernels::masked_sum_squares(n.values(), mask.bitmap()));
  if (norm <= delta) return n;
  DenseMatrix out(n.rows(), n.cols());
  kernels::mask_scale<Exec>(n.values(), mask.bitmap(), delta / norm, out.values());
  return out;
}

}  // namespace uma
