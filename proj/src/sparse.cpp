#include "vdmforge/sparse.hpp"

#include <cmath>

#include "vdmforge/errors.hpp"

namespace vdmforge {

void csr_matvec(const CsrMatrix& A, const double* x, double* y) {
#pragma omp parallel for schedule(static, 256)
  for (int i = 0; i < A.n; ++i) {
    double acc = 0.0;
    for (int k = A.row_start[i]; k < A.row_start[i + 1]; ++k) acc += A.val[k] * x[A.col[k]];
    y[i] = acc;
  }
}

namespace {

double dot_serial(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

CgResult conjugate_gradient(const CsrMatrix& A, const std::vector<double>& b,
                            std::vector<double>& x, double tolerance, int max_iterations) {
  const int n = A.n;
  x.assign(n, 0.0);
  std::vector<double> diag(n, 1.0);
  for (int i = 0; i < n; ++i)
    for (int k = A.row_start[i]; k < A.row_start[i + 1]; ++k)
      if (A.col[k] == i && A.val[k] != 0.0) diag[i] = A.val[k];

  std::vector<double> r = b, z(n), p(n), Ap(n);
  double bnorm = std::sqrt(dot_serial(b, b));
  CgResult res;
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  for (int i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = dot_serial(r, z);
  for (int it = 0; it < max_iterations; ++it) {
    csr_matvec(A, p.data(), Ap.data());
    double pAp = dot_serial(p, Ap);
    if (pAp <= 0.0) throw NumericError("CG: matrix is not positive definite");
    double alpha = rz / pAp;
    for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (int i = 0; i < n; ++i) r[i] -= alpha * Ap[i];
    double rnorm = std::sqrt(dot_serial(r, r));
    res.iterations = it + 1;
    res.relative_residual = rnorm / bnorm;
    if (res.relative_residual < tolerance) {
      res.converged = true;
      return res;
    }
    for (int i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    double rz_new = dot_serial(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return res;
}

}  // namespace vdmforge
