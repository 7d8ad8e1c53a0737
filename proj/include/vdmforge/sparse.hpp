#pragma once

#include <vector>

namespace vdmforge {

// Compressed-sparse-row symmetric positive definite matrix.
struct CsrMatrix {
  int n = 0;
  std::vector<int> row_start;  // n+1
  std::vector<int> col;
  std::vector<double> val;
};

// y = A x. Rows are independent, so the parallel version is bitwise equal to
// the serial one for any thread count.
void csr_matvec(const CsrMatrix& A, const double* x, double* y);

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

// Jacobi-preconditioned conjugate gradient. Dot products are accumulated
// serially in index order so the iteration sequence is deterministic.
CgResult conjugate_gradient(const CsrMatrix& A, const std::vector<double>& b,
                            std::vector<double>& x, double tolerance, int max_iterations);

}  // namespace vdmforge
