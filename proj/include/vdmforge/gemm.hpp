#pragma once

namespace vdmforge {

// Dense row-major kernels used by the deformation-field network.
//
// Determinism contract: every output element is accumulated over k in a fixed
// order by exactly one task, and reductions over rows use fixed 2048-row
// blocks combined in index order. Results are therefore bitwise identical for
// any thread count and any caller-side batch chunking aligned to 2048 rows.

// C[m x n] = A[m x k] * B[k x n], optionally accumulating into C.
template <typename Real>
void gemm(const Real* A, const Real* B, Real* C, int m, int k, int n,
          bool accumulate = false);

// C[k x n] = A^T * B with A[m x k], B[m x n], optionally accumulating.
template <typename Real>
void gemm_at_b(const Real* A, const Real* B, Real* C, int m, int k, int n,
               bool accumulate = false);

// out[n] = column sums of A[m x n], optionally accumulating.
template <typename Real>
void column_sums(const Real* A, Real* out, int m, int n, bool accumulate = false);

// B[n x m] = A[m x n] transposed.
template <typename Real>
void transpose(const Real* A, Real* B, int m, int n);

}  // namespace vdmforge
