#include "vdmforge/gemm.hpp"

#include <algorithm>
#include <cstring>
#include <type_traits>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace vdmforge {

namespace {

constexpr int kReduceBlock = 2048;  // row block for ordered reductions

// Generic kernel: one task per 4-row strip, k unrolled by 4, inner j loop
// left to the autovectorizer.
template <typename Real>
void gemm_rows_generic(const Real* A, const Real* B, Real* C, int row0, int row1, int k,
                       int n, bool accumulate) {
  for (int i = row0; i < row1; ++i) {
    Real* c = C + static_cast<size_t>(i) * n;
    if (!accumulate) std::memset(c, 0, sizeof(Real) * n);
    int kk = 0;
    const Real* a = A + static_cast<size_t>(i) * k;
    for (; kk + 4 <= k; kk += 4) {
      const Real a0 = a[kk], a1 = a[kk + 1], a2 = a[kk + 2], a3 = a[kk + 3];
      const Real* b0 = B + static_cast<size_t>(kk) * n;
      const Real* b1 = b0 + n;
      const Real* b2 = b1 + n;
      const Real* b3 = b2 + n;
      for (int j = 0; j < n; ++j) c[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
    }
    for (; kk < k; ++kk) {
      const Real a0 = a[kk];
      const Real* b0 = B + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) c[j] += a0 * b0[j];
    }
  }
}

#if defined(__AVX512F__)
// MR rows x JW*16 columns of accumulators, fully unrolled at compile time so
// the accumulators live in registers. Callers iterate the 64-column block jb
// in the outer loop so the B slab stays cache-resident across row strips.
template <int MR, int JW>
void gemm_tile_avx512(const float* A, const float* B, float* C, int ib, int k, int n,
                      int jb, bool accumulate) {
  __m512 acc[MR][JW];
  for (int r = 0; r < MR; ++r)
    for (int v = 0; v < JW; ++v)
      acc[r][v] = accumulate
                      ? _mm512_loadu_ps(C + static_cast<size_t>(ib + r) * n + jb + 16 * v)
                      : _mm512_setzero_ps();
  for (int kk = 0; kk < k; ++kk) {
    const float* brow = B + static_cast<size_t>(kk) * n + jb;
    __m512 b[JW];
    for (int v = 0; v < JW; ++v) b[v] = _mm512_loadu_ps(brow + 16 * v);
    for (int r = 0; r < MR; ++r) {
      __m512 a = _mm512_set1_ps(A[static_cast<size_t>(ib + r) * k + kk]);
      for (int v = 0; v < JW; ++v) acc[r][v] = _mm512_fmadd_ps(a, b[v], acc[r][v]);
    }
  }
  for (int r = 0; r < MR; ++r)
    for (int v = 0; v < JW; ++v)
      _mm512_storeu_ps(C + static_cast<size_t>(ib + r) * n + jb + 16 * v, acc[r][v]);
}

template <int JW>
void gemm_rows_avx512_jw(const float* A, const float* B, float* C, int row0, int row1,
                         int k, int n, int jb, bool accumulate) {
  int ib = row0;
  for (; ib + 4 <= row1; ib += 4) gemm_tile_avx512<4, JW>(A, B, C, ib, k, n, jb, accumulate);
  for (; ib < row1; ++ib) gemm_tile_avx512<1, JW>(A, B, C, ib, k, n, jb, accumulate);
}

void gemm_rows_avx512(const float* A, const float* B, float* C, int row0, int row1, int k,
                      int n, int jb, bool accumulate) {
  switch (std::min(64, n - jb) / 16) {
    case 4: gemm_rows_avx512_jw<4>(A, B, C, row0, row1, k, n, jb, accumulate); break;
    case 3: gemm_rows_avx512_jw<3>(A, B, C, row0, row1, k, n, jb, accumulate); break;
    case 2: gemm_rows_avx512_jw<2>(A, B, C, row0, row1, k, n, jb, accumulate); break;
    default: gemm_rows_avx512_jw<1>(A, B, C, row0, row1, k, n, jb, accumulate); break;
  }
}
#endif

template <typename Real>
void gemm_rows(const Real* A, const Real* B, Real* C, int row0, int row1, int k, int n,
               bool accumulate) {
#if defined(__AVX512F__)
  if constexpr (std::is_same_v<Real, float>) {
    if (n % 16 == 0) {
      for (int jb = 0; jb < n; jb += 64)
        gemm_rows_avx512(A, B, C, row0, row1, k, n, jb, accumulate);
      return;
    }
  }
#endif
  gemm_rows_generic(A, B, C, row0, row1, k, n, accumulate);
}

}  // namespace

template <typename Real>
void gemm(const Real* A, const Real* B, Real* C, int m, int k, int n, bool accumulate) {
  const int strips = (m + 63) / 64;
#if defined(__AVX512F__)
  if constexpr (std::is_same_v<Real, float>) {
    if (n % 16 == 0) {
      // Column blocks outermost: the k x 64 slab of B stays cache-resident
      // while every row strip sweeps over it.
      for (int jb = 0; jb < n; jb += 64) {
#pragma omp parallel for schedule(static)
        for (int s = 0; s < strips; ++s) {
          int row0 = s * 64;
          int row1 = std::min(m, row0 + 64);
          gemm_rows_avx512(A, B, C, row0, row1, k, n, jb, accumulate);
        }
      }
      return;
    }
  }
#endif
#pragma omp parallel for schedule(static)
  for (int s = 0; s < strips; ++s) {
    int row0 = s * 64;
    int row1 = std::min(m, row0 + 64);
    gemm_rows_generic(A, B, C, row0, row1, k, n, accumulate);
  }
}

template <typename Real>
void transpose(const Real* A, Real* B, int m, int n) {
  constexpr int kTile = 32;
  for (int i0 = 0; i0 < m; i0 += kTile)
    for (int j0 = 0; j0 < n; j0 += kTile) {
      int i1 = std::min(m, i0 + kTile), j1 = std::min(n, j0 + kTile);
      for (int i = i0; i < i1; ++i)
        for (int j = j0; j < j1; ++j)
          B[static_cast<size_t>(j) * m + i] = A[static_cast<size_t>(i) * n + j];
    }
}

template <typename Real>
void gemm_at_b(const Real* A, const Real* B, Real* C, int m, int k, int n,
               bool accumulate) {
  const int nblocks = (m + kReduceBlock - 1) / kReduceBlock;
  // Per-block partials, combined in block order so the reduction sequence
  // does not depend on thread count.
  std::vector<Real> partials(static_cast<size_t>(nblocks) * k * n);
#pragma omp parallel
  {
    std::vector<Real> local_scratch(static_cast<size_t>(kReduceBlock) * k);
#pragma omp for schedule(static)
    for (int b = 0; b < nblocks; ++b) {
      int row0 = b * kReduceBlock;
      int rows = std::min(kReduceBlock, m - row0);
      Real* at = local_scratch.data();
      transpose(A + static_cast<size_t>(row0) * k, at, rows, k);
      Real* part = partials.data() + static_cast<size_t>(b) * k * n;
      gemm_rows(at, B + static_cast<size_t>(row0) * n, part, 0, k, rows, n, false);
    }
  }
  if (!accumulate) std::memset(C, 0, sizeof(Real) * static_cast<size_t>(k) * n);
  for (int b = 0; b < nblocks; ++b) {
    const Real* part = partials.data() + static_cast<size_t>(b) * k * n;
    for (size_t i = 0; i < static_cast<size_t>(k) * n; ++i) C[i] += part[i];
  }
}

template <typename Real>
void column_sums(const Real* A, Real* out, int m, int n, bool accumulate) {
  const int nblocks = (m + kReduceBlock - 1) / kReduceBlock;
  std::vector<Real> partials(static_cast<size_t>(nblocks) * n, Real(0));
#pragma omp parallel for schedule(static)
  for (int b = 0; b < nblocks; ++b) {
    int row0 = b * kReduceBlock;
    int rows = std::min(kReduceBlock, m - row0);
    Real* part = partials.data() + static_cast<size_t>(b) * n;
    for (int i = 0; i < rows; ++i) {
      const Real* a = A + static_cast<size_t>(row0 + i) * n;
      for (int j = 0; j < n; ++j) part[j] += a[j];
    }
  }
  if (!accumulate) std::memset(out, 0, sizeof(Real) * n);
  for (int b = 0; b < nblocks; ++b) {
    const Real* part = partials.data() + static_cast<size_t>(b) * n;
    for (int j = 0; j < n; ++j) out[j] += part[j];
  }
}

template void gemm<float>(const float*, const float*, float*, int, int, int, bool);
template void gemm<double>(const double*, const double*, double*, int, int, int, bool);
template void gemm_at_b<float>(const float*, const float*, float*, int, int, int, bool);
template void gemm_at_b<double>(const double*, const double*, double*, int, int, int, bool);
template void column_sums<float>(const float*, float*, int, int, bool);
template void column_sums<double>(const double*, double*, int, int, bool);
template void transpose<float>(const float*, float*, int, int);
template void transpose<double>(const double*, double*, int, int);

}  // namespace vdmforge
