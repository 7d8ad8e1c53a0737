#include <doctest.h>

#include <cmath>
#include <vector>

#include "vdmforge/gemm.hpp"
#include "vdmforge/reference.hpp"
#include "vdmforge/rng.hpp"
#include "vdmforge/threads.hpp"

using namespace vdmforge;

namespace {

std::vector<float> random_matrix(uint64_t seed, int rows, int cols) {
  SplitMix64 rng(seed);
  std::vector<float> m(static_cast<size_t>(rows) * cols);
  for (auto& v : m) v = static_cast<float>(rng.next_uniform() - 0.5);
  return m;
}

}  // namespace

TEST_CASE("gemm: float kernel matches the serial reference within fp32 slack") {
  for (auto [m, k, n] : {std::tuple{65, 2, 48}, {130, 512, 512}, {33, 512, 3},
                         {7, 31, 17}}) {
    auto A = random_matrix(1, m, k);
    auto B = random_matrix(2, k, n);
    std::vector<float> C(static_cast<size_t>(m) * n), Cref(C.size());
    gemm(A.data(), B.data(), C.data(), m, k, n);
    reference::gemm_naive(A.data(), B.data(), Cref.data(), m, k, n);
    for (size_t i = 0; i < C.size(); ++i) {
      double rel = std::abs(C[i] - Cref[i]) / std::max(1.0, std::abs(double(Cref[i])));
      CHECK(rel < 2e-5 * std::sqrt(double(k)));
    }
  }
}

TEST_CASE("gemm: double kernel is near-exact against a widened reference") {
  SplitMix64 rng(3);
  const int m = 19, k = 65, n = 21;
  std::vector<double> A(m * k), B(k * n), C(m * n);
  for (auto& v : A) v = rng.next_uniform() - 0.5;
  for (auto& v : B) v = rng.next_uniform() - 0.5;
  gemm(A.data(), B.data(), C.data(), m, k, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      long double acc = 0.0L;
      for (int kk = 0; kk < k; ++kk) acc += (long double)A[i * k + kk] * B[kk * n + j];
      CHECK(std::abs(C[i * n + j] - double(acc)) < 1e-13);
    }
}

TEST_CASE("gemm: accumulate flag adds instead of overwriting") {
  const int m = 8, k = 16, n = 32;
  auto A = random_matrix(5, m, k);
  auto B = random_matrix(6, k, n);
  std::vector<float> C1(m * n), C2(m * n);
  gemm(A.data(), B.data(), C1.data(), m, k, n);
  gemm(A.data(), B.data(), C2.data(), m, k, n);
  gemm(A.data(), B.data(), C2.data(), m, k, n, true);
  // Accumulation reassociates the sum, so allow fp32 slack.
  for (size_t i = 0; i < C1.size(); ++i)
    CHECK(std::abs(C2[i] - 2.0f * C1[i]) < 1e-5f * std::max(1.0f, std::abs(C1[i])));
}

TEST_CASE("gemm_at_b: matches transpose-then-multiply") {
  const int m = 100, k = 24, n = 40;
  auto A = random_matrix(7, m, k);
  auto B = random_matrix(8, m, n);
  std::vector<float> C(static_cast<size_t>(k) * n);
  gemm_at_b(A.data(), B.data(), C.data(), m, k, n);
  std::vector<float> At(static_cast<size_t>(k) * m);
  transpose(A.data(), At.data(), m, k);
  std::vector<float> Cref(C.size());
  reference::gemm_naive(At.data(), B.data(), Cref.data(), k, m, n);
  for (size_t i = 0; i < C.size(); ++i)
    CHECK(std::abs(C[i] - Cref[i]) < 1e-4);
}

TEST_CASE("column_sums: matches a serial accumulation") {
  const int m = 4097, n = 12;
  auto A = random_matrix(9, m, n);
  std::vector<float> sums(n);
  column_sums(A.data(), sums.data(), m, n);
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += A[static_cast<size_t>(i) * n + j];
    CHECK(std::abs(sums[j] - acc) < 1e-3);
  }
}

TEST_CASE("gemm: results are bitwise identical across thread caps") {
  const int m = 515, k = 512, n = 512;
  auto A = random_matrix(11, m, k);
  auto B = random_matrix(12, k, n);
  auto G = random_matrix(15, m, n);  // gradient-shaped operand for A^T G
  std::vector<float> C1(static_cast<size_t>(m) * n), C4(C1.size());
  std::vector<float> D1(static_cast<size_t>(k) * n), D4(D1.size());

  set_thread_cap(1);
  gemm(A.data(), B.data(), C1.data(), m, k, n);
  gemm_at_b(A.data(), G.data(), D1.data(), m, k, n);
  set_thread_cap(4);
  gemm(A.data(), B.data(), C4.data(), m, k, n);
  gemm_at_b(A.data(), G.data(), D4.data(), m, k, n);
  set_thread_cap(0);

  CHECK(C1 == C4);
  CHECK(D1 == D4);
}

TEST_CASE("gemm: repeated calls are bitwise stable") {
  const int m = 77, k = 512, n = 512;
  auto A = random_matrix(13, m, k);
  auto B = random_matrix(14, k, n);
  std::vector<float> C1(static_cast<size_t>(m) * n), C2(C1.size());
  gemm(A.data(), B.data(), C1.data(), m, k, n);
  gemm(A.data(), B.data(), C2.data(), m, k, n);
  CHECK(C1 == C2);
}
