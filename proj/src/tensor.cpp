#include "aft/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace aft {

std::string Tensor::shape_str(const std::vector<int64_t>& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

namespace kern {

namespace {

constexpr int64_t kMr = 4;   // rows of A per micro tile
constexpr int64_t kNr = 32;  // columns of C per micro tile (4 x 8-wide lanes)

// Full C tile [kMr x kNr] (+)= A rows * B panel. Fixed bounds so the
// accumulators live in registers and the j loop maps to vector FMAs.
template <bool kAccumulate>
inline void micro_nn_full(int64_t k, const double* A, int64_t lda,
                          const double* B, int64_t ldb, double* C, int64_t ldc) {
    double acc[kMr][kNr];
    for (int64_t i = 0; i < kMr; ++i)
        for (int64_t j = 0; j < kNr; ++j) acc[i][j] = kAccumulate ? C[i * ldc + j] : 0.0;
    for (int64_t p = 0; p < k; ++p) {
        const double* bp = B + p * ldb;
        for (int64_t i = 0; i < kMr; ++i) {
            const double a = A[i * lda + p];
            for (int64_t j = 0; j < kNr; ++j) acc[i][j] += a * bp[j];
        }
    }
    for (int64_t i = 0; i < kMr; ++i)
        for (int64_t j = 0; j < kNr; ++j) C[i * ldc + j] = acc[i][j];
}

// Ragged edges: mr rows, nr <= kNr columns.
template <bool kAccumulate>
inline void micro_nn_edge(int64_t mr, int64_t nr, int64_t k, const double* A, int64_t lda,
                          const double* B, int64_t ldb, double* C, int64_t ldc) {
    for (int64_t i = 0; i < mr; ++i) {
        double acc[kNr];
        for (int64_t j = 0; j < nr; ++j) acc[j] = kAccumulate ? C[i * ldc + j] : 0.0;
        const double* a = A + i * lda;
        for (int64_t p = 0; p < k; ++p) {
            const double av = a[p];
            const double* bp = B + p * ldb;
            for (int64_t j = 0; j < nr; ++j) acc[j] += av * bp[j];
        }
        for (int64_t j = 0; j < nr; ++j) C[i * ldc + j] = acc[j];
    }
}

void gemm_nn_impl(int64_t m, int64_t k, int64_t n, const double* A, int64_t lda,
                  const double* B, int64_t ldb, double* C, int64_t ldc, bool accumulate) {
    const int64_t m_main = m - m % kMr;
    const int64_t n_main = n - n % kNr;
    for (int64_t jj = 0; jj < n_main; jj += kNr) {
        for (int64_t ii = 0; ii < m_main; ii += kMr) {
            if (accumulate)
                micro_nn_full<true>(k, A + ii * lda, lda, B + jj, ldb, C + ii * ldc + jj, ldc);
            else
                micro_nn_full<false>(k, A + ii * lda, lda, B + jj, ldb, C + ii * ldc + jj, ldc);
        }
        if (m_main < m) {
            if (accumulate)
                micro_nn_edge<true>(m - m_main, kNr, k, A + m_main * lda, lda, B + jj, ldb,
                                    C + m_main * ldc + jj, ldc);
            else
                micro_nn_edge<false>(m - m_main, kNr, k, A + m_main * lda, lda, B + jj, ldb,
                                     C + m_main * ldc + jj, ldc);
        }
    }
    if (n_main < n) {
        if (accumulate)
            micro_nn_edge<true>(m, n - n_main, k, A, lda, B + n_main, ldb, C + n_main, ldc);
        else
            micro_nn_edge<false>(m, n - n_main, k, A, lda, B + n_main, ldb, C + n_main, ldc);
    }
}

void gemm_nt_impl(int64_t m, int64_t k, int64_t n, const double* A, int64_t lda,
                  const double* B, int64_t ldb, double* C, int64_t ldc, bool accumulate) {
    for (int64_t i = 0; i < m; ++i) {
        const double* a = A + i * lda;
        double* c = C + i * ldc;
        for (int64_t j = 0; j < n; ++j) {
            const double d = dot(a, B + j * ldb, k);
            c[j] = accumulate ? c[j] + d : d;
        }
    }
}

thread_local std::vector<double> g_scratch;

// B [k x n] with leading dimension ldb -> contiguous B^T [n x k] in scratch.
const double* transpose_to_scratch(const double* B, int64_t k, int64_t n, int64_t ldb) {
    g_scratch.resize(static_cast<size_t>(k * n));
    double* t = g_scratch.data();
    for (int64_t p = 0; p < k; ++p)
        for (int64_t j = 0; j < n; ++j) t[j * k + p] = B[p * ldb + j];
    return t;
}

}  // namespace

double dot(const double* a, const double* b, int64_t n) {
    // Eight explicit lanes; lane sums combined in a fixed order.
    double lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    const int64_t n8 = n - n % 8;
    for (int64_t i = 0; i < n8; i += 8)
        for (int64_t l = 0; l < 8; ++l) lane[l] += a[i + l] * b[i + l];
    double tail = 0.0;
    for (int64_t i = n8; i < n; ++i) tail += a[i] * b[i];
    return ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
           ((lane[4] + lane[5]) + (lane[6] + lane[7])) + tail;
}

void gemm_nn(int64_t m, int64_t k, int64_t n, const double* A, int64_t lda,
             const double* B, int64_t ldb, double* C, int64_t ldc, bool accumulate) {
    if (n == 1) {
        // Matrix-vector: per-row dot against the contiguous column of B.
        if (ldb == 1) {
            for (int64_t i = 0; i < m; ++i) {
                const double d = dot(A + i * lda, B, k);
                C[i * ldc] = accumulate ? C[i * ldc] + d : d;
            }
            return;
        }
    } else if (n <= 16 && k >= 64) {
        // Narrow outputs starve the panel kernel; dot against B^T instead.
        const double* bt = transpose_to_scratch(B, k, n, ldb);
        gemm_nt_impl(m, k, n, A, lda, bt, k, C, ldc, accumulate);
        return;
    }
    gemm_nn_impl(m, k, n, A, lda, B, ldb, C, ldc, accumulate);
}

void gemm_nt(int64_t m, int64_t k, int64_t n, const double* A, int64_t lda,
             const double* B, int64_t ldb, double* C, int64_t ldc, bool accumulate) {
    if (k < 16 && n >= 64) {
        // Short dots waste the lane kernel; run the panel kernel on B^T.
        const double* bt = transpose_to_scratch(B, n, k, ldb);  // [k x n]
        gemm_nn_impl(m, k, n, A, lda, bt, n, C, ldc, accumulate);
        return;
    }
    gemm_nt_impl(m, k, n, A, lda, B, ldb, C, ldc, accumulate);
}

void gemm_tn(int64_t m, int64_t k, int64_t n, const double* A, int64_t lda,
             const double* B, int64_t ldb, double* C, int64_t ldc, bool accumulate) {
    if (n == 1 && ldb == 1) {
        for (int64_t i = 0; i < m; ++i) {
            double lane[4] = {0, 0, 0, 0};
            const int64_t k4 = k - k % 4;
            for (int64_t p = 0; p < k4; p += 4)
                for (int64_t l = 0; l < 4; ++l) lane[l] += A[(p + l) * lda + i] * B[p + l];
            double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
            for (int64_t p = k4; p < k; ++p) s += A[p * lda + i] * B[p];
            C[i * ldc] = accumulate ? C[i * ldc] + s : s;
        }
        return;
    }
    // Row of C stays hot while k rank-1 contributions stream through it.
    for (int64_t i = 0; i < m; ++i) {
        double* c = C + i * ldc;
        if (!accumulate) std::memset(c, 0, static_cast<size_t>(n) * sizeof(double));
        for (int64_t p = 0; p < k; ++p) {
            const double av = A[p * lda + i];
            if (av == 0.0) continue;
            const double* bp = B + p * ldb;
            for (int64_t j = 0; j < n; ++j) c[j] += av * bp[j];
        }
    }
}

void axpy(int64_t n, double alpha, const double* x, double* y) {
    for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void exp_vec(const double* x, double* y, int64_t n) {
    // exp(x) = 2^k * exp(r), r = x - k*ln2 in [-ln2/2, ln2/2], Taylor to r^13.
    // Arguments are clamped so 2^k stays representable; softmax feeds only
    // non-positive arguments, which underflow cleanly to 0.
    constexpr double kInvLn2 = 1.4426950408889634074;
    constexpr double kLn2Hi = 6.93147180369123816490e-01;
    constexpr double kLn2Lo = 1.90821492927058770002e-10;
    constexpr double kMax = 709.0, kMin = -745.0;
    for (int64_t i = 0; i < n; ++i) {
        double v = x[i];
        v = v > kMax ? kMax : (v < kMin ? kMin : v);
        const double t = v * kInvLn2;
        const double kf = std::floor(t + 0.5);
        const double r = (v - kf * kLn2Hi) - kf * kLn2Lo;
        // 1 + r + r^2/2! + ... + r^13/13!, Horner.
        double p = 1.0 / 6227020800.0;          // 1/13!
        p = p * r + 1.0 / 479001600.0;          // 1/12!
        p = p * r + 1.0 / 39916800.0;           // 1/11!
        p = p * r + 1.0 / 3628800.0;            // 1/10!
        p = p * r + 1.0 / 362880.0;             // 1/9!
        p = p * r + 1.0 / 40320.0;              // 1/8!
        p = p * r + 1.0 / 5040.0;               // 1/7!
        p = p * r + 1.0 / 720.0;                // 1/6!
        p = p * r + 1.0 / 120.0;                // 1/5!
        p = p * r + 1.0 / 24.0;                 // 1/4!
        p = p * r + 1.0 / 6.0;                  // 1/3!
        p = p * r + 0.5;
        p = p * r + 1.0;
        p = p * r + 1.0;
        // 2^k via exponent bits, split in two to cover subnormal outputs.
        const int64_t ki = static_cast<int64_t>(kf);
        const int64_t k1 = ki / 2, k2 = ki - k1;
        uint64_t b1 = static_cast<uint64_t>(k1 + 1023) << 52;
        uint64_t b2 = static_cast<uint64_t>(k2 + 1023) << 52;
        double s1, s2;
        std::memcpy(&s1, &b1, 8);
        std::memcpy(&s2, &b2, 8);
        y[i] = p * s1 * s2;
    }
}

}  // namespace kern

}  // namespace aft
