// Dense row-major double tensor plus the flat GEMM kernels the engine and the
// model run on. Kernels use explicit lane-structured accumulation so the
// compiler can vectorize without -ffast-math; results are bit-reproducible
// for a given binary.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace aft {

struct Tensor {
    std::vector<int64_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel_of(shape)), 0.0);
    }
    Tensor(std::vector<int64_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<int64_t>(data.size()) != numel_of(shape))
            throw std::invalid_argument("tensor data length does not match shape");
    }

    static int64_t numel_of(const std::vector<int64_t>& s) {
        int64_t n = 1;
        for (int64_t d : s) {
            if (d <= 0) throw std::invalid_argument("tensor dims must be positive");
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int64_t dim(int i) const { return shape[static_cast<size_t>(i)]; }

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    static std::string shape_str(const std::vector<int64_t>& s);
    std::string shape_str() const { return shape_str(shape); }
};

namespace kern {

// C[m x n] (+)= A[m x k] * B[k x n], all row-major with leading dimensions.
void gemm_nn(int64_t m, int64_t k, int64_t n, const double* A, int64_t lda,
             const double* B, int64_t ldb, double* C, int64_t ldc, bool accumulate);

// C[m x n] (+)= A[m x k] * B[n x k]^T  (dot products along contiguous k).
void gemm_nt(int64_t m, int64_t k, int64_t n, const double* A, int64_t lda,
             const double* B, int64_t ldb, double* C, int64_t ldc, bool accumulate);

// C[m x n] (+)= A[k x m]^T * B[k x n].
void gemm_tn(int64_t m, int64_t k, int64_t n, const double* A, int64_t lda,
             const double* B, int64_t ldb, double* C, int64_t ldc, bool accumulate);

double dot(const double* a, const double* b, int64_t n);

// y += alpha * x
void axpy(int64_t n, double alpha, const double* x, double* y);

// y[i] = exp(x[i]). Polynomial exp, ~1 ulp over the full double range,
// written so the loop vectorizes without -ffast-math.
void exp_vec(const double* x, double* y, int64_t n);

}  // namespace kern

}  // namespace aft
