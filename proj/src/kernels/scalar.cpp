#include <cmath>

#include "galmad/kernels.hpp"

namespace galmad::kernels::detail {
namespace {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double api = a[p * m + i];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
        }
    }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
            c[i * n + j] += s;
        }
    }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void mul(std::size_t n, const double* a, const double* b, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(std::size_t n, const double* a, const double* b, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

double dot(std::size_t n, const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_sq_diff(std::size_t n, const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void sigmoid(std::size_t n, const double* x, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        // split by sign so exp never overflows
        if (x[i] >= 0.0) {
            out[i] = 1.0 / (1.0 + std::exp(-x[i]));
        } else {
            const double e = std::exp(x[i]);
            out[i] = e / (1.0 + e);
        }
    }
}

void tanh_kernel(std::size_t n, const double* x, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}

void adam(std::size_t n, double* param, const double* grad, double* m, double* v, const AdamCoeffs& k) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = k.beta1 * m[i] + (1.0 - k.beta1) * grad[i];
        v[i] = k.beta2 * v[i] + (1.0 - k.beta2) * grad[i] * grad[i];
        const double mhat = m[i] / k.bias1;
        const double vhat = v[i] / k.bias2;
        param[i] -= k.lr * mhat / (std::sqrt(vhat) + k.eps);
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable t{gemm_nn, gemm_tn, gemm_nt, axpy,    mul,          mul_acc,
                               dot,     sum_sq_diff, sigmoid, tanh_kernel, adam};
    return t;
}

}  // namespace galmad::kernels::detail
