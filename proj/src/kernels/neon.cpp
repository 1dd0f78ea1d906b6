// NEON (aarch64, float64x2) variants. Transcendentals fall back to the
// scalar reference.

#include <arm_neon.h>

#include <cmath>
#include <vector>

#include "galmad/kernels.hpp"

namespace galmad::kernels::detail {
namespace {

void gemm_strided(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t ars, std::size_t acs,
                  const double* b, double* c) {
    const std::size_t n4 = n - n % 4;
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * ars;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n4; j += 4) {
            float64x2_t acc0 = vld1q_f64(ci + j);
            float64x2_t acc1 = vld1q_f64(ci + j + 2);
            for (std::size_t p = 0; p < k; ++p) {
                const float64x2_t av = vdupq_n_f64(ai[p * acs]);
                acc0 = vfmaq_f64(acc0, av, vld1q_f64(b + p * n + j));
                acc1 = vfmaq_f64(acc1, av, vld1q_f64(b + p * n + j + 2));
            }
            vst1q_f64(ci + j, acc0);
            vst1q_f64(ci + j + 2, acc1);
        }
        for (std::size_t j = n4; j < n; ++j) {
            double s = ci[j];
            for (std::size_t p = 0; p < k; ++p) s = std::fma(ai[p * acs], b[p * n + j], s);
            ci[j] = s;
        }
    }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    gemm_strided(m, n, k, a, k, 1, b, c);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    gemm_strided(m, n, k, a, 1, m, b, c);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    thread_local std::vector<double> bt;
    bt.resize(n * k);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
    gemm_strided(m, n, k, a, k, 1, bt.data(), c);
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void mul(std::size_t n, const double* a, const double* b, double* out) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(std::size_t n, const double* a, const double* b, double* out) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vfmaq_f64(vld1q_f64(out + i), vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = std::fma(a[i], b[i], out[i]);
}

double dot(std::size_t n, const double* a, const double* b) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s = std::fma(a[i], b[i], s);
    return s;
}

double sum_sq_diff(std::size_t n, const double* a, const double* b) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s = std::fma(d, d, s);
    }
    return s;
}

void adam(std::size_t n, double* param, const double* grad, double* m, double* v, const AdamCoeffs& k) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = k.beta1 * m[i] + (1.0 - k.beta1) * grad[i];
        v[i] = k.beta2 * v[i] + (1.0 - k.beta2) * grad[i] * grad[i];
        param[i] -= k.lr * (m[i] / k.bias1) / (std::sqrt(v[i] / k.bias2) + k.eps);
    }
}

}  // namespace

const KernelTable& neon_table() {
    const KernelTable& s = scalar_table();
    static const KernelTable t{gemm_nn, gemm_tn, gemm_nt, axpy,       mul,    mul_acc,
                               dot,     sum_sq_diff, s.sigmoid, s.tanh, adam};
    return t;
}

}  // namespace galmad::kernels::detail
