// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma
// and must only be entered after a runtime CPU check (see dispatch.cpp).

#include <immintrin.h>

#include <cmath>
#include <vector>

#include "galmad/kernels.hpp"

namespace galmad::kernels::detail {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// C[i0..i0+4, j0..j0+8] += sum_p a(i, p) * B[p, j], where a(i, p) = a[i*ars + p*acs].
inline void micro_4x8(std::size_t k, std::size_t n, const double* a, std::size_t ars, std::size_t acs,
                      const double* b, double* c) {
    __m256d c00 = _mm256_loadu_pd(c + 0 * n), c01 = _mm256_loadu_pd(c + 0 * n + 4);
    __m256d c10 = _mm256_loadu_pd(c + 1 * n), c11 = _mm256_loadu_pd(c + 1 * n + 4);
    __m256d c20 = _mm256_loadu_pd(c + 2 * n), c21 = _mm256_loadu_pd(c + 2 * n + 4);
    __m256d c30 = _mm256_loadu_pd(c + 3 * n), c31 = _mm256_loadu_pd(c + 3 * n + 4);
    for (std::size_t p = 0; p < k; ++p) {
        const double* bp = b + p * n;
        const __m256d b0 = _mm256_loadu_pd(bp);
        const __m256d b1 = _mm256_loadu_pd(bp + 4);
        const double* ap = a + p * acs;
        __m256d a0 = _mm256_broadcast_sd(ap + 0 * ars);
        c00 = _mm256_fmadd_pd(a0, b0, c00);
        c01 = _mm256_fmadd_pd(a0, b1, c01);
        __m256d a1 = _mm256_broadcast_sd(ap + 1 * ars);
        c10 = _mm256_fmadd_pd(a1, b0, c10);
        c11 = _mm256_fmadd_pd(a1, b1, c11);
        __m256d a2 = _mm256_broadcast_sd(ap + 2 * ars);
        c20 = _mm256_fmadd_pd(a2, b0, c20);
        c21 = _mm256_fmadd_pd(a2, b1, c21);
        __m256d a3 = _mm256_broadcast_sd(ap + 3 * ars);
        c30 = _mm256_fmadd_pd(a3, b0, c30);
        c31 = _mm256_fmadd_pd(a3, b1, c31);
    }
    _mm256_storeu_pd(c + 0 * n, c00), _mm256_storeu_pd(c + 0 * n + 4, c01);
    _mm256_storeu_pd(c + 1 * n, c10), _mm256_storeu_pd(c + 1 * n + 4, c11);
    _mm256_storeu_pd(c + 2 * n, c20), _mm256_storeu_pd(c + 2 * n + 4, c21);
    _mm256_storeu_pd(c + 3 * n, c30), _mm256_storeu_pd(c + 3 * n + 4, c31);
}

// One row of C, columns [j0, j0+4).
inline void micro_1x4(std::size_t k, std::size_t n, const double* a, std::size_t acs, const double* b, double* c) {
    __m256d acc = _mm256_loadu_pd(c);
    for (std::size_t p = 0; p < k; ++p) {
        acc = _mm256_fmadd_pd(_mm256_broadcast_sd(a + p * acs), _mm256_loadu_pd(b + p * n), acc);
    }
    _mm256_storeu_pd(c, acc);
}

void gemm_strided(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t ars, std::size_t acs,
                  const double* b, double* c) {
    const std::size_t n8 = n - n % 8;
    const std::size_t n4 = n - n % 4;
    const std::size_t m4 = m - m % 4;
    for (std::size_t i = 0; i < m4; i += 4) {
        for (std::size_t j = 0; j < n8; j += 8) micro_4x8(k, n, a + i * ars, ars, acs, b + j, c + i * n + j);
        for (std::size_t r = 0; r < 4; ++r) {
            const double* ai = a + (i + r) * ars;
            double* ci = c + (i + r) * n;
            for (std::size_t j = n8; j < n4; j += 4) micro_1x4(k, n, ai, acs, b + j, ci + j);
            for (std::size_t j = n4; j < n; ++j) {
                double s = ci[j];
                for (std::size_t p = 0; p < k; ++p) s = std::fma(ai[p * acs], b[p * n + j], s);
                ci[j] = s;
            }
        }
    }
    for (std::size_t i = m4; i < m; ++i) {
        const double* ai = a + i * ars;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n4; j += 4) micro_1x4(k, n, ai, acs, b + j, ci + j);
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
    // Transpose B (n x k) into a k x n scratch buffer and reuse the nn path.
    thread_local std::vector<double> bt;
    bt.resize(n * k);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
    gemm_strided(m, n, k, a, k, 1, bt.data(), c);
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void mul(std::size_t n, const double* a, const double* b, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(std::size_t n, const double* a, const double* b, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i,
                         _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), _mm256_loadu_pd(out + i)));
    }
    for (; i < n; ++i) out[i] = std::fma(a[i], b[i], out[i]);
}

double dot(std::size_t n, const double* a, const double* b) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s = std::fma(a[i], b[i], s);
    return s;
}

double sum_sq_diff(std::size_t n, const double* a, const double* b) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s = std::fma(d, d, s);
    }
    return s;
}

// exp(x) for x clamped to [-708, 708]: Cody-Waite range reduction by ln 2,
// then the rational approximation 1 + 2r P(r^2) / (Q(r^2) - r P(r^2)).
inline __m256d exp_pd(__m256d x) {
    const __m256d hi = _mm256_set1_pd(708.0);
    const __m256d lo = _mm256_set1_pd(-708.0);
    x = _mm256_max_pd(_mm256_min_pd(x, hi), lo);

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125E-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212E-6);

    __m256d fx = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(fx, c1, x);
    r = _mm256_fnmadd_pd(fx, c2, r);
    const __m256d rr = _mm256_mul_pd(r, r);

    __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300E-2));
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910E-1));
    p = _mm256_mul_pd(p, r);

    __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192E-3));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766E-1));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009E0));

    __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

    // scale by 2^fx through the exponent bits
    const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 2^52 + 2^51
    const __m256i n = _mm256_castpd_si256(_mm256_add_pd(fx, magic));
    const __m256i shifted = _mm256_slli_epi64(_mm256_sub_epi64(n, _mm256_castpd_si256(magic)), 52);
    return _mm256_castsi256_pd(_mm256_add_epi64(_mm256_castpd_si256(e), shifted));
}

void sigmoid(std::size_t n, const double* x, double* out) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        // e = exp(-|x|); sigmoid = 1/(1+e) for x >= 0, e/(1+e) otherwise
        const __m256d neg_abs = _mm256_min_pd(v, _mm256_sub_pd(zero, v));
        const __m256d e = exp_pd(neg_abs);
        const __m256d inv = _mm256_div_pd(one, _mm256_add_pd(one, e));
        const __m256d pos_mask = _mm256_cmp_pd(v, zero, _CMP_GE_OQ);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(_mm256_mul_pd(e, inv), inv, pos_mask));
    }
    for (; i < n; ++i) {
        if (x[i] >= 0.0) {
            out[i] = 1.0 / (1.0 + std::exp(-x[i]));
        } else {
            const double e = std::exp(x[i]);
            out[i] = e / (1.0 + e);
        }
    }
}

void tanh_kernel(std::size_t n, const double* x, double* out) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d sign_bit = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        // tanh(|x|) = (1 - e) / (1 + e) with e = exp(-2|x|); sign restored after
        const __m256d abs_v = _mm256_andnot_pd(sign_bit, v);
        const __m256d e = exp_pd(_mm256_mul_pd(_mm256_sub_pd(zero, two), abs_v));
        const __m256d t = _mm256_div_pd(_mm256_sub_pd(one, e), _mm256_add_pd(one, e));
        _mm256_storeu_pd(out + i, _mm256_or_pd(t, _mm256_and_pd(sign_bit, v)));
    }
    for (; i < n; ++i) out[i] = std::tanh(x[i]);
}

void adam(std::size_t n, double* param, const double* grad, double* m, double* v, const AdamCoeffs& k) {
    const __m256d b1 = _mm256_set1_pd(k.beta1), nb1 = _mm256_set1_pd(1.0 - k.beta1);
    const __m256d b2 = _mm256_set1_pd(k.beta2), nb2 = _mm256_set1_pd(1.0 - k.beta2);
    const __m256d ib1 = _mm256_set1_pd(1.0 / k.bias1), ib2 = _mm256_set1_pd(1.0 / k.bias2);
    const __m256d lr = _mm256_set1_pd(k.lr), eps = _mm256_set1_pd(k.eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d g = _mm256_loadu_pd(grad + i);
        const __m256d mm = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(nb1, g));
        const __m256d vv =
            _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)), _mm256_mul_pd(_mm256_mul_pd(nb2, g), g));
        _mm256_storeu_pd(m + i, mm);
        _mm256_storeu_pd(v + i, vv);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, ib2)), eps);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, _mm256_mul_pd(mm, ib1)), denom);
        _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
    }
    for (; i < n; ++i) {
        m[i] = k.beta1 * m[i] + (1.0 - k.beta1) * grad[i];
        v[i] = k.beta2 * v[i] + (1.0 - k.beta2) * grad[i] * grad[i];
        param[i] -= k.lr * (m[i] / k.bias1) / (std::sqrt(v[i] / k.bias2) + k.eps);
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable t{gemm_nn, gemm_tn, gemm_nt, axpy,    mul,         mul_acc,
                               dot,     sum_sq_diff, sigmoid, tanh_kernel, adam};
    return t;
}

}  // namespace galmad::kernels::detail
