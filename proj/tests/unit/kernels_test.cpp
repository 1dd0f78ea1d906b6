#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "galmad/error.hpp"
#include "galmad/kernels.hpp"

namespace k = galmad::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(a[i], b[i], tol * (1.0 + std::abs(a[i]))) << "index " << i;
    }
}

std::vector<k::Isa> simd_isas() {
    std::vector<k::Isa> out;
    for (k::Isa isa : {k::Isa::Avx2, k::Isa::Neon}) {
        if (k::supported(isa)) out.push_back(isa);
    }
    return out;
}

// Naive triple loop, independent of every kernel.
std::vector<double> naive_gemm(std::size_t m, std::size_t n, std::size_t kk, const std::vector<double>& a,
                               const std::vector<double>& b) {
    std::vector<double> c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < kk; ++p) c[i * n + j] += a[i * kk + p] * b[p * n + j];
    return c;
}

std::vector<double> transpose(const std::vector<double>& a, std::size_t rows, std::size_t cols) {
    std::vector<double> t(a.size());
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
    return t;
}

}  // namespace

TEST(Kernels, ScalarGemmVariantsMatchNaive) {
    std::mt19937_64 rng(1);
    const auto& s = k::table(k::Isa::Scalar);
    for (auto [m, n, kk] : std::vector<std::array<std::size_t, 3>>{{1, 1, 1}, {3, 5, 7}, {17, 9, 13}, {4, 33, 2}}) {
        auto a = random_vec(m * kk, rng), b = random_vec(kk * n, rng);
        const auto want = naive_gemm(m, n, kk, a, b);
        std::vector<double> c(m * n, 0.0);
        s.gemm_nn(m, n, kk, a.data(), b.data(), c.data());
        expect_close(c, want, 1e-12);
        std::vector<double> c2(m * n, 0.0);
        const auto at = transpose(a, m, kk);
        s.gemm_tn(m, n, kk, at.data(), b.data(), c2.data());
        expect_close(c2, want, 1e-12);
        std::vector<double> c3(m * n, 0.0);
        const auto bt = transpose(b, kk, n);
        s.gemm_nt(m, n, kk, a.data(), bt.data(), c3.data());
        expect_close(c3, want, 1e-12);
    }
}

TEST(Kernels, GemmAccumulatesIntoOutput) {
    const auto& s = k::table(k::Isa::Scalar);
    std::vector<double> a{1, 2}, b{3, 4}, c{10.0};
    s.gemm_nn(1, 1, 2, a.data(), b.data(), c.data());
    EXPECT_DOUBLE_EQ(c[0], 21.0);
}

TEST(Kernels, SimdMatchesScalarOnAllKernels) {
    const auto isas = simd_isas();
    if (isas.empty()) GTEST_SKIP() << "no SIMD variant on this CPU";
    const auto& s = k::table(k::Isa::Scalar);
    std::mt19937_64 rng(2);
    for (k::Isa isa : isas) {
        const auto& v = k::table(isa);
        // Odd sizes exercise the remainder loops.
        for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 31u, 257u}) {
            auto x = random_vec(n, rng, 3.0), y = random_vec(n, rng, 3.0);
            auto y1 = y, y2 = y;
            s.axpy(n, 0.7, x.data(), y1.data());
            v.axpy(n, 0.7, x.data(), y2.data());
            expect_close(y1, y2, 1e-13);

            std::vector<double> o1(n), o2(n);
            s.mul(n, x.data(), y.data(), o1.data());
            v.mul(n, x.data(), y.data(), o2.data());
            expect_close(o1, o2, 1e-15);
            o1 = y;
            o2 = y;
            s.mul_acc(n, x.data(), y.data(), o1.data());
            v.mul_acc(n, x.data(), y.data(), o2.data());
            expect_close(o1, o2, 1e-13);

            EXPECT_NEAR(s.dot(n, x.data(), y.data()), v.dot(n, x.data(), y.data()), 1e-10);
            EXPECT_NEAR(s.sum_sq_diff(n, x.data(), y.data()), v.sum_sq_diff(n, x.data(), y.data()), 1e-10);

            s.sigmoid(n, x.data(), o1.data());
            v.sigmoid(n, x.data(), o2.data());
            expect_close(o1, o2, 1e-13);
            s.tanh(n, x.data(), o1.data());
            v.tanh(n, x.data(), o2.data());
            expect_close(o1, o2, 1e-13);

            auto p1 = x, p2 = x, m1 = y, m2 = y;
            std::vector<double> v1(n, 0.5), v2(n, 0.5);
            const k::AdamCoeffs c{0.01, 0.9, 0.999, 1e-8, 0.19, 0.002};
            s.adam(n, p1.data(), y.data(), m1.data(), v1.data(), c);
            v.adam(n, p2.data(), y.data(), m2.data(), v2.data(), c);
            expect_close(p1, p2, 1e-13);
            expect_close(m1, m2, 1e-13);
            expect_close(v1, v2, 1e-13);
        }
        for (auto [m, n, kk] : std::vector<std::array<std::size_t, 3>>{{5, 3, 2}, {8, 16, 22}, {13, 7, 33}}) {
            auto a = random_vec(m * kk, rng), b = random_vec(kk * n, rng);
            std::vector<double> c1(m * n, 0.5), c2(m * n, 0.5);
            s.gemm_nn(m, n, kk, a.data(), b.data(), c1.data());
            v.gemm_nn(m, n, kk, a.data(), b.data(), c2.data());
            expect_close(c1, c2, 1e-12);
            const auto at = transpose(a, m, kk);
            c1.assign(m * n, 0.0);
            c2.assign(m * n, 0.0);
            s.gemm_tn(m, n, kk, at.data(), b.data(), c1.data());
            v.gemm_tn(m, n, kk, at.data(), b.data(), c2.data());
            expect_close(c1, c2, 1e-12);
            const auto bt = transpose(b, kk, n);
            c1.assign(m * n, 0.0);
            c2.assign(m * n, 0.0);
            s.gemm_nt(m, n, kk, a.data(), bt.data(), c1.data());
            v.gemm_nt(m, n, kk, a.data(), bt.data(), c2.data());
            expect_close(c1, c2, 1e-12);
        }
    }
}

TEST(Kernels, SigmoidAndTanhStableAtExtremes) {
    std::vector<double> x{-800.0, -40.0, 0.0, 40.0, 800.0}, o(5);
    for (k::Isa isa : {k::Isa::Scalar, k::Isa::Avx2, k::Isa::Neon}) {
        if (!k::supported(isa)) continue;
        k::table(isa).sigmoid(x.size(), x.data(), o.data());
        for (double v : o) EXPECT_TRUE(std::isfinite(v));
        EXPECT_NEAR(o[2], 0.5, 1e-15);
        EXPECT_NEAR(o[4], 1.0, 1e-15);
        k::table(isa).tanh(x.size(), x.data(), o.data());
        for (double v : o) EXPECT_TRUE(std::isfinite(v));
        EXPECT_NEAR(o[0], -1.0, 1e-15);
    }
}

TEST(Kernels, IsaSelection) {
    EXPECT_TRUE(k::supported(k::Isa::Scalar));
    EXPECT_TRUE(k::supported(k::best_isa()));
    {
        k::IsaGuard guard(k::Isa::Scalar);
        EXPECT_EQ(k::active_isa(), k::Isa::Scalar);
    }
    EXPECT_EQ(k::active_isa(), k::best_isa());
    for (k::Isa isa : {k::Isa::Avx2, k::Isa::Neon}) {
        if (!k::supported(isa)) EXPECT_THROW(k::set_active_isa(isa), galmad::ConfigError);
    }
}

TEST(Kernels, SpanWrappersCheckSizes) {
    std::vector<double> a(6), b(6), c(3);
    EXPECT_THROW(k::gemm_nn(2, 2, 3, a, b, c), galmad::DimensionError);
    std::vector<double> x(4), y(3);
    EXPECT_THROW(k::axpy(1.0, x, y), galmad::DimensionError);
}
