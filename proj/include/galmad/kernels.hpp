#pragma once

// Data-parallel inner loops used by the autodiff engine and the optimizer.
//
// Every kernel has a scalar reference implementation plus SIMD variants
// (AVX2+FMA on x86-64, NEON on aarch64). The variant is chosen once at
// startup from the CPU's capabilities; tests can pin a variant with
// set_active_isa() and compare against the scalar table directly.

#include <cstddef>
#include <span>
#include <string_view>

namespace galmad::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

struct AdamCoeffs {
    double lr;
    double beta1;
    double beta2;
    double eps;
    double bias1;  // 1 - beta1^step
    double bias2;  // 1 - beta2^step
};

// All matrices are row-major and densely packed.
struct KernelTable {
    // C[m x n] += A[m x k] * B[k x n]
    void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
    // C[m x n] += A^T * B, A stored as [k x m]
    void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
    // C[m x n] += A * B^T, B stored as [n x k]
    void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
    // y += alpha * x
    void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
    // out = a * b
    void (*mul)(std::size_t n, const double* a, const double* b, double* out);
    // out += a * b
    void (*mul_acc)(std::size_t n, const double* a, const double* b, double* out);
    double (*dot)(std::size_t n, const double* a, const double* b);
    // sum_i (a_i - b_i)^2
    double (*sum_sq_diff)(std::size_t n, const double* a, const double* b);
    void (*sigmoid)(std::size_t n, const double* x, double* out);
    void (*tanh)(std::size_t n, const double* x, double* out);
    void (*adam)(std::size_t n, double* param, const double* grad, double* m, double* v, const AdamCoeffs& k);
};

bool supported(Isa isa);
Isa best_isa();
Isa active_isa();
// Throws ConfigError when the CPU (or the build) lacks the requested ISA.
void set_active_isa(Isa isa);

const KernelTable& table(Isa isa);
const KernelTable& active();

// Span wrappers over the active table. Sizes are checked.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
double sum_sq_diff(std::span<const double> a, std::span<const double> b);

// Scoped override used by tests and benchmarks.
class IsaGuard {
public:
    explicit IsaGuard(Isa isa) : previous_(active_isa()) { set_active_isa(isa); }
    ~IsaGuard() { set_active_isa(previous_); }
    IsaGuard(const IsaGuard&) = delete;
    IsaGuard& operator=(const IsaGuard&) = delete;

private:
    Isa previous_;
};

namespace detail {
const KernelTable& scalar_table();
#if defined(GALMAD_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(GALMAD_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace galmad::kernels
