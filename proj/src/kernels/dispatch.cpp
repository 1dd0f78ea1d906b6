#include <atomic>
#include <string>

#include "galmad/error.hpp"
#include "galmad/kernels.hpp"

namespace galmad::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(GALMAD_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

struct ActiveKernels {
    std::atomic<Isa> isa;
    std::atomic<const KernelTable*> table;
};

ActiveKernels& active_slot() {
    static ActiveKernels slot{best_isa(), &table(best_isa())};
    return slot;
}

void check_size(std::size_t got, std::size_t want, const char* what) {
    if (got < want) {
        throw DimensionError(std::string(what) + ": buffer of " + std::to_string(got) + " elements, need " +
                             std::to_string(want));
    }
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool supported(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2: return cpu_has_avx2();
        case Isa::Neon:
#if defined(GALMAD_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa best_isa() {
    if (supported(Isa::Avx2)) return Isa::Avx2;
    if (supported(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

Isa active_isa() { return active_slot().isa.load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (!supported(isa)) throw ConfigError("kernel ISA '" + std::string(isa_name(isa)) + "' not available");
    active_slot().table.store(&table(isa), std::memory_order_relaxed);
    active_slot().isa.store(isa, std::memory_order_relaxed);
}

const KernelTable& table(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return detail::scalar_table();
#if defined(GALMAD_HAVE_AVX2)
        case Isa::Avx2:
            if (cpu_has_avx2()) return detail::avx2_table();
            break;
#endif
#if defined(GALMAD_HAVE_NEON)
        case Isa::Neon: return detail::neon_table();
#endif
        default: break;
    }
    throw ConfigError("kernel ISA '" + std::string(isa_name(isa)) + "' not available");
}

const KernelTable& active() { return *active_slot().table.load(std::memory_order_relaxed); }

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
    check_size(a.size(), m * k, "gemm_nn A");
    check_size(b.size(), k * n, "gemm_nn B");
    check_size(c.size(), m * n, "gemm_nn C");
    active().gemm_nn(m, n, k, a.data(), b.data(), c.data());
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
    check_size(a.size(), m * k, "gemm_tn A");
    check_size(b.size(), k * n, "gemm_tn B");
    check_size(c.size(), m * n, "gemm_tn C");
    active().gemm_tn(m, n, k, a.data(), b.data(), c.data());
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
    check_size(a.size(), m * k, "gemm_nt A");
    check_size(b.size(), k * n, "gemm_nt B");
    check_size(c.size(), m * n, "gemm_nt C");
    active().gemm_nt(m, n, k, a.data(), b.data(), c.data());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    check_size(y.size(), x.size(), "axpy");
    active().axpy(x.size(), alpha, x.data(), y.data());
}

double dot(std::span<const double> a, std::span<const double> b) {
    check_size(b.size(), a.size(), "dot");
    return active().dot(a.size(), a.data(), b.data());
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
    check_size(b.size(), a.size(), "sum_sq_diff");
    return active().sum_sq_diff(a.size(), a.data(), b.data());
}

}  // namespace galmad::kernels
