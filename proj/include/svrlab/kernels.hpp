#pragma once

// Dense f64 vector kernels with a scalar reference and SIMD variants.
//
// Every backend implements the same three primitives. The active table is
// chosen once from CPU features (or forced with select()) and then read
// lock-free from any thread. Results are deterministic for a fixed backend;
// backends agree to rounding, not bit for bit.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace svrlab::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
  Backend backend;
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
#if defined(SVRLAB_HAVE_AVX2_KERNELS)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(SVRLAB_HAVE_NEON_KERNELS)
const KernelTable& neon_table() noexcept;
#endif

// True when the backend was compiled in and the CPU supports it.
bool available(Backend backend) noexcept;
Backend best_available() noexcept;
const KernelTable& table_for(Backend backend);
std::vector<Backend> available_backends();

const KernelTable& active() noexcept;
void select(Backend backend);

std::string_view backend_name(Backend backend) noexcept;
Backend parse_backend(std::string_view name);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<double> x) { active().scale(alpha, x.data(), x.size()); }

// y = W x + b for row-major W (rows x cols). b may be empty.
void matvec(std::span<const double> w, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<const double> b, std::span<double> y);

// x_grad += W^T g
void matvec_t_accumulate(std::span<const double> w, std::size_t rows, std::size_t cols,
                         std::span<const double> g, std::span<double> x_grad);

// W_grad += g x^T
void rank1_accumulate(std::span<const double> g, std::span<const double> x, std::span<double> w_grad);

}  // namespace svrlab::kernels
