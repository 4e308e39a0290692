#include <atomic>
#include <string>

#include "svrlab/error.hpp"
#include "svrlab/kernels.hpp"

namespace svrlab::kernels {
namespace {

const KernelTable* detect() noexcept { return &table_for(best_available()); }

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> current{detect()};
  return current;
}

}  // namespace

bool available(Backend backend) noexcept {
  switch (backend) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(SVRLAB_HAVE_AVX2_KERNELS)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(SVRLAB_HAVE_NEON_KERNELS)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend best_available() noexcept {
  if (available(Backend::Avx2)) return Backend::Avx2;
  if (available(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

const KernelTable& table_for(Backend backend) {
  if (!available(backend)) {
    throw Error(Errc::InvalidConfig, std::string("kernel backend not available: ") +
                                         std::string(backend_name(backend)));
  }
  switch (backend) {
#if defined(SVRLAB_HAVE_AVX2_KERNELS)
    case Backend::Avx2:
      return avx2_table();
#endif
#if defined(SVRLAB_HAVE_NEON_KERNELS)
    case Backend::Neon:
      return neon_table();
#endif
    default:
      return scalar_table();
  }
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
    if (available(b)) out.push_back(b);
  }
  return out;
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

void select(Backend backend) { slot().store(&table_for(backend), std::memory_order_release); }

std::string_view backend_name(Backend backend) noexcept {
  switch (backend) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
    case Backend::Neon:
      return "neon";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::Scalar;
  if (name == "avx2") return Backend::Avx2;
  if (name == "neon") return Backend::Neon;
  if (name == "auto") return best_available();
  throw Error(Errc::InvalidConfig, "unknown kernel backend '" + std::string(name) + "'");
}

void matvec(std::span<const double> w, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<const double> b, std::span<double> y) {
  const auto& k = active();
  for (std::size_t r = 0; r < rows; ++r) {
    const double bias = b.empty() ? 0.0 : b[r];
    y[r] = bias + k.dot(w.data() + r * cols, x.data(), cols);
  }
}

void matvec_t_accumulate(std::span<const double> w, std::size_t rows, std::size_t cols,
                         std::span<const double> g, std::span<double> x_grad) {
  const auto& k = active();
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) k.axpy(g[r], w.data() + r * cols, x_grad.data(), cols);
  }
}

void rank1_accumulate(std::span<const double> g, std::span<const double> x, std::span<double> w_grad) {
  const auto& k = active();
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < g.size(); ++r) {
    if (g[r] != 0.0) k.axpy(g[r], x.data(), w_grad.data() + r * cols, cols);
  }
}

}  // namespace svrlab::kernels
