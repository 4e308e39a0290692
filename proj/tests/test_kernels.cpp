#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "svrlab/kernels.hpp"
#include "test_util.hpp"

namespace svrlab {
namespace {

using kernels::Backend;

class BackendGuard {
 public:
  BackendGuard() : saved_(kernels::active().backend) {}
  ~BackendGuard() { kernels::select(saved_); }

 private:
  Backend saved_;
};

TEST(Kernels, ScalarAlwaysAvailable) {
  EXPECT_TRUE(kernels::available(Backend::Scalar));
  EXPECT_FALSE(kernels::available_backends().empty());
  EXPECT_TRUE(kernels::available(kernels::best_available()));
}

TEST(Kernels, EveryBackendMatchesScalar) {
  std::mt19937_64 rng(11);
  const auto& ref = kernels::scalar_table();
  for (Backend b : kernels::available_backends()) {
    const auto& k = kernels::table_for(b);
    for (std::size_t n = 0; n < 70; ++n) {
      const Vec x = testing::random_vec(n, rng);
      const Vec y = testing::random_vec(n, rng);
      double scale_mag = 0.0;
      for (std::size_t i = 0; i < n; ++i) scale_mag += std::abs(x[i] * y[i]);
      EXPECT_NEAR(k.dot(x.data(), y.data(), n), ref.dot(x.data(), y.data(), n), 1e-14 * (1.0 + scale_mag))
          << kernels::backend_name(b) << " n=" << n;

      Vec y1 = y, y2 = y;
      k.axpy(0.37, x.data(), y1.data(), n);
      ref.axpy(0.37, x.data(), y2.data(), n);
      EXPECT_LE(testing::max_abs_diff(y1, y2), 1e-15 * 4) << kernels::backend_name(b);

      Vec s1 = x, s2 = x;
      k.scale(-1.7, s1.data(), n);
      ref.scale(-1.7, s2.data(), n);
      EXPECT_EQ(s1, s2) << kernels::backend_name(b);
    }
  }
}

TEST(Kernels, SelectAndParse) {
  BackendGuard guard;
  kernels::select(Backend::Scalar);
  EXPECT_EQ(kernels::active().backend, Backend::Scalar);
  EXPECT_EQ(kernels::parse_backend("scalar"), Backend::Scalar);
  EXPECT_EQ(kernels::parse_backend("auto"), kernels::best_available());
  EXPECT_THROW(kernels::parse_backend("sse9"), Error);
  for (Backend b : {Backend::Avx2, Backend::Neon}) {
    if (!kernels::available(b)) {
      EXPECT_THROW(kernels::select(b), Error);
    }
  }
}

TEST(Kernels, CompositesMatchNaiveLoops) {
  std::mt19937_64 rng(5);
  const std::size_t rows = 7, cols = 13;
  const Vec w = testing::random_vec(rows * cols, rng);
  const Vec x = testing::random_vec(cols, rng);
  const Vec b = testing::random_vec(rows, rng);
  const Vec g = testing::random_vec(rows, rng);
  Vec y(rows);
  kernels::matvec(w, rows, cols, x, b, y);
  Vec xg(cols, 0.0);
  kernels::matvec_t_accumulate(w, rows, cols, g, xg);
  Vec wg(rows * cols, 0.0);
  kernels::rank1_accumulate(g, x, wg);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += w[r * cols + c] * x[c];
    EXPECT_NEAR(y[r], acc, 1e-12);
    for (std::size_t c = 0; c < cols; ++c) EXPECT_DOUBLE_EQ(wg[r * cols + c], g[r] * x[c]);
  }
  for (std::size_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += w[r * cols + c] * g[r];
    EXPECT_NEAR(xg[c], acc, 1e-12);
  }
}

}  // namespace
}  // namespace svrlab
