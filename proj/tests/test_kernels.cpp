#include <doctest.h>

#include <vector>

#include "pcaet/kernels.hpp"
#include "test_util.hpp"

using namespace pcaet;
namespace k = pcaet::kernels;

namespace {

const k::VolumeShape kShape{23, 7, 19};

template <class Fn>
void for_thread_counts(Fn&& fn) {
  const int saved = k::thread_count();
  for (int t : {1, 2, 3, 8}) {
    k::set_thread_count(t);
    fn(t);
  }
  k::set_thread_count(saved);
}

}  // namespace

TEST_CASE("shear kernels: OpenMP output equals serial bitwise for any thread count") {
  const auto in = testutil::random_real(kShape.size(), 1);
  const k::Shear sh{0.37, 9.0};
  std::vector<double> ref(in.size()), out(in.size());
  using Fn = void (*)(std::span<const double>, std::span<double>, k::VolumeShape, k::Shear);
  const std::pair<Fn, Fn> pairs[] = {{k::serial::shear_x, k::omp::shear_x},
                                     {k::serial::shear_x_adjoint, k::omp::shear_x_adjoint},
                                     {k::serial::shear_z, k::omp::shear_z},
                                     {k::serial::shear_z_adjoint, k::omp::shear_z_adjoint}};
  for (const auto& [ser, par] : pairs) {
    ser(in, ref, kShape, sh);
    for_thread_counts([&](int) {
      par(in, out, kShape, sh);
      CHECK(out == ref);
    });
  }
}

TEST_CASE("shear adjoints pass the dot-product test") {
  const auto x = testutil::random_real(kShape.size(), 2);
  const auto y = testutil::random_real(kShape.size(), 3);
  std::vector<double> ax(x.size()), aty(y.size());
  for (double coef : {-0.9, -0.2, 0.41, 1.0}) {
    k::serial::shear_x(x, ax, kShape, {coef, 9.0});
    k::serial::shear_x_adjoint(y, aty, kShape, {coef, 9.0});
    CHECK(std::abs(inner(ax, y) - inner(x, aty)) <= 1e-12 * l2norm(x) * l2norm(y));
    k::serial::shear_z(x, ax, kShape, {coef, 11.0});
    k::serial::shear_z_adjoint(y, aty, kShape, {coef, 11.0});
    CHECK(std::abs(inner(ax, y) - inner(x, aty)) <= 1e-12 * l2norm(x) * l2norm(y));
  }
}

TEST_CASE("binning, transmit, gradient, divergence, ball projection: OpenMP equals serial") {
  const auto in = testutil::random_real(kShape.size(), 4);
  const int nb = 4;
  const k::VolumeShape binned{kShape.nx, kShape.ny, (kShape.nz + nb - 1) / nb};
  std::vector<double> ref(binned.size()), out(binned.size());
  k::serial::bin_sum(in, ref, kShape, nb);
  for_thread_counts([&](int) {
    k::omp::bin_sum(in, out, kShape, nb);
    CHECK(out == ref);
  });

  std::vector<double> rep_ref(kShape.size()), rep(kShape.size());
  k::serial::bin_replicate(ref, rep_ref, kShape, nb);
  for_thread_counts([&](int) {
    k::omp::bin_replicate(ref, rep, kShape, nb);
    CHECK(rep == rep_ref);
  });

  const auto psi = testutil::random_complex(kShape.size(), 5);
  std::vector<Complex> t_ref(psi.size()), t(psi.size());
  k::serial::transmit(in, psi, t_ref, 6.5e-4 * 100, -1.0);
  for_thread_counts([&](int) {
    k::omp::transmit(in, psi, t, 6.5e-4 * 100, -1.0);
    CHECK(t == t_ref);
  });

  std::vector<double> g_ref(3 * kShape.size()), g(3 * kShape.size());
  k::serial::gradient3(in, g_ref, kShape);
  for_thread_counts([&](int) {
    k::omp::gradient3(in, g, kShape);
    CHECK(g == g_ref);
  });
  std::vector<double> d_ref(kShape.size()), d(kShape.size());
  k::serial::divergence3(g_ref, d_ref, kShape);
  for_thread_counts([&](int) {
    k::omp::divergence3(g_ref, d, kShape);
    CHECK(d == d_ref);
  });
  auto p_ref = g_ref;
  k::serial::project_unit_ball(p_ref, kShape);
  for_thread_counts([&](int) {
    auto p = g_ref;
    k::omp::project_unit_ball(p, kShape);
    CHECK(p == p_ref);
  });
}

TEST_CASE("divergence is the negative adjoint of the gradient") {
  const auto x = testutil::random_real(kShape.size(), 6);
  const auto p = testutil::random_real(3 * kShape.size(), 7);
  std::vector<double> gx(3 * kShape.size()), dp(kShape.size());
  k::serial::gradient3(x, gx, kShape);
  k::serial::divergence3(p, dp, kShape);
  CHECK(std::abs(inner(gx, p) + inner(x, dp)) <= 1e-12 * l2norm(x) * l2norm(p));
}

TEST_CASE("blob rendering: OpenMP equals serial and preserves list order") {
  std::vector<k::AtomBlob> atoms;
  const auto r = testutil::random_real(5 * 40, 8, 0.0, 1.0);
  for (int i = 0; i < 40; ++i)
    atoms.push_back({2 + 19 * r[5 * i], 1 + 5 * r[5 * i + 1], 2 + 15 * r[5 * i + 2],
                     50 + 100 * r[5 * i + 3], 0.8 + r[5 * i + 4]});
  std::vector<double> ref(kShape.size(), 0.0);
  k::serial::render_blobs(atoms, ref, kShape);
  for_thread_counts([&](int) {
    std::vector<double> out(kShape.size(), 0.0);
    k::omp::render_blobs(atoms, out, kShape);
    CHECK(out == ref);
  });
}
