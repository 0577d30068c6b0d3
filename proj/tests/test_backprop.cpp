#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pcaet/backprop.hpp"
#include "pcaet/forward_model.hpp"
#include "test_util.hpp"

using namespace pcaet;

namespace {

struct Setup {
  InteractionParams p = interaction_parameter(300.0);
  GridSpec grid{8, 8, 0.5, p.lambda};
  std::vector<double> defoci{250.0, 1000.0};
  TransferFunction h = TransferFunction::standard(grid, true);
  BinnedVolume w{8, 8, 4, 1, 0.5};
  std::vector<Image> amplitudes;

  explicit Setup(std::uint64_t seed) {
    // σW ~ 0.1 rad per slab.
    const double scale = 0.1 / p.sigma;
    w.values = testutil::random_real(w.values.size(), seed, 0.0, 2.0 * scale);
    BinnedVolume other = w;
    other.values = testutil::random_real(w.values.size(), seed + 99, 0.0, 2.0 * scale);
    const auto ref = multislice_forward(other, p, defoci, h);
    for (const auto& e : ref.exits) {
      Image a = intensity(e);
      for (double& x : a.values) x = std::sqrt(x);
      amplitudes.push_back(a);
    }
  }

  // ½ Σ_j ‖|ψ_j| − a_j‖², the objective whose gradient is Re(g).
  double half_cost(const BinnedVolume& v) const {
    const auto f = multislice_forward(v, p, defoci, h);
    double c = 0.0;
    for (std::size_t j = 0; j < defoci.size(); ++j) c += exit_cost(f.exits[j], amplitudes[j]);
    return 0.5 * c;
  }

  GradientSlabs gradient(const BinnedVolume& v) const {
    const auto f = multislice_forward(v, p, defoci, h);
    std::vector<WaveField> r;
    for (std::size_t j = 0; j < defoci.size(); ++j) r.push_back(residual(f.exits[j], amplitudes[j]));
    return backpropagate(r, f, v, p, defoci, h);
  }
};

}  // namespace

TEST_CASE("backprop gradient matches central finite differences at 20 voxels") {
  Setup s(11);
  const GradientSlabs g = s.gradient(s.w);
  const double max_w = *std::max_element(s.w.values.begin(), s.w.values.end());
  const double step = 1e-4 * max_w;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, s.w.values.size() - 1);
  double num = 0.0, den = 0.0;
  for (int k = 0; k < 20; ++k) {
    const std::size_t idx = pick(rng);
    BinnedVolume plus = s.w, minus = s.w;
    plus.values[idx] += step;
    minus.values[idx] -= step;
    const double fd = (s.half_cost(plus) - s.half_cost(minus)) / (2 * step);
    const std::size_t slab = idx / 64, pix = idx % 64;
    const double an = g[slab][pix].real();
    num += (an - fd) * (an - fd);
    den += fd * fd;
  }
  const double rel = std::sqrt(num / den);
  MESSAGE("relative gradient error " << rel);
  CHECK(rel < 1e-4);
}

TEST_CASE("directional derivative remainder is second order") {
  Setup s(23);
  const GradientSlabs g = s.gradient(s.w);
  const double scale = 0.1 / s.p.sigma;
  const auto dir = testutil::random_real(s.w.values.size(), 77, -scale, scale);
  double slope = 0.0;
  for (std::size_t i = 0; i < dir.size(); ++i) slope += g[i / 64][i % 64].real() * dir[i];
  const double f0 = s.half_cost(s.w);
  std::vector<double> hs{1e-2, 1e-3, 1e-4, 1e-5}, errs;
  for (double hh : hs) {
    BinnedVolume v = s.w;
    for (std::size_t i = 0; i < dir.size(); ++i) v.values[i] += hh * dir[i];
    errs.push_back(std::abs(s.half_cost(v) - f0 - hh * slope));
  }
  const double order = testutil::loglog_slope(hs, errs);
  MESSAGE("remainder order " << order);
  CHECK(order >= 1.9);
}

TEST_CASE("residual and exit cost agree") {
  Setup s(3);
  const auto f = multislice_forward(s.w, s.p, s.defoci, s.h);
  const WaveField r = residual(f.exits[0], s.amplitudes[0]);
  double rr = 0.0;
  for (const auto& c : r.values) rr += std::norm(c);
  CHECK(rr == doctest::Approx(exit_cost(f.exits[0], s.amplitudes[0])).epsilon(1e-12));
}

TEST_CASE("residual uses a unit phase where the exit wave vanishes") {
  GridSpec g(2, 2, 0.5, 0.0197);
  WaveField psi(g);
  psi.values = {Complex(0.0, 0.0), Complex(0.0, 2.0), Complex(1.0, 0.0), Complex(1.0, 0.0)};
  Image a(2, 2);
  a.values = {3.0, 1.0, 1.0, 1.0};
  const WaveField r = residual(psi, a);
  CHECK(r.values[0] == Complex(-3.0, 0.0));
  CHECK(std::abs(r.values[1] - Complex(0.0, 1.0)) < 1e-15);
}

TEST_CASE("amplitude cost is zero on a perfect fit and rejects negative intensity") {
  Image a(2, 2, 4.0), b(2, 2, 4.0);
  std::vector<Image> m{a}, p{b};
  CHECK(amplitude_cost(m, p) == 0.0);
  p[0].values[1] = 1.0;
  CHECK(amplitude_cost(m, p) == doctest::Approx(1.0));
  p[0].values[2] = -1.0;
  CHECK_THROWS_AS(amplitude_cost(m, p), NumericalError);
}
