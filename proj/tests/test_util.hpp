#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "pcaet/forward_model.hpp"
#include "pcaet/volume.hpp"

namespace testutil {

inline std::vector<double> random_real(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                       double hi = 1.0) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(g);
  return v;
}

inline std::vector<pcaet::Complex> random_complex(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d;
  std::vector<pcaet::Complex> v(n);
  for (auto& x : v) x = {d(g), d(g)};
  return v;
}

inline pcaet::PotentialVolume random_volume(int nx, int ny, int nz, double pitch,
                                            std::uint64_t seed, double lo = -1.0,
                                            double hi = 1.0) {
  pcaet::PotentialVolume v(nx, ny, nz, pitch);
  v.values = random_real(v.size(), seed, lo, hi);
  return v;
}

/// Slope of log(err) against log(h) by least squares.
inline double loglog_slope(const std::vector<double>& h, const std::vector<double>& err) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace testutil
