#include "pcaet/prox.hpp"

#include <algorithm>
#include <cmath>

#include "pcaet/kernels.hpp"

namespace pcaet {

namespace {
kernels::VolumeShape shape_of(const PotentialVolume& v) { return {v.nx, v.ny, v.nz}; }
}  // namespace

PotentialVolume prox_positivity(const PotentialVolume& v) {
  PotentialVolume out = v;
  for (double& x : out.values) x = std::max(x, 0.0);
  return out;
}

PotentialVolume prox_lasso(const PotentialVolume& v, double threshold) {
  if (!(threshold >= 0.0)) throw ConfigError("lasso threshold must be non-negative");
  PotentialVolume out = v;
  for (double& x : out.values) x = std::max(x - threshold, 0.0);
  return out;
}

PotentialVolume prox_tv(const PotentialVolume& v, double weight, int inner_iters) {
  if (!(weight >= 0.0)) throw ConfigError("TV weight must be non-negative");
  if (inner_iters < 1) throw ConfigError("TV inner iterations must be positive");
  if (weight == 0.0) return prox_positivity(v);

  const auto s = shape_of(v);
  const std::size_t n = v.size();
  const double step = 1.0 / (12.0 * weight);  // ‖∇‖² ≤ 12 in 3D

  std::vector<double> p(3 * n, 0.0), p_prev(3 * n, 0.0), r(3 * n, 0.0), grad(3 * n);
  std::vector<double> div(n);
  PotentialVolume x = v;

  auto primal = [&](const std::vector<double>& dual) {
    kernels::omp::divergence3(dual, div, s);
    for (std::size_t i = 0; i < n; ++i) x.values[i] = std::max(v.values[i] + weight * div[i], 0.0);
  };

  double t = 1.0;
  for (int k = 0; k < inner_iters; ++k) {
    primal(r);
    kernels::omp::gradient3(x.values, grad, s);
    for (std::size_t i = 0; i < 3 * n; ++i) p[i] = r[i] + step * grad[i];
    kernels::omp::project_unit_ball(p, s);
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    const double beta = (t - 1.0) / t_next;
    for (std::size_t i = 0; i < 3 * n; ++i) r[i] = p[i] + beta * (p[i] - p_prev[i]);
    p_prev.swap(p);
    t = t_next;
  }
  primal(p_prev);
  return x;
}

double total_variation(const PotentialVolume& v) {
  const std::size_t n = v.size();
  std::vector<double> grad(3 * n);
  kernels::omp::gradient3(v.values, grad, shape_of(v));
  double tv = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    tv += std::sqrt(grad[i] * grad[i] + grad[n + i] * grad[n + i] + grad[2 * n + i] * grad[2 * n + i]);
  return tv;
}

}  // namespace pcaet
