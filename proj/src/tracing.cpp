#include "pcaet/tracing.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <numbers>
#include <sstream>
#include <tuple>
#include <array>

#include "pcaet/fft.hpp"

namespace pcaet {

AtomList TracedAtoms::to_atoms() const {
  AtomList out;
  out.reserve(sites.size());
  for (const auto& s : sites)
    out.push_back({s.x * pitch, s.y * pitch, s.z * pitch, s.species, s.intensity, s.width * pitch});
  return out;
}

namespace {

// Minimal Levenberg–Marquardt. `eval(p, r, J)` fills residuals and, if J is non-null,
// the Jacobian; `admissible(p)` rejects trial points outside the parameter domain.
struct LmOutcome {
  int steps = 0;
  bool converged = false;
  double cost = 0.0;
};

template <class Eval, class Admissible>
LmOutcome levenberg_marquardt(Eigen::VectorXd& p, Eval&& eval, Admissible&& admissible,
                              int max_steps) {
  Eigen::VectorXd r, r_trial;
  Eigen::MatrixXd J;
  eval(p, r, &J);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  LmOutcome out;
  if (!std::isfinite(cost)) return out;
  for (int step = 1; step <= max_steps; ++step) {
    out.steps = step;
    const Eigen::MatrixXd jtj = J.transpose() * J;
    const Eigen::VectorXd jtr = J.transpose() * r;
    if (jtr.norm() <= 1e-14 * (1.0 + cost)) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      const double floor = 1e-12 * std::max(1.0, jtj.diagonal().maxCoeff());
      for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, i) += lambda * std::max(jtj(i, i), floor);
      const Eigen::VectorXd delta = a.ldlt().solve(-jtr);
      if (!delta.allFinite()) {
        lambda *= 10.0;
      } else {
        const Eigen::VectorXd trial = p + delta;
        double trial_cost = std::numeric_limits<double>::infinity();
        if (admissible(trial)) {
          eval(trial, r_trial, nullptr);
          trial_cost = r_trial.squaredNorm();
        }
        if (std::isfinite(trial_cost) && trial_cost <= cost) {
          const double drop = cost - trial_cost;
          const bool small_step = delta.norm() <= 1e-9 * (p.norm() + 1e-9);
          p = trial;
          eval(p, r, &J);
          cost = r.squaredNorm();
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
          if (drop <= 1e-12 * cost + 1e-300 || small_step) out.converged = true;
        } else {
          lambda *= 4.0;
        }
      }
      if (lambda > 1e14) {
        // No descent direction left: already at a local minimum.
        out.converged = true;
        accepted = true;
      }
    }
    if (out.converged) break;
  }
  out.cost = cost;
  return out;
}

// Cubic window of samples (clipped to the volume), origin at voxel (x0, y0, z0).
struct Window {
  int x0, y0, z0, nx, ny, nz;
  std::vector<double> data;
};

Window make_window(const PotentialVolume& v, int cx, int cy, int cz, int size) {
  const int half = size / 2;
  Window w;
  w.x0 = std::max(0, cx - half);
  w.y0 = std::max(0, cy - half);
  w.z0 = std::max(0, cz - half);
  const int x1 = std::min(v.nx - 1, cx + half);
  const int y1 = std::min(v.ny - 1, cy + half);
  const int z1 = std::min(v.nz - 1, cz + half);
  w.nx = std::max(0, x1 - w.x0 + 1);
  w.ny = std::max(0, y1 - w.y0 + 1);
  w.nz = std::max(0, z1 - w.z0 + 1);
  w.data.reserve(static_cast<std::size_t>(w.nx) * w.ny * w.nz);
  for (int z = w.z0; z < w.z0 + w.nz; ++z)
    for (int y = w.y0; y < w.y0 + w.ny; ++y)
      for (int x = w.x0; x < w.x0 + w.nx; ++x) w.data.push_back(v(x, y, z));
  return w;
}

// Parameters: A, μx, μy, μz, s, b.
struct FitLimits {
  double max_shift;
  double max_width;
};

GaussianFit fit_window(const Window& w, const GaussianFit& init, int max_steps, FitLimits lim) {
  GaussianFit out = init;
  const std::size_t n = w.data.size();
  if (n < 7) return out;
  Eigen::VectorXd p(6);
  p << init.amplitude, init.x, init.y, init.z, init.width, init.background;

  auto eval = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(static_cast<Eigen::Index>(n));
    if (J) J->resize(static_cast<Eigen::Index>(n), 6);
    const double inv_s2 = 1.0 / (q[4] * q[4]);
    Eigen::Index k = 0;
    for (int z = 0; z < w.nz; ++z)
      for (int y = 0; y < w.ny; ++y)
        for (int x = 0; x < w.nx; ++x, ++k) {
          const double dx = w.x0 + x + 0.5 - q[1];
          const double dy = w.y0 + y + 0.5 - q[2];
          const double dz = w.z0 + z + 0.5 - q[3];
          const double d2 = dx * dx + dy * dy + dz * dz;
          const double g = std::exp(-0.5 * d2 * inv_s2);
          r[k] = q[0] * g + q[5] - w.data[static_cast<std::size_t>(k)];
          if (J) {
            const double ag = q[0] * g * inv_s2;
            (*J)(k, 0) = g;
            (*J)(k, 1) = ag * dx;
            (*J)(k, 2) = ag * dy;
            (*J)(k, 3) = ag * dz;
            (*J)(k, 4) = ag * d2 / q[4];
            (*J)(k, 5) = 1.0;
          }
        }
  };
  const auto shift = [&](const Eigen::VectorXd& q) {
    return std::hypot(q[1] - init.x, q[2] - init.y, q[3] - init.z);
  };
  auto admissible = [&](const Eigen::VectorXd& q) {
    return q[4] > 0.05 && q[4] <= lim.max_width && shift(q) <= lim.max_shift;
  };
  const LmOutcome lm = levenberg_marquardt(p, eval, admissible, max_steps);
  // pinned against a limit: the unconstrained optimum lies outside
  const bool pinned = shift(p) > 0.98 * lim.max_shift || p[4] > 0.98 * lim.max_width;
  out.amplitude = p[0];
  out.x = p[1];
  out.y = p[2];
  out.z = p[3];
  out.width = p[4];
  out.background = p[5];
  out.steps = lm.steps;
  out.converged = lm.converged && p.allFinite() && !pinned;
  out.residual = std::sqrt(lm.cost / static_cast<double>(n));
  return out;
}

GaussianFit initial_guess(const Window& w, VoxelIndex site, const PotentialVolume& v) {
  GaussianFit g;
  g.x = site.x + 0.5;
  g.y = site.y + 0.5;
  g.z = site.z + 0.5;
  const double lo = w.data.empty() ? 0.0 : *std::min_element(w.data.begin(), w.data.end());
  g.background = lo;
  g.amplitude = v(site.x, site.y, site.z) - lo;
  g.width = 1.2;
  return g;
}

int floor_index(double c, int n) { return std::clamp(static_cast<int>(std::floor(c)), 0, n - 1); }

// Adds (sign = +1) or removes a site's point-sampled Gaussian.
void splat(PotentialVolume& m, const TracedSite& s, double sign) {
  const int reach = static_cast<int>(std::ceil(4.0 * s.width)) + 1;
  const int cx = floor_index(s.x, m.nx), cy = floor_index(s.y, m.ny), cz = floor_index(s.z, m.nz);
  const double inv_s2 = 1.0 / (s.width * s.width);
  for (int z = std::max(0, cz - reach); z <= std::min(m.nz - 1, cz + reach); ++z)
    for (int y = std::max(0, cy - reach); y <= std::min(m.ny - 1, cy + reach); ++y)
      for (int x = std::max(0, cx - reach); x <= std::min(m.nx - 1, cx + reach); ++x) {
        const double dx = x + 0.5 - s.x, dy = y + 0.5 - s.y, dz = z + 0.5 - s.z;
        m(x, y, z) += sign * s.intensity * std::exp(-0.5 * (dx * dx + dy * dy + dz * dz) * inv_s2);
      }
}

PotentialVolume model_volume(const PotentialVolume& like, const std::vector<TracedSite>& sites) {
  PotentialVolume m(like.nx, like.ny, like.nz, like.pitch);
  for (const auto& s : sites) splat(m, s, 1.0);
  return m;
}

TracedSite to_site(const GaussianFit& f) {
  TracedSite s;
  s.x = f.x;
  s.y = f.y;
  s.z = f.z;
  s.intensity = f.amplitude;
  s.width = f.width;
  return s;
}

double site_dist2(const TracedSite& a, const TracedSite& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

bool index_less(const TracedSite& a, const TracedSite& b) {
  const auto key = [](const TracedSite& s) {
    return std::array<double, 3>{std::floor(s.z), std::floor(s.y), std::floor(s.x)};
  };
  const auto ka = key(a), kb = key(b);
  if (ka != kb) return ka < kb;
  return std::tie(a.z, a.y, a.x) < std::tie(b.z, b.y, b.x);
}

bool keep_fit(const GaussianFit& f, double floor, const TraceParams& p) {
  return f.converged && std::isfinite(f.amplitude) && f.amplitude >= floor &&
         f.width >= p.width_floor;
}

// Merges the closest pair under the merge distance until none remains. Returns merge count.
std::size_t merge_close(std::vector<TracedSite>& sites, double merge_distance) {
  std::size_t merges = 0;
  const double lim2 = merge_distance * merge_distance;
  while (true) {
    double best = lim2;
    std::size_t bi = 0, bj = 0;
    bool found = false;
    for (std::size_t i = 0; i < sites.size(); ++i)
      for (std::size_t j = i + 1; j < sites.size(); ++j) {
        const double d = site_dist2(sites[i], sites[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
          found = true;
        }
      }
    if (!found) break;
    TracedSite& a = sites[bi];
    const TracedSite& b = sites[bj];
    const double wa = std::max(a.intensity, 0.0), wb = std::max(b.intensity, 0.0);
    const double wt = wa + wb > 0 ? wa + wb : 1.0;
    TracedSite merged = wa >= wb ? a : b;
    merged.x = (wa * a.x + wb * b.x) / wt;
    merged.y = (wa * a.y + wb * b.y) / wt;
    merged.z = (wa * a.z + wb * b.z) / wt;
    a = merged;
    sites.erase(sites.begin() + static_cast<std::ptrdiff_t>(bj));
    ++merges;
  }
  return merges;
}

}  // namespace

PotentialVolume dog_filter(const PotentialVolume& v, double sigma_small, double sigma_large) {
  if (!(sigma_small > 0.0 && sigma_large > 0.0)) throw ConfigError("DoG widths must be positive");
  const int nx = v.nx, ny = v.ny, nz = v.nz;
  const std::size_t n = v.size();
  PotentialVolume out(nx, ny, nz, v.pitch);
  if (n == 0) return out;

  // Periodic kernel with wrapped offsets; each Gaussian normalized to unit sum.
  const auto wrap = [](int i, int len) { return i <= len / 2 ? i : i - len; };
  std::vector<double> g1(n), g2(n);
  double s1 = 0.0, s2 = 0.0;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const double dx = wrap(x, nx), dy = wrap(y, ny), dz = wrap(z, nz);
        const double d2 = dx * dx + dy * dy + dz * dz;
        const std::size_t k = v.index(x, y, z);
        g1[k] = std::exp(-0.5 * d2 / (sigma_small * sigma_small));
        g2[k] = std::exp(-0.5 * d2 / (sigma_large * sigma_large));
        s1 += g1[k];
        s2 += g2[k];
      }
  std::vector<Complex> kernel(n), data(n);
  for (std::size_t k = 0; k < n; ++k) {
    kernel[k] = g1[k] / s1 - g2[k] / s2;
    data[k] = v.values[k];
  }
  fft3_inplace(kernel, nx, ny, nz, FftDirection::Forward);
  fft3_inplace(data, nx, ny, nz, FftDirection::Forward);
  for (std::size_t k = 0; k < n; ++k) data[k] *= kernel[k];
  fft3_inplace(data, nx, ny, nz, FftDirection::Inverse);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) out.values[k] = data[k].real() * scale;
  return out;
}

std::vector<VoxelIndex> find_candidates(const PotentialVolume& f, int border, double min_response) {
  std::vector<VoxelIndex> out;
  const int b = std::max(border, 1);
  for (int z = b; z < f.nz - b; ++z)
    for (int y = b; y < f.ny - b; ++y)
      for (int x = b; x < f.nx - b; ++x) {
        const double c = f(x, y, z);
        if (!(c > min_response)) continue;
        const std::size_t ci = f.index(x, y, z);
        bool peak = true;
        for (int dz = -1; dz <= 1 && peak; ++dz)
          for (int dy = -1; dy <= 1 && peak; ++dy)
            for (int dx = -1; dx <= 1 && peak; ++dx) {
              if (!dx && !dy && !dz) continue;
              const double o = f(x + dx, y + dy, z + dz);
              if (o > c || (o == c && f.index(x + dx, y + dy, z + dz) < ci)) peak = false;
            }
        if (peak) out.push_back({x, y, z});
      }
  return out;
}

GaussianFit fit_gaussian_3d(const PotentialVolume& v, VoxelIndex site, int window, int max_steps) {
  if (window < 3) throw ConfigError("fit window must be at least 3 voxels");
  if (site.x < 0 || site.y < 0 || site.z < 0 || site.x >= v.nx || site.y >= v.ny || site.z >= v.nz)
    throw ConfigError("fit site outside the volume");
  const Window w = make_window(v, site.x, site.y, site.z, window);
  const TraceParams d;
  return fit_window(w, initial_guess(w, site, v), max_steps, {d.max_center_shift, d.max_width});
}

TracedAtoms trace_atoms(const PotentialVolume& v, const TraceParams& p) {
  TracedAtoms result;
  result.pitch = v.pitch;
  if (v.size() == 0) return result;
  const double floor = p.intensity_floor_volts * v.pitch;
  const FitLimits lim{p.max_center_shift, p.max_width};

  // Fits a candidate list against `data`, keeping only acceptable sites.
  const auto fit_candidates = [&](const PotentialVolume& data, const std::vector<VoxelIndex>& c) {
    std::vector<GaussianFit> fits(c.size());
    const std::ptrdiff_t nc = static_cast<std::ptrdiff_t>(c.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < nc; ++i) {
      const Window w = make_window(data, c[i].x, c[i].y, c[i].z, p.window);
      fits[i] = fit_window(w, initial_guess(w, c[i], data), p.max_fit_steps, lim);
    }
    std::vector<TracedSite> kept;
    for (const auto& f : fits)
      if (keep_fit(f, floor, p)) kept.push_back(to_site(f));
    return kept;
  };

  // Detect, fit, subtract, re-detect on the remainder.
  std::vector<TracedSite> sites =
      fit_candidates(v, find_candidates(dog_filter(v, p.dog_sigma_small, p.dog_sigma_large), p.border));
  {
    PotentialVolume rest = v;
    const PotentialVolume m = model_volume(v, sites);
    for (std::size_t k = 0; k < rest.size(); ++k) rest.values[k] -= m.values[k];
    const auto extra = fit_candidates(
        rest, find_candidates(dog_filter(rest, p.dog_sigma_small, p.dog_sigma_large), p.border));
    sites.insert(sites.end(), extra.begin(), extra.end());
  }
  merge_close(sites, p.merge_distance);
  std::sort(sites.begin(), sites.end(), index_less);

  for (int iter = 1; iter <= p.max_iterations; ++iter) {
    const PotentialVolume m = model_volume(v, sites);
    std::vector<GaussianFit> fits(sites.size());
    const std::ptrdiff_t ns = static_cast<std::ptrdiff_t>(sites.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < ns; ++i) {
      // Window of the volume with every other site's model removed.
      const TracedSite& s = sites[i];
      const int cx = floor_index(s.x, v.nx), cy = floor_index(s.y, v.ny), cz = floor_index(s.z, v.nz);
      Window w = make_window(v, cx, cy, cz, p.window);
      const double inv_s2 = 1.0 / (s.width * s.width);
      std::size_t k = 0;
      for (int z = w.z0; z < w.z0 + w.nz; ++z)
        for (int y = w.y0; y < w.y0 + w.ny; ++y)
          for (int x = w.x0; x < w.x0 + w.nx; ++x, ++k) {
            const double dx = x + 0.5 - s.x, dy = y + 0.5 - s.y, dz = z + 0.5 - s.z;
            const double own = s.intensity * std::exp(-0.5 * (dx * dx + dy * dy + dz * dz) * inv_s2);
            w.data[k] -= m(x, y, z) - own;
          }
      GaussianFit init;
      init.x = s.x;
      init.y = s.y;
      init.z = s.z;
      init.amplitude = s.intensity;
      init.width = s.width;
      init.background = 0.0;
      fits[i] = fit_window(w, init, p.max_fit_steps, lim);
    }

    std::vector<TracedSite> next;
    double move2 = 0.0;
    std::size_t moved = 0, removed = 0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      if (!keep_fit(fits[i], floor, p)) {
        ++removed;
        continue;
      }
      const TracedSite s = to_site(fits[i]);
      move2 += site_dist2(s, sites[i]);
      ++moved;
      next.push_back(s);
    }
    removed += merge_close(next, p.merge_distance);
    std::sort(next.begin(), next.end(), index_less);
    sites = std::move(next);
    result.iterations = iter;
    const double rms = moved ? std::sqrt(move2 / static_cast<double>(moved)) : 0.0;
    if (static_cast<int>(removed) < p.stop_removed_below && rms < p.stop_rms_move) break;
  }

  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = i + 1; j < sites.size(); ++j)
      if (site_dist2(sites[i], sites[j]) < p.merge_distance * p.merge_distance)
        throw NumericalError("trace_atoms left two sites closer than the merge distance");
  result.sites = std::move(sites);
  return result;
}

Classification classify_species(TracedAtoms& t) {
  Classification c;
  for (auto& s : t.sites) s.species = Species::Unclassified;
  const std::size_t n = t.sites.size();
  if (n < 2) {
    c.warning = "too few sites to classify";
    return c;
  }
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = t.sites[i].intensity;
  const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *mn_it, hi = *mx_it;
  if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(hi)))) {
    c.warning = "intensities are identical; species left unclassified";
    return c;
  }

  const std::size_t bins = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(std::sqrt(n))));
  const double width = (hi - lo) / static_cast<double>(bins);
  c.counts.assign(bins, 0.0);
  c.bin_centres.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) c.bin_centres[b] = lo + (b + 0.5) * width;
  for (double x : v) c.counts[std::min(bins - 1, static_cast<std::size_t>((x - lo) / width))] += 1.0;

  // 2-means split for the starting point.
  double m1 = lo, m2 = hi;
  for (int it = 0; it < 100; ++it) {
    double s1 = 0, s2 = 0;
    std::size_t c1 = 0, c2 = 0;
    const double cut = 0.5 * (m1 + m2);
    for (double x : v) {
      if (x < cut) {
        s1 += x;
        ++c1;
      } else {
        s2 += x;
        ++c2;
      }
    }
    if (!c1 || !c2) break;
    const double n1 = s1 / c1, n2 = s2 / c2;
    if (n1 == m1 && n2 == m2) break;
    m1 = n1;
    m2 = n2;
  }
  double sd1 = 0, sd2 = 0, a1 = 0, a2 = 0;
  {
    const double cut = 0.5 * (m1 + m2);
    std::size_t c1 = 0, c2 = 0;
    for (double x : v) {
      if (x < cut) {
        sd1 += (x - m1) * (x - m1);
        ++c1;
      } else {
        sd2 += (x - m2) * (x - m2);
        ++c2;
      }
    }
    sd1 = std::max(std::sqrt(sd1 / std::max<std::size_t>(c1, 1)), width);
    sd2 = std::max(std::sqrt(sd2 / std::max<std::size_t>(c2, 1)), width);
    a1 = c1 * width / (sd1 * std::sqrt(2 * std::numbers::pi));
    a2 = c2 * width / (sd2 * std::sqrt(2 * std::numbers::pi));
  }

  // Least-squares fit of a1·N(m1, s1) + a2·N(m2, s2) (peak heights) to the bin counts.
  Eigen::VectorXd q(6);
  q << a1, m1, sd1, a2, m2, sd2;
  const auto eval = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(static_cast<Eigen::Index>(bins));
    if (J) J->resize(static_cast<Eigen::Index>(bins), 6);
    for (std::size_t b = 0; b < bins; ++b) {
      const double x = c.bin_centres[b];
      double model = 0.0;
      for (int g = 0; g < 2; ++g) {
        const double a = p[3 * g], m = p[3 * g + 1], s = p[3 * g + 2];
        const double u = (x - m) / s;
        const double e = std::exp(-0.5 * u * u);
        model += a * e;
        if (J) {
          (*J)(b, 3 * g) = e;
          (*J)(b, 3 * g + 1) = a * e * u / s;
          (*J)(b, 3 * g + 2) = a * e * u * u / s;
        }
      }
      r[b] = model - c.counts[b];
    }
  };
  const auto admissible = [&](const Eigen::VectorXd& p) {
    return p[0] > 0 && p[3] > 0 && p[2] > 1e-3 * width && p[5] > 1e-3 * width;
  };
  levenberg_marquardt(q, eval, admissible, 200);
  if (q[1] > q[4]) {
    std::swap(q[0], q[3]);
    std::swap(q[1], q[4]);
    std::swap(q[2], q[5]);
  }
  c.mean_low = q[1];
  c.sigma_low = std::abs(q[2]);
  c.mean_high = q[4];
  c.sigma_high = std::abs(q[5]);
  const double pooled = std::sqrt(0.5 * (c.sigma_low * c.sigma_low + c.sigma_high * c.sigma_high));
  if (!q.allFinite() || c.mean_high - c.mean_low < pooled) {
    c.warning = "intensity histogram is unimodal; species left unclassified";
    std::cerr << "warning: " << c.warning << '\n';
    return c;
  }

  // Intersection of the two fitted curves between the means, by bisection on the
  // log ratio; the midpoint if one curve dominates the whole interval.
  const auto diff = [&](double x) {
    const double u1 = (x - q[1]) / q[2], u2 = (x - q[4]) / q[5];
    return (std::log(q[0]) - 0.5 * u1 * u1) - (std::log(q[3]) - 0.5 * u2 * u2);
  };
  double a = c.mean_low, b = c.mean_high;
  if (diff(a) > 0 && diff(b) < 0) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      (diff(mid) > 0 ? a : b) = mid;
    }
    c.threshold = 0.5 * (a + b);
  } else {
    c.threshold = 0.5 * (c.mean_low + c.mean_high);
  }
  c.bimodal = true;
  for (auto& s : t.sites) s.species = s.intensity < c.threshold ? Species::Light : Species::Heavy;
  return c;
}

namespace {

// Hungarian algorithm on a square cost matrix; returns the column of each row.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double atom_dist(const Atom& a, const Atom& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

}  // namespace

TraceReport score(const AtomList& traced, const AtomList& truth, double match_radius, MatchMode mode) {
  if (truth.empty()) throw ConfigError("score needs a non-empty truth list");
  if (!(match_radius > 0.0)) throw ConfigError("match radius must be positive");
  TraceReport r;
  r.traced = traced.size();
  r.truth = truth.size();
  r.truth_match.assign(truth.size(), -1);

  if (mode == MatchMode::Greedy) {
    struct Pair {
      double d;
      std::size_t t, s;
    };
    std::vector<Pair> pairs;
    for (std::size_t s = 0; s < traced.size(); ++s)
      for (std::size_t t = 0; t < truth.size(); ++t) {
        const double d = atom_dist(traced[s], truth[t]);
        if (d <= match_radius) pairs.push_back({d, t, s});
      }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      return std::tie(a.d, a.t, a.s) < std::tie(b.d, b.t, b.s);
    });
    std::vector<char> used(traced.size(), 0);
    for (const auto& p : pairs)
      if (r.truth_match[p.t] < 0 && !used[p.s]) {
        r.truth_match[p.t] = static_cast<int>(p.s);
        used[p.s] = 1;
      }
  } else {
    // Out-of-range and padding entries share one large cost, so the optimum first
    // maximizes the number of matches and then minimizes their total distance.
    const std::size_t n = std::max(traced.size(), truth.size());
    const double big = 1e6 * (1.0 + match_radius * static_cast<double>(n));
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, big));
    for (std::size_t t = 0; t < truth.size(); ++t)
      for (std::size_t s = 0; s < traced.size(); ++s) {
        const double d = atom_dist(traced[s], truth[t]);
        if (d <= match_radius) cost[t][s] = d;
      }
    const auto assign = hungarian(cost);
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const int s = assign[t];
      if (s >= 0 && static_cast<std::size_t>(s) < traced.size() && cost[t][s] < big)
        r.truth_match[t] = s;
    }
  }

  double sx = 0, sy = 0, sz = 0, sum = 0, sum2 = 0;
  std::size_t species_ok = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const int s = r.truth_match[t];
    if (s < 0) continue;
    const Atom& a = traced[static_cast<std::size_t>(s)];
    const Atom& b = truth[t];
    const double dx = (a.x - b.x) * 100, dy = (a.y - b.y) * 100, dz = (a.z - b.z) * 100;
    const double e = std::sqrt(dx * dx + dy * dy + dz * dz);
    r.errors_pm.push_back(e);
    sum += e;
    sum2 += e * e;
    sx += dx * dx;
    sy += dy * dy;
    sz += dz * dz;
    if (a.species == b.species) ++species_ok;
    ++r.matched;
  }
  const double m = static_cast<double>(r.matched);
  if (r.matched) {
    r.position_error_mean_pm = sum / m;
    r.position_error_rms_pm = std::sqrt(sum2 / m);
    r.sigma_x_pm = std::sqrt(sx / m);
    r.sigma_y_pm = std::sqrt(sy / m);
    r.sigma_z_pm = std::sqrt(sz / m);
    r.correct_species = 100.0 * static_cast<double>(species_ok) / m;
  }
  r.atoms_found = 100.0 * m / static_cast<double>(truth.size());
  r.false_positives = 100.0 * static_cast<double>(traced.size() - r.matched) / static_cast<double>(truth.size());
  return r;
}

std::vector<Tetrahedron> find_tetrahedra(const AtomList& atoms, double bond, double tol) {
  std::vector<Tetrahedron> out;
  const double lo = bond - tol, hi = bond + tol;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> near;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      if (j == i) continue;
      const double d = atom_dist(atoms[i], atoms[j]);
      if (d >= lo && d <= hi) near.emplace_back(d, j);
    }
    if (near.size() < 4) continue;
    std::partial_sort(near.begin(), near.begin() + 4, near.end());
    Tetrahedron t{i, {near[0].second, near[1].second, near[2].second, near[3].second}};
    out.push_back(t);
  }
  return out;
}

void write_traced_csv(const std::string& path, const TracedAtoms& t) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "x_A,y_A,z_A,species,intensity,width\n";
  char buf[256];
  for (const auto& a : t.to_atoms()) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%s,%.17g,%.17g\n", a.x, a.y, a.z,
                  to_string(a.species).c_str(), a.amplitude, a.width);
    out << buf;
  }
}

AtomList read_traced_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line == "x_A,y_A,z_A,species,amplitude,width") {
    in.close();
    return read_atoms_csv(path);
  }
  if (line != "x_A,y_A,z_A,species,intensity,width")
    throw ConfigError(path + ": unexpected traced-atom CSV header");
  AtomList atoms;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[6];
    for (auto& s : f)
      if (!std::getline(ss, s, ',')) throw ConfigError(path + ": short row: " + line);
    try {
      atoms.push_back({std::stod(f[0]), std::stod(f[1]), std::stod(f[2]), parse_species(f[3]),
                       std::stod(f[4]), std::stod(f[5])});
    } catch (const std::logic_error&) {
      throw ConfigError(path + ": bad row: " + line);
    }
  }
  return atoms;
}

}  // namespace pcaet
