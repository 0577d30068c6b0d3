#include "pcaet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "pcaet/backprop.hpp"
#include "pcaet/prox.hpp"

namespace pcaet {

RegKind parse_reg_kind(const std::string& s) {
  if (s == "positivity" || s == "positivity-only") return RegKind::Positivity;
  if (s == "lasso") return RegKind::Lasso;
  if (s == "tv") return RegKind::Tv;
  throw ConfigError("unknown regularization kind: " + s);
}

std::string to_string(RegKind k) {
  switch (k) {
    case RegKind::Positivity: return "positivity";
    case RegKind::Lasso: return "lasso";
    case RegKind::Tv: return "tv";
  }
  return "unknown";
}

void SolverConfig::validate(std::size_t n_tilts) const {
  if (step_size < 0.0 || !std::isfinite(step_size)) throw ConfigError("step size must be positive");
  if (!(reg_weight >= 0.0)) throw ConfigError("reg_weight must be non-negative");
  if (n_b < 1) throw ConfigError("n_b must be at least 1");
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (tv_inner_iters < 1) throw ConfigError("tv_inner_iters must be at least 1");
  if (nz < 0) throw ConfigError("nz must be non-negative");
  if (!tilt_order.empty()) {
    std::vector<std::size_t> sorted = tilt_order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      if (sorted[i] != i || sorted.size() != n_tilts)
        throw ConfigError("tilt_order must be a permutation of the tilt indices");
  }
}

double nesterov_next(double t) { return (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0; }

PotentialVolume apply_prox(const PotentialVolume& u, RegKind kind, double threshold,
                           int tv_inner_iters) {
  switch (kind) {
    case RegKind::Positivity: return prox_positivity(u);
    case RegKind::Lasso: return prox_lasso(u, threshold);
    case RegKind::Tv: return prox_tv(u, threshold, tv_inner_iters);
  }
  return prox_positivity(u);
}

Reconstructor::Reconstructor(const TiltSeries& series, const SolverConfig& cfg,
                             const InteractionParams& p, const TransferFunction& h)
    : series_(series),
      cfg_(cfg),
      params_(p),
      model_(series.grid, p, cfg.n_b, series.plan.defoci, h, cfg.anti_alias),
      nz_(cfg.nz > 0 ? cfg.nz : series.grid.nx) {
  series.validate();
  cfg.validate(series.plan.tilt_angles.size());
  amplitudes_.reserve(series.images.size());
  for (std::size_t i = 0; i < series.plan.tilt_angles.size(); ++i) {
    for (std::size_t j = 0; j < series.plan.defoci.size(); ++j) {
      Image a = series.normalized(i, j);
      for (double& v : a.values) v = std::sqrt(v);
      amplitudes_.push_back(std::move(a));
    }
  }
  order_ = cfg.tilt_order;
  if (order_.empty()) {
    order_.resize(series.plan.tilt_angles.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }
  const auto& g = series.grid;
  state_.u = PotentialVolume(g.nx, g.ny, nz_, g.pitch);
  state_.v_prev = state_.u;
  state_.v_curr = state_.u;
  step_ = cfg.step_size;
}

void Reconstructor::set_step_size(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("step size must be positive");
  step_ = eta;
}

double Reconstructor::nominal_step_size() const {
  const double nf = static_cast<double>(series_.plan.defoci.size());
  return 1.0 / (params_.sigma * params_.sigma * nz_ * nf);
}

double Reconstructor::sweep(PotentialVolume& u) const {
  const std::size_t nf = series_.plan.defoci.size();
  const std::size_t n = series_.grid.size();
  double cost = 0.0;
  std::vector<WaveField> residuals(nf);
  for (std::size_t i : order_) {
    const double theta = series_.plan.tilt_angles[i];
    const BinnedVolume w = bin_slices(rotate(u, theta), cfg_.n_b);
    const MultisliceResult fwd = model_.forward(w);
    for (std::size_t j = 0; j < nf; ++j) {
      const Image& amp = amplitudes_[i * nf + j];
      residuals[j] = residual(fwd.exits[j], amp);
      cost += exit_cost(fwd.exits[j], amp);
    }
    const GradientSlabs g = model_.backward(residuals, fwd, w);
    BinnedVolume real_grad(w.nx, w.ny, w.nz_b, w.n_b, w.pitch);
    for (int m = 0; m < w.nz_b; ++m) {
      double* dst = real_grad.slab(m);
      for (std::size_t k = 0; k < n; ++k) dst[k] = g[m][k].real();
    }
    const PotentialVolume update = rotate_adjoint(bin_adjoint(real_grad, cfg_.n_b, nz_), theta);
    for (std::size_t k = 0; k < u.size(); ++k) u.values[k] -= step_ * update.values[k];
  }
  return cost;
}

double Reconstructor::iterate() {
  if (!(step_ > 0.0)) throw ConfigError("step size not set");
  const double cost = sweep(state_.u);
  if (!std::isfinite(cost)) throw NumericalError("non-finite cost; step size too large");
  state_.v_curr =
      apply_prox(state_.u, cfg_.reg_kind, step_ * cfg_.reg_weight, cfg_.tv_inner_iters);
  const double t_next = nesterov_next(state_.t);
  const double beta = (state_.t - 1.0) / t_next;
  for (std::size_t k = 0; k < state_.u.size(); ++k)
    state_.u.values[k] =
        state_.v_curr.values[k] + beta * (state_.v_curr.values[k] - state_.v_prev.values[k]);
  state_.v_prev = state_.v_curr;
  state_.t = t_next;
  ++state_.k;
  state_.cost_history.push_back(cost);
  return cost;
}

ReconstructionResult Reconstructor::run() {
  if (!(step_ > 0.0)) step_ = bracket_step_size();
  while (state_.k < cfg_.max_iter) {
    const double cost = iterate();
    const double first = state_.cost_history.front();
    if (state_.k > 1 && cost > cfg_.divergence_factor * first)
      throw NumericalError("step size too large: cost grew beyond " +
                           std::to_string(cfg_.divergence_factor) + "x its initial value");
  }
  if (!cfg_.cost_log_path.empty()) {
    std::ofstream out(cfg_.cost_log_path);
    if (!out) throw ConfigError("cannot write cost log " + cfg_.cost_log_path);
    out << "iteration,cost\n";
    out.precision(17);
    for (std::size_t k = 0; k < state_.cost_history.size(); ++k)
      out << k + 1 << ',' << state_.cost_history[k] << '\n';
  }
  return {state_.v_curr, state_.cost_history, step_};
}

double Reconstructor::evaluate_cost(const PotentialVolume& v) const {
  const std::size_t nf = series_.plan.defoci.size();
  double cost = 0.0;
  for (std::size_t i = 0; i < series_.plan.tilt_angles.size(); ++i) {
    const BinnedVolume w = bin_slices(rotate(v, series_.plan.tilt_angles[i]), cfg_.n_b);
    const MultisliceResult fwd = model_.forward(w);
    for (std::size_t j = 0; j < nf; ++j) cost += exit_cost(fwd.exits[j], amplitudes_[i * nf + j]);
  }
  return cost;
}

double Reconstructor::bracket_step_size() const {
  const double nominal = nominal_step_size();
  double best_eta = nominal;
  double best_cost = INFINITY;
  // 1/L drifts under TV with momentum over long runs; half of it does not
  for (double factor : {0.125, 0.25, 0.5}) {
    Reconstructor trial(series_, cfg_, params_, model_.transfer());
    trial.set_step_size(nominal * factor);
    trial.iterate();
    const double c = trial.evaluate_cost(trial.state().v_curr);
    if (c < best_cost) {
      best_cost = c;
      best_eta = nominal * factor;
    }
  }
  return best_eta;
}

ReconstructionResult reconstruct(const TiltSeries& series, const SolverConfig& cfg,
                                 const InteractionParams& p, const TransferFunction& h) {
  Reconstructor r(series, cfg, p, h);
  return r.run();
}

}  // namespace pcaet
