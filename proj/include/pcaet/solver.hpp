#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pcaet/forward_model.hpp"
#include "pcaet/volume.hpp"

namespace pcaet {

enum class RegKind { Positivity, Lasso, Tv };

RegKind parse_reg_kind(const std::string& s);
std::string to_string(RegKind k);

struct SolverConfig {
  double step_size = 0.0;  // gradient step η; 0 selects it by bracketing
  RegKind reg_kind = RegKind::Tv;
  double reg_weight = 0.0;  // regularization strength; prox threshold is η·reg_weight
  int n_b = 1;
  int max_iter = 40;
  int tv_inner_iters = 20;
  bool anti_alias = true;
  int nz = 0;  // reconstructed depth in voxels; 0 means nz = nx
  std::vector<std::size_t> tilt_order;  // empty: acquisition order
  double divergence_factor = 10.0;
  std::string cost_log_path;

  void validate(std::size_t n_tilts) const;
};

struct SolverState {
  PotentialVolume u;       // momentum iterate
  PotentialVolume v_prev;  // prox output of the previous outer iteration
  PotentialVolume v_curr;
  double t = 1.0;
  int k = 0;
  std::vector<double> cost_history;
};

struct ReconstructionResult {
  PotentialVolume volume;
  std::vector<double> cost_history;
  double step_size = 0.0;
};

/// t ← (1 + √(1 + 4t²)) / 2.
double nesterov_next(double t);

/// Proximal step applied once per outer iteration.
PotentialVolume apply_prox(const PotentialVolume& u, RegKind kind, double threshold,
                           int tv_inner_iters);

/// Incremental proximal-gradient reconstruction with Nesterov momentum. Each outer
/// iteration sweeps the tilts in order, updating U after every tilt with the
/// backpropagated gradient pulled back through the binning and rotation adjoints,
/// then applies the prox and the momentum extrapolation.
class Reconstructor {
 public:
  Reconstructor(const TiltSeries& series, const SolverConfig& cfg, const InteractionParams& p,
                const TransferFunction& h);

  const SolverState& state() const { return state_; }
  double step_size() const { return step_; }
  void set_step_size(double eta);

  /// One full outer iteration; returns the amplitude cost accumulated during the sweep.
  double iterate();
  /// Runs until max_iter, enforcing the divergence guard, and writes the cost log.
  ReconstructionResult run();

  /// Amplitude cost of a volume against the measured series (forward passes only).
  double evaluate_cost(const PotentialVolume& v) const;

  /// Heuristic step size 1/(σ²·nz·N_f) from the operator norm of a weak-phase projection.
  double nominal_step_size() const;
  /// Picks the best of {⅛, ¼, ½}·nominal by the cost after one outer iteration.
  double bracket_step_size() const;

 private:
  double sweep(PotentialVolume& u) const;

  const TiltSeries& series_;
  SolverConfig cfg_;
  InteractionParams params_;
  MultisliceModel model_;
  std::vector<Image> amplitudes_;  // √(normalized measurement), tilt-major
  std::vector<std::size_t> order_;
  int nz_;
  double step_ = 0.0;
  SolverState state_;
};

/// Reconstruct with the given configuration (step size bracketed if unset).
ReconstructionResult reconstruct(const TiltSeries& series, const SolverConfig& cfg,
                                 const InteractionParams& p, const TransferFunction& h);

}  // namespace pcaet
