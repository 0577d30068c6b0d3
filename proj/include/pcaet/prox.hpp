#pragma once

#include "pcaet/volume.hpp"

namespace pcaet {

/// Projection onto real, non-negative volumes.
PotentialVolume prox_positivity(const PotentialVolume& v);

/// argmin ½‖x−v‖² + threshold·‖x‖₁ over x ≥ 0, i.e. max(v − threshold, 0).
PotentialVolume prox_lasso(const PotentialVolume& v, double threshold);

/// Approximate argmin ½‖x−v‖² + weight·TV(x) over x ≥ 0 with isotropic 3D TV
/// (forward differences, Neumann boundary), by `inner_iters` fast gradient
/// projection steps on the dual. weight = 0 reduces to prox_positivity exactly.
PotentialVolume prox_tv(const PotentialVolume& v, double weight, int inner_iters = 20);

/// Isotropic total variation Σ‖∇x‖ with the same discretization as prox_tv.
double total_variation(const PotentialVolume& v);

}  // namespace pcaet
