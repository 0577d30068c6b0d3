#pragma once

#include <span>
#include <vector>

#include "pcaet/forward_model.hpp"

namespace pcaet {

/// Complex per-slab gradient g_m. Only Re(g_m) is a derivative with respect to
/// the real potential: ∂e²/∂W_m = 2·Re(g_m).
using GradientSlabs = std::vector<std::vector<Complex>>;

/// Σ_images ‖√I − √Î‖² over matching lists of unit-background images.
double amplitude_cost(std::span<const Image> measured, std::span<const Image> predicted);

/// Same cost against a measured series (normalized here) with predicted images in
/// tilt-major order.
double amplitude_cost(const TiltSeries& measured, std::span<const Image> predicted);

inline constexpr double kResidualEpsilon = 1e-12;

/// r = ψ − √I·ψ/|ψ|; where |ψ| < 1e-12 the unit phase factor is taken as 1.
WaveField residual(const WaveField& exit, const Image& measured_amplitude);

/// Σ_pixels (|ψ| − √I)², equal to ‖residual(ψ, √I)‖².
double exit_cost(const WaveField& exit, const Image& measured_amplitude);

/// Error backpropagation: refocus each residual through H† and P_−Δf, then walk the
/// slabs from exit to entrance, emitting g_m = −iσ·conj(t_m)·conj(ψ_m)·φ and
/// carrying φ ← conj(t_m)·φ.
GradientSlabs backpropagate(std::span<const WaveField> residuals, const MultisliceResult& fwd,
                            const BinnedVolume& w, const InteractionParams& p,
                            std::span<const double> defoci, const TransferFunction& h,
                            bool anti_alias = true);

}  // namespace pcaet
