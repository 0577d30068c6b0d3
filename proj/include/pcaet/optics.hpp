#pragma once

#include <optional>
#include <vector>

#include "pcaet/types.hpp"

namespace pcaet {

/// Microscope transfer function H(q), stored in DFT order on a GridSpec.
struct TransferFunction {
  GridSpec grid;
  std::optional<double> aperture_qmax;  // Å⁻¹
  std::vector<Complex> values;

  /// H ≡ 1.
  static TransferFunction identity(const GridSpec& g);
  /// Hard circular aperture: 1 for ‖q‖ ≤ qmax, 0 outside.
  static TransferFunction aperture(const GridSpec& g, double qmax);
  /// Default microscope: identity inside the 2/3-Nyquist band when
  /// `anti_alias` is set, plain identity otherwise.
  static TransferFunction standard(const GridSpec& g, bool anti_alias = true);
  /// Arbitrary values; throws ConfigError if |H| > 1 anywhere or a cutoff is violated.
  static TransferFunction from_values(const GridSpec& g, std::vector<Complex> values,
                                      std::optional<double> aperture_qmax = std::nullopt);
};

/// Free-space (angular spectrum) propagation by dz Å. Frequencies beyond 1/λ are
/// zeroed, so the operator is unitary on its band and propagate(·,-dz) is its adjoint.
WaveField propagate(const WaveField& f, double dz);

/// Multiply the spectrum by H.
WaveField apply_ctf(const WaveField& f, const TransferFunction& h);
/// Multiply the spectrum by conj(H).
WaveField apply_ctf_adjoint(const WaveField& f, const TransferFunction& h);

/// Fourier-space propagation kernel exp[i2π·dz·√(1/λ²−q²)], optionally masked to
/// the 2/3-Nyquist band. Stored in DFT order with the 1/(nx·ny) normalization
/// folded in, ready to be applied between an unnormalized forward/inverse pair.
class Propagator {
 public:
  Propagator(const GridSpec& g, double dz, bool band_limit);

  const GridSpec& grid() const { return grid_; }
  double dz() const { return dz_; }

  /// In-place P_dz (or its adjoint P_-dz when `adjoint` is true).
  void apply(std::vector<Complex>& field, bool adjoint = false) const;
  /// In-place P_dz followed by the pointwise spectral factor `h` (or the adjoint chain).
  void apply_with(std::vector<Complex>& field, const std::vector<Complex>& h,
                  bool adjoint = false) const;

 private:
  GridSpec grid_;
  double dz_;
  std::vector<Complex> kernel_;
};

/// exp[i2π·dz·(√(1/λ²−q²))] evaluated without losing the small q-dependent part
/// to the large on-axis phase.
Complex propagation_phase(double dz, double lambda, double q2);

}  // namespace pcaet
