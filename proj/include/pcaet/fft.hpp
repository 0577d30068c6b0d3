#pragma once

#include <span>

#include "pcaet/types.hpp"

namespace pcaet {

enum class FftDirection { Forward, Inverse };

/// Unnormalized in-place 2D DFT of an ny×nx row-major array (x fastest).
/// Forward uses the e^{-i} kernel. Plans are cached and shared between threads.
void fft2_inplace(std::span<Complex> data, int nx, int ny, FftDirection dir);

/// Unnormalized in-place 3D DFT of an nz×ny×nx array (x fastest).
void fft3_inplace(std::span<Complex> data, int nx, int ny, int nz, FftDirection dir);

/// Unitary forward transform: spectrum on the same grid, scaled by 1/√(nx·ny).
WaveField forward_fft(const WaveField& f);

/// Unitary inverse transform, the exact adjoint of forward_fft.
WaveField inverse_fft(const WaveField& spectrum);

}  // namespace pcaet
