#pragma once

#include <complex>
#include <span>

namespace l2rir::fft {

using Complex = std::complex<double>;

// Orthonormal 2-D DFTs over a row-major height x width grid (scaled by
// 1/sqrt(height*width) in both directions, so the pair is unitary). Backed by
// FFTW; plans are cached per size.
void forward(std::span<const Complex> in, std::span<Complex> out, int height, int width);
void inverse(std::span<const Complex> in, std::span<Complex> out, int height, int width);

// Half spectrum of a real plane: height x (width/2 + 1) bins.
int half_width(int width) noexcept;

void rfft2(std::span<const double> in, std::span<Complex> half, int height, int width);

// Real inverse. Columns l > width/2 are rebuilt as conj(Z[(-k) mod H, W-l]);
// the result is the real part of the unitary inverse.
void irfft2(std::span<const Complex> half, std::span<double> out, int height, int width);

}  // namespace l2rir::fft
