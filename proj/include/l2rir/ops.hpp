#pragma once

#include <vector>

#include "l2rir/autograd.hpp"

namespace l2rir::nn {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);

Var leaky_relu(const Var& x, double slope);
// Gradient passes where lo <= x <= hi.
Var clamp(const Var& x, double lo, double hi);

// x: N x Cin x H x W, weight: Cout x Cin x k x k, bias: 1 x Cout x 1 x 1 or
// undefined. Zero padding.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);

// Per-sample, per-channel normalization with affine gamma/beta
// (1 x C x 1 x 1).
Var instance_norm(const Var& x, const Var& gamma, const Var& beta, double eps);

Var concat_channels(const std::vector<Var>& parts);
Var slice_channels(const Var& x, int begin, int count);
Var concat_batch(const std::vector<Var>& parts);
Var slice_batch(const Var& x, int begin, int count);

Var upsample_nearest2x(const Var& x);
Var max_pool2x2(const Var& x);
Var global_avg_pool(const Var& x);

// Orthonormal real 2-D FFT over H x W per channel. Output is
// N x 2C x H x (W/2+1): real parts in channels [0, C), imaginary in [C, 2C).
// Throws DimensionError for odd H or W.
Var rfft2(const Var& x);
// Inverse of rfft2 for an output of width `width`.
Var irfft2(const Var& spectrum, int width);

// Scalar mean(|a - b|).
Var mean_abs_diff(const Var& a, const Var& b);
// Scalar mean over all elements.
Var mean(const Var& x);

}  // namespace l2rir::nn
