#pragma once

#include <vector>

#include "spectrack/volume.hpp"

namespace spectrack {

// Truncated separable 3D Gaussian. One sigma/radius pair for the time axis,
// one shared by both spatial axes. Per-axis weight lists are normalized to
// sum 1; the 3D tap weight is the product of the three per-axis weights.
struct GaussianKernel3D {
    double sigma_t = 1.0;
    double sigma_s = 1.0;
    int radius_t = 0;
    int radius_s = 0;
    std::vector<double> weights_t;
    std::vector<double> weights_y;
    std::vector<double> weights_x;
};

// w[d] ~ exp(-d^2 / (2 sigma^2)) for |d| <= radius, normalized to sum 1.
// Throws ValidationError for non-positive sigma or negative radius.
GaussianKernel3D build_kernel(double sigma_t, double sigma_s, int radius_t, int radius_s);

// Radii default to ceil(3 sigma) per axis.
GaussianKernel3D build_kernel(double sigma_t, double sigma_s);

// Separable 3D convolution, computed as three sequential 1D passes
// (t, then y, then x). Taps falling outside the volume are dropped
// (zero padding); per-axis weights are NOT renormalized at borders, so the
// result is identical to the dense triple sum over in-range neighbours.
// Throws ValidationError on non-finite input or a malformed kernel.
VideoVolume convolve3d(const VideoVolume& v, const GaussianKernel3D& k);

namespace detail {

// Double-precision core shared by convolve3d and the spectral iteration.
// `buf` holds the input and receives the output; `tmp` is scratch of the
// same size.
void convolve3d_inplace(std::vector<double>& buf, std::vector<double>& tmp,
                        int frames, int height, int width, const GaussianKernel3D& k);

void validate_kernel(const GaussianKernel3D& k);

}  // namespace detail

}  // namespace spectrack
