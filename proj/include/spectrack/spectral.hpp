#pragma once

#include <cstddef>
#include <vector>

#include "spectrack/filtering.hpp"
#include "spectrack/volume.hpp"

namespace spectrack {

// Knobs of the spectral refinement: alpha scales the pairwise penalty
// (enters as 1/alpha), p exponentiates the unary map, n_iter is the number
// of spectral iterations, window the sliding-window length in frames.
struct SpectralParams {
    double alpha = 1.0;
    double p = 1.0;
    int n_iter = 1;
    int window = 5;
    GaussianKernel3D kernel;
};

// Throws ValidationError unless alpha > 0, p >= 0, n_iter >= 1, window >= 1
// and the kernel is well formed.
void validate_params(const SpectralParams& params);

// Per-channel weights plus bias of the sigmoid combiner. One shared set
// serves both the unary and the pairwise map.
struct CombinerWeights {
    std::vector<double> w;
    double b = 0.0;
};

// sigmoid(sum_i w_i * S_i + b) per voxel. Output is strictly inside (0, 1).
VideoVolume combine_channels(const ChannelStack& cs, const CombinerWeights& cw);

// One power-iteration step expressed through 3D filtering:
//   X <- normalized( S^p (1/alpha - F^2) G*(S^p X)
//                    - S^p G*(F^2 S^p X) + 2 S^p F G*(F S^p X) )
// with G* the Gaussian convolution and all products element-wise.
// Throws SpectralCollapseError when the pre-normalization result is ~0.
VideoVolume spectral_iteration(const VideoVolume& x, const VideoVolume& s,
                               const VideoVolume& f, const SpectralParams& params);

// Full refinement: S = F = combine_channels(cs, cw); X0 = S; n_iter spectral
// iterations; then each frame slice is rescaled by its max (slices carrying
// no concentrated signal are left untouched so a dead mask stays dead) and
// the volume is clamped to [0, 1].
VideoVolume refine(const ChannelStack& cs, const CombinerWeights& cw,
                   const SpectralParams& params);

// Explicit voxel-graph adjacency, materialized only for testing:
//   M[i][j] = S_i^p S_j^p G(i, j) (1/alpha - (F_i - F_j)^2)
// with G(i, j) the product of per-axis kernel weights at offset j - i and
// zero outside the kernel support.
struct DenseAdjacency {
    std::size_t n = 0;
    std::vector<double> entries;  // row-major n x n

    double at(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return entries[i * n + j]; }
};

// Guarded at 4096 nodes; throws ValidationError beyond that.
DenseAdjacency build_dense_adjacency(const VideoVolume& s, const VideoVolume& f,
                                     const SpectralParams& params);

// Dense power-iteration step: l2_normalize(M x). The reference the filtered
// iteration is checked against.
VideoVolume oracle_step(const VideoVolume& x, const DenseAdjacency& m);

}  // namespace spectrack
