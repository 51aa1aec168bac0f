#pragma once

#include <cstdint>
#include <vector>

#include "spectrack/spectral.hpp"
#include "spectrack/volume.hpp"

namespace spectrack {

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 100;
    int batch = 0;  // voxels per gradient step; 0 = full batch
    double l2_penalty = 0.0;
    std::uint64_t seed = 0;
};

// Mean over voxels of -[g ln p + (1-g) ln(1-p)], with p clipped to
// [1e-7, 1 - 1e-7]. gt must be binary (every voxel exactly 0 or 1).
double bce_loss(const VideoVolume& pred, const VideoVolume& gt);

struct CombinerGradient {
    std::vector<double> w;
    double b = 0.0;
};

// Analytic gradient of the BCE of the sigmoid combiner:
//   dL/dw_i = mean((sigmoid(z) - g) * S_i) + 2 * l2_penalty * w_i
//   dL/db   = mean(sigmoid(z) - g)
// where z = sum_i w_i S_i + b per voxel.
CombinerGradient combiner_gradient(const ChannelStack& cs, const CombinerWeights& cw,
                                   const VideoVolume& gt, double l2_penalty = 0.0);

// BCE of the combiner evaluated fully in double precision (no float32
// round-trip), plus l2_penalty * sum(w^2) when the penalty is active.
// This is the exact objective the analytic gradient differentiates, which
// keeps finite-difference checks clean at small step sizes.
double combiner_loss(const ChannelStack& cs, const CombinerWeights& cw,
                     const VideoVolume& gt, double l2_penalty = 0.0);

struct TrainSample {
    ChannelStack channels;
    VideoVolume gt;
};

struct TrainResult {
    CombinerWeights weights;
    // loss_history[0] is the initial loss; entry k the loss after epoch k.
    std::vector<double> loss_history;
};

// w = 1/C each, b = 0: the initial combiner is a softened average.
CombinerWeights default_init(int channels);

// Plain gradient descent on the combiner parameters. Full batch when
// cfg.batch == 0; otherwise each sample contributes one step computed on a
// seeded random voxel subset. Deterministic for a fixed seed and dataset.
// Returns the weights with the lowest recorded loss (never worse than the
// starting point). Throws DivergenceError (with the epoch) if the loss
// turns non-finite.
TrainResult train_combiner(const std::vector<TrainSample>& dataset, const TrainConfig& cfg,
                           const CombinerWeights& init);

}  // namespace spectrack
