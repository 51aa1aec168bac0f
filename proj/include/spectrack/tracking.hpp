#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "spectrack/spectral.hpp"
#include "spectrack/volume.hpp"

namespace spectrack {

// Renders a box as a single-frame soft mask: ones inside, zeros outside,
// then 2D Gaussian feathering (feather_sigma = 0 keeps the hard box).
VideoVolume bbox_to_softmask(const BBox& b, int height, int width, double feather_sigma);

// Binarizes a single-frame mask at `threshold` (strictly greater), labels
// 4-connected components, and returns the tight box of the largest one.
// Empty result when no voxel passes.
std::optional<BBox> extract_bbox(const VideoVolume& mask, double threshold = 0.75);

// Per-voxel median across the channel masks of one frame.
VideoVolume median_mask(const std::vector<VideoVolume>& frame_channels);

// Online tracker state: a ring buffer of the last `params.window` frames of
// per-channel masks, plus the carried-forward box.
struct TrackerState {
    std::deque<std::vector<VideoVolume>> window;  // oldest -> newest
    SpectralParams params;
    CombinerWeights weights;
    double threshold = 0.75;
    BBox last_box;
    int frame_height = 0;
    int frame_width = 0;
};

struct StepResult {
    BBox box;
    bool extracted = false;  // false = empty prediction, box is the fallback
};

// Seeds the state with the ground-truth box and the first frame's channels.
TrackerState init_tracker(const SpectralParams& params, const CombinerWeights& weights,
                          double threshold, const BBox& gt_init,
                          const std::vector<VideoVolume>& frame0_channels);

// Pushes one frame of channel masks into the window (evicting the oldest
// beyond the window length), refines over the window, extracts a box from
// the newest refined slice. On an empty extraction (or a collapsed spectral
// signal) the last box carries forward and `extracted` is false.
StepResult track_step(TrackerState& state, const std::vector<VideoVolume>& frame_channels);

// One-pass protocol over a whole sequence: frame 0 reports gt_init, later
// frames go through track_step. Empty predictions are recorded as absent.
Trajectory track_sequence(const std::vector<std::vector<VideoVolume>>& channels_per_frame,
                          const BBox& gt_init, const CombinerWeights& weights,
                          const SpectralParams& params, double threshold = 0.75);

// Basic ensemble baseline: per-pixel median of the channels, no learning,
// no refinement. Same one-pass protocol and fallback rules.
Trajectory track_sequence_median(const std::vector<std::vector<VideoVolume>>& channels_per_frame,
                                 const BBox& gt_init, double threshold = 0.75);

// Ablation: the learned combiner alone, per frame, without the spectral
// refinement.
Trajectory track_sequence_combine_only(
    const std::vector<std::vector<VideoVolume>>& channels_per_frame, const BBox& gt_init,
    const CombinerWeights& weights, double threshold = 0.75);

}  // namespace spectrack
