#include "spectrack/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "spectrack/errors.hpp"
#include "spectrack/filtering.hpp"

namespace spectrack {

namespace {

void require_frame_channels(const std::vector<VideoVolume>& frame_channels) {
    if (frame_channels.empty()) {
        throw ValidationError("a frame needs at least one channel mask");
    }
    for (const VideoVolume& c : frame_channels) {
        if (c.frames() != 1) {
            throw ValidationError("per-frame channel masks must have exactly one frame");
        }
        if (!c.same_shape(frame_channels[0])) {
            throw ValidationError("channel masks of one frame must share one shape");
        }
    }
}

// Stacks the windowed per-frame channel masks into whole-window volumes,
// one per channel.
ChannelStack window_stack(const std::deque<std::vector<VideoVolume>>& window) {
    const auto frames = static_cast<int>(window.size());
    const std::size_t channels = window.front().size();
    const int height = window.front()[0].height();
    const int width = window.front()[0].width();
    const std::size_t plane = static_cast<std::size_t>(height) * width;

    std::vector<VideoVolume> stacked;
    stacked.reserve(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        VideoVolume vol(frames, height, width);
        for (int t = 0; t < frames; ++t) {
            const std::vector<float>& src = window[static_cast<std::size_t>(t)][c].data();
            std::copy(src.begin(), src.end(),
                      vol.data().begin() + static_cast<std::size_t>(t) * plane);
        }
        stacked.push_back(std::move(vol));
    }
    return ChannelStack(std::move(stacked));
}

VideoVolume last_slice(const VideoVolume& v) {
    VideoVolume out(1, v.height(), v.width());
    const std::size_t plane = out.size();
    const std::size_t off = v.size() - plane;
    std::copy(v.data().begin() + static_cast<std::ptrdiff_t>(off), v.data().end(),
              out.data().begin());
    return out;
}

void require_threshold(double threshold) {
    if (!(threshold > 0.0) || !(threshold < 1.0)) {
        throw ValidationError("threshold must lie strictly between 0 and 1");
    }
}

}  // namespace

VideoVolume bbox_to_softmask(const BBox& b, int height, int width, double feather_sigma) {
    validate_bbox(b, height, width);
    if (feather_sigma < 0.0 || !std::isfinite(feather_sigma)) {
        throw ValidationError("feather sigma must be non-negative and finite");
    }
    VideoVolume mask(1, height, width);
    for (int y = b.y_min; y < b.y_max; ++y) {
        for (int x = b.x_min; x < b.x_max; ++x) {
            mask.set(0, y, x, 1.0f);
        }
    }
    if (feather_sigma > 0.0) {
        const int radius = static_cast<int>(std::ceil(3.0 * feather_sigma));
        mask = convolve3d(mask, build_kernel(1.0, feather_sigma, 0, radius));
    }
    return mask;
}

std::optional<BBox> extract_bbox(const VideoVolume& mask, double threshold) {
    if (mask.frames() != 1) {
        throw ValidationError("box extraction expects a single-frame mask");
    }
    if (!std::isfinite(threshold)) {
        throw ValidationError("threshold must be finite");
    }
    const int height = mask.height();
    const int width = mask.width();
    std::vector<char> above(mask.size(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        above[i] = static_cast<double>(mask.data()[i]) > threshold ? 1 : 0;
    }

    // Flood-fill 4-connected components; keep the one with the most pixels.
    std::vector<char> seen(mask.size(), 0);
    std::vector<std::pair<int, int>> stack;
    BBox best;
    std::size_t best_count = 0;
    for (int y0 = 0; y0 < height; ++y0) {
        for (int x0 = 0; x0 < width; ++x0) {
            const std::size_t start = mask.index(0, y0, x0);
            if (!above[start] || seen[start]) continue;
            BBox box{x0, y0, x0 + 1, y0 + 1};
            std::size_t count = 0;
            seen[start] = 1;
            stack.assign(1, {y0, x0});
            while (!stack.empty()) {
                const auto [y, x] = stack.back();
                stack.pop_back();
                ++count;
                box.x_min = std::min(box.x_min, x);
                box.x_max = std::max(box.x_max, x + 1);
                box.y_min = std::min(box.y_min, y);
                box.y_max = std::max(box.y_max, y + 1);
                const auto visit = [&](int ny, int nx) {
                    if (ny < 0 || ny >= height || nx < 0 || nx >= width) return;
                    const std::size_t i = mask.index(0, ny, nx);
                    if (above[i] && !seen[i]) {
                        seen[i] = 1;
                        stack.emplace_back(ny, nx);
                    }
                };
                visit(y - 1, x);
                visit(y + 1, x);
                visit(y, x - 1);
                visit(y, x + 1);
            }
            if (count > best_count) {
                best_count = count;
                best = box;
            }
        }
    }
    if (best_count == 0) return std::nullopt;
    return best;
}

VideoVolume median_mask(const std::vector<VideoVolume>& frame_channels) {
    require_frame_channels(frame_channels);
    const std::size_t channels = frame_channels.size();
    VideoVolume out(1, frame_channels[0].height(), frame_channels[0].width());
    std::vector<float> values(channels);
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t c = 0; c < channels; ++c) values[c] = frame_channels[c].data()[i];
        const std::size_t mid = channels / 2;
        std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                         values.end());
        if (channels % 2 == 1) {
            out.data()[i] = values[mid];
        } else {
            const float upper = values[mid];
            const float lower = *std::max_element(
                values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
            out.data()[i] = static_cast<float>(
                0.5 * (static_cast<double>(lower) + static_cast<double>(upper)));
        }
    }
    return out;
}

TrackerState init_tracker(const SpectralParams& params, const CombinerWeights& weights,
                          double threshold, const BBox& gt_init,
                          const std::vector<VideoVolume>& frame0_channels) {
    validate_params(params);
    require_threshold(threshold);
    require_frame_channels(frame0_channels);
    if (weights.w.size() != frame0_channels.size()) {
        throw ValidationError("combiner has " + std::to_string(weights.w.size()) +
                              " weights for " + std::to_string(frame0_channels.size()) +
                              " channels");
    }
    const int height = frame0_channels[0].height();
    const int width = frame0_channels[0].width();
    validate_bbox(gt_init, height, width);

    TrackerState state;
    state.window.push_back(frame0_channels);
    state.params = params;
    state.weights = weights;
    state.threshold = threshold;
    state.last_box = gt_init;
    state.frame_height = height;
    state.frame_width = width;
    return state;
}

StepResult track_step(TrackerState& state, const std::vector<VideoVolume>& frame_channels) {
    require_frame_channels(frame_channels);
    if (frame_channels.size() != state.weights.w.size()) {
        throw ValidationError("frame channel count does not match the combiner");
    }
    if (frame_channels[0].height() != state.frame_height ||
        frame_channels[0].width() != state.frame_width) {
        throw ValidationError("frame shape changed mid-sequence");
    }
    state.window.push_back(frame_channels);
    while (static_cast<int>(state.window.size()) > state.params.window) {
        state.window.pop_front();
    }

    std::optional<BBox> box;
    try {
        const VideoVolume refined = refine(window_stack(state.window), state.weights,
                                           state.params);
        box = extract_bbox(last_slice(refined), state.threshold);
    } catch (const SpectralCollapseError&) {
        box = std::nullopt;  // signal died; fall back to the carried box
    }
    if (box.has_value()) {
        state.last_box = *box;
        return {*box, true};
    }
    return {state.last_box, false};
}

Trajectory track_sequence(const std::vector<std::vector<VideoVolume>>& channels_per_frame,
                          const BBox& gt_init, const CombinerWeights& weights,
                          const SpectralParams& params, double threshold) {
    if (channels_per_frame.empty()) {
        throw ValidationError("sequence has no frames");
    }
    TrackerState state = init_tracker(params, weights, threshold, gt_init,
                                      channels_per_frame[0]);
    Trajectory traj;
    traj.boxes.reserve(channels_per_frame.size());
    traj.boxes.emplace_back(gt_init);
    for (std::size_t t = 1; t < channels_per_frame.size(); ++t) {
        const StepResult r = track_step(state, channels_per_frame[t]);
        if (r.extracted) {
            traj.boxes.emplace_back(r.box);
        } else {
            traj.boxes.emplace_back(std::nullopt);
        }
    }
    return traj;
}

namespace {

// Shared one-pass shell for the window-free baselines.
template <typename MaskFn>
Trajectory baseline_sequence(const std::vector<std::vector<VideoVolume>>& channels_per_frame,
                             const BBox& gt_init, double threshold, MaskFn&& frame_mask) {
    if (channels_per_frame.empty()) {
        throw ValidationError("sequence has no frames");
    }
    require_threshold(threshold);
    require_frame_channels(channels_per_frame[0]);
    validate_bbox(gt_init, channels_per_frame[0][0].height(),
                  channels_per_frame[0][0].width());
    Trajectory traj;
    traj.boxes.reserve(channels_per_frame.size());
    traj.boxes.emplace_back(gt_init);
    for (std::size_t t = 1; t < channels_per_frame.size(); ++t) {
        require_frame_channels(channels_per_frame[t]);
        traj.boxes.push_back(extract_bbox(frame_mask(channels_per_frame[t]), threshold));
    }
    return traj;
}

}  // namespace

Trajectory track_sequence_median(const std::vector<std::vector<VideoVolume>>& channels_per_frame,
                                 const BBox& gt_init, double threshold) {
    return baseline_sequence(channels_per_frame, gt_init, threshold,
                             [](const std::vector<VideoVolume>& fc) { return median_mask(fc); });
}

Trajectory track_sequence_combine_only(
    const std::vector<std::vector<VideoVolume>>& channels_per_frame, const BBox& gt_init,
    const CombinerWeights& weights, double threshold) {
    return baseline_sequence(channels_per_frame, gt_init, threshold,
                             [&](const std::vector<VideoVolume>& fc) {
                                 return combine_channels(ChannelStack(fc), weights);
                             });
}

}  // namespace spectrack
