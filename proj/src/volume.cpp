#include "spectrack/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spectrack/errors.hpp"

namespace spectrack {

VideoVolume::VideoVolume(int frames, int height, int width, float fill)
    : frames_(frames), height_(height), width_(width) {
    if (frames < 1 || height < 1 || width < 1) {
        throw ValidationError("volume dimensions must be at least 1, got " +
                              std::to_string(frames) + "x" + std::to_string(height) + "x" +
                              std::to_string(width));
    }
    if (!std::isfinite(fill)) {
        throw ValidationError("volume fill value must be finite");
    }
    data_.assign(static_cast<std::size_t>(frames) * height * width, fill);
}

float VideoVolume::at(int t, int y, int x) const {
    if (t < 0 || t >= frames_ || y < 0 || y >= height_ || x < 0 || x >= width_) {
        throw ValidationError("voxel index out of range");
    }
    return data_[index(t, y, x)];
}

void VideoVolume::set(int t, int y, int x, float value) {
    if (t < 0 || t >= frames_ || y < 0 || y >= height_ || x < 0 || x >= width_) {
        throw ValidationError("voxel index out of range");
    }
    data_[index(t, y, x)] = value;
}

double l2_norm(const VideoVolume& v) {
    double sum = 0.0;
    for (float x : v.data()) {
        sum += static_cast<double>(x) * static_cast<double>(x);
    }
    return std::sqrt(sum);
}

VideoVolume l2_normalize(const VideoVolume& v) {
    const double norm = l2_norm(v);
    if (!(norm > 0.0)) {
        throw SpectralCollapseError("l2_normalize: volume has zero norm");
    }
    VideoVolume out = v;
    for (float& x : out.data()) {
        x = static_cast<float>(static_cast<double>(x) / norm);
    }
    return out;
}

VideoVolume clamp01(const VideoVolume& v) {
    VideoVolume out = v;
    for (float& x : out.data()) {
        x = std::min(std::max(x, 0.0f), 1.0f);
    }
    return out;
}

ChannelStack::ChannelStack(std::vector<VideoVolume> channels) : channels_(std::move(channels)) {
    if (channels_.empty()) {
        throw ValidationError("channel stack needs at least one channel");
    }
    for (std::size_t i = 1; i < channels_.size(); ++i) {
        if (!channels_[i].same_shape(channels_[0])) {
            throw ValidationError("channel " + std::to_string(i) +
                                  " does not match the shape of channel 0");
        }
    }
}

void validate_bbox(const BBox& b, int height, int width) {
    if (b.x_min < 0 || b.y_min < 0 || b.x_min >= b.x_max || b.y_min >= b.y_max ||
        b.x_max > width || b.y_max > height) {
        throw ValidationError("box [" + std::to_string(b.x_min) + "," + std::to_string(b.y_min) +
                              "," + std::to_string(b.x_max) + "," + std::to_string(b.y_max) +
                              ") is invalid for a " + std::to_string(width) + "x" +
                              std::to_string(height) + " frame");
    }
}

}  // namespace spectrack
