#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace spectrack {

// Dense scalar field over frames x height x width, the carrier for masks,
// unary/pairwise maps and eigenvector iterates. Storage is float32 in
// row-major frame-major order: index = (t*H + y)*W + x. Reductions over
// voxels accumulate in double.
class VideoVolume {
public:
    VideoVolume() = default;
    VideoVolume(int frames, int height, int width, float fill = 0.0f);

    int frames() const { return frames_; }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    std::size_t index(int t, int y, int x) const {
        return (static_cast<std::size_t>(t) * height_ + y) * width_ + x;
    }

    // Bounds-checked accessors; hot loops go through data() instead.
    float at(int t, int y, int x) const;
    void set(int t, int y, int x, float value);

    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

    bool same_shape(const VideoVolume& other) const {
        return frames_ == other.frames_ && height_ == other.height_ && width_ == other.width_;
    }

private:
    int frames_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

// L2 norm with double accumulation.
double l2_norm(const VideoVolume& v);

// v / ||v||_2. Throws SpectralCollapseError on an all-zero volume.
VideoVolume l2_normalize(const VideoVolume& v);

// Per-voxel min(max(x, 0), 1).
VideoVolume clamp01(const VideoVolume& v);

// Ordered set of aligned volumes, one per input channel. All channels share
// identical (T, H, W).
class ChannelStack {
public:
    ChannelStack() = default;
    explicit ChannelStack(std::vector<VideoVolume> channels);

    int count() const { return static_cast<int>(channels_.size()); }
    int frames() const { return channels_.empty() ? 0 : channels_[0].frames(); }
    int height() const { return channels_.empty() ? 0 : channels_[0].height(); }
    int width() const { return channels_.empty() ? 0 : channels_[0].width(); }

    const VideoVolume& channel(int i) const { return channels_.at(static_cast<std::size_t>(i)); }
    const std::vector<VideoVolume>& channels() const { return channels_; }

private:
    std::vector<VideoVolume> channels_;
};

// Axis-aligned box with the inclusive-exclusive convention
// [x_min, x_max) x [y_min, y_max).
struct BBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;

    int width() const { return x_max - x_min; }
    int height() const { return y_max - y_min; }
    long long area() const { return static_cast<long long>(width()) * height(); }
    double center_x() const { return 0.5 * (x_min + x_max); }
    double center_y() const { return 0.5 * (y_min + y_max); }

    bool operator==(const BBox&) const = default;
};

// Throws ValidationError unless 0 <= x_min < x_max <= W and
// 0 <= y_min < y_max <= H.
void validate_bbox(const BBox& b, int height, int width);

// Per-frame box series; absent means the prediction was declared empty for
// that frame.
struct Trajectory {
    std::vector<std::optional<BBox>> boxes;

    std::size_t size() const { return boxes.size(); }
};

}  // namespace spectrack
