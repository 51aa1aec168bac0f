#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "spectrack/spectral.hpp"
#include "spectrack/volume.hpp"

namespace spectrack {

// Raw volume file, bit-exact round trip:
//   magic "SFVL" | u16 version = 1 | u8 dtype = 1 (f32)
//   | u32 T | u32 H | u32 W (little-endian) | T*H*W little-endian f32
// in the canonical row-major frame-major layout. load_volume validates the
// header and checks the payload size against the file before allocating;
// FormatError names the offending field.
void save_volume(const VideoVolume& v, const std::filesystem::path& path);
VideoVolume load_volume(const std::filesystem::path& path);

// 8-bit grayscale PNG import/export for single-frame masks (value / 255),
// for interoperability with segmentation datasets. Reader handles
// non-interlaced gray-8 only.
void save_mask_png(const VideoVolume& frame, const std::filesystem::path& path);
VideoVolume load_mask_png(const std::filesystem::path& path);

// Weights JSON: {"w": [...], "b": x, "channels": C}.
void save_weights(const CombinerWeights& cw, const std::filesystem::path& path);
CombinerWeights load_weights(const std::filesystem::path& path);

// Trajectory JSON: {"boxes": [[x_min, y_min, x_max, y_max] | null, ...]}.
void save_trajectory(const Trajectory& t, const std::filesystem::path& path);
Trajectory load_trajectory(const std::filesystem::path& path);

// A sequence materialized in memory: per-frame per-channel single-frame
// masks, the ground-truth trajectory (frame 0 always present) and the
// initial box.
struct SequenceData {
    std::vector<std::vector<VideoVolume>> channels_per_frame;
    Trajectory gt;
    BBox init_box;

    int frames() const { return static_cast<int>(channels_per_frame.size()); }
    int channels() const {
        return channels_per_frame.empty() ? 0 : static_cast<int>(channels_per_frame[0].size());
    }
    int height() const;
    int width() const;
};

// Manifest JSON:
//   {
//     "frames": T, "channels": C,
//     "frame_files": [[path per channel] per frame],   // .sfvl or .png
//     "init_box": [x_min, y_min, x_max, y_max],
//     "gt_boxes": [[...] | null per frame]             // optional
//   }
// Relative paths resolve against the manifest's directory; absolute paths
// are used as-is. Channel counts must agree across frames (the error cites
// the first offending frame). When gt_boxes is absent, the ground-truth
// trajectory carries only frame 0 (= init_box).
SequenceData load_manifest(const std::filesystem::path& path);

// Writes the volumes plus manifest.json into `dir` and returns the manifest
// path.
std::filesystem::path save_manifest(const SequenceData& seq, const std::filesystem::path& dir);

// Synthetic benchmark generator: a rectangular blob moving with constant
// velocity and reflecting at the borders. Channels are the ground-truth
// mask corrupted per channel and per frame with an independent box offset
// (uniform within +-noise * box size per axis) and salt noise (voxels
// forced to 1 with probability 0.05 * noise). Deterministic in `seed`.
struct SynthSpec {
    std::uint64_t seed = 0;
    int frames = 30;
    int height = 48;
    int width = 48;
    int channels = 5;
    double noise = 0.3;
    int motion = 2;  // velocity in pixels/frame, applied to both axes
    int blob_height = 12;
    int blob_width = 12;
    int start_x = 1;
    int start_y = 1;
    double feather = 0.0;
};

SequenceData synth_sequence(const SynthSpec& spec);

}  // namespace spectrack
