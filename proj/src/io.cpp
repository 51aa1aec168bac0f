#include "spectrack/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include <json.hpp>
#include <zlib.h>

#include "spectrack/errors.hpp"
#include "spectrack/tracking.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace spectrack {

namespace {

constexpr char kVolumeMagic[4] = {'S', 'F', 'V', 'L'};
constexpr std::uint16_t kVolumeVersion = 1;
constexpr std::uint8_t kDtypeF32 = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) {
        throw IoError("write failed for " + path.string());
    }
}

std::vector<unsigned char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("read failed for " + path.string());
    }
    return bytes;
}

}  // namespace

void save_volume(const VideoVolume& v, const fs::path& path) {
    if (v.size() == 0) {
        throw ValidationError("cannot save an empty volume");
    }
    std::string bytes;
    bytes.reserve(19 + v.size() * 4);
    bytes.append(kVolumeMagic, 4);
    put_u16(bytes, kVolumeVersion);
    bytes.push_back(static_cast<char>(kDtypeF32));
    put_u32(bytes, static_cast<std::uint32_t>(v.frames()));
    put_u32(bytes, static_cast<std::uint32_t>(v.height()));
    put_u32(bytes, static_cast<std::uint32_t>(v.width()));
    for (float x : v.data()) {
        put_u32(bytes, std::bit_cast<std::uint32_t>(x));
    }
    write_file(path, bytes);
}

VideoVolume load_volume(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::uint64_t file_size = 0;
    try {
        file_size = static_cast<std::uint64_t>(fs::file_size(path));
    } catch (const fs::filesystem_error& e) {
        throw IoError("cannot stat " + path.string() + ": " + e.what());
    }

    unsigned char header[19];
    if (!in.read(reinterpret_cast<char*>(header), 4) ||
        std::memcmp(header, kVolumeMagic, 4) != 0) {
        throw FormatError("magic", path.string() + ": not a volume file");
    }
    if (!in.read(reinterpret_cast<char*>(header + 4), 2)) {
        throw FormatError("version", path.string() + ": truncated header");
    }
    if (get_u16(header + 4) != kVolumeVersion) {
        throw FormatError("version", path.string() + ": unsupported version " +
                                          std::to_string(get_u16(header + 4)));
    }
    if (!in.read(reinterpret_cast<char*>(header + 6), 1)) {
        throw FormatError("dtype", path.string() + ": truncated header");
    }
    if (header[6] != kDtypeF32) {
        throw FormatError("dtype", path.string() + ": unsupported dtype " +
                                       std::to_string(static_cast<int>(header[6])));
    }
    if (!in.read(reinterpret_cast<char*>(header + 7), 12)) {
        throw FormatError("dims", path.string() + ": truncated header");
    }
    const std::uint32_t frames = get_u32(header + 7);
    const std::uint32_t height = get_u32(header + 11);
    const std::uint32_t width = get_u32(header + 15);
    const auto int_max = static_cast<std::uint32_t>(std::numeric_limits<int>::max());
    if (frames == 0 || height == 0 || width == 0 || frames > int_max || height > int_max ||
        width > int_max) {
        throw FormatError("dims", path.string() + ": bad dimensions " + std::to_string(frames) +
                                      "x" + std::to_string(height) + "x" + std::to_string(width));
    }

    // Size check happens against the header before any payload allocation,
    // so a corrupt header cannot request an absurd buffer.
    const std::uint64_t voxels =
        static_cast<std::uint64_t>(frames) * height * width;
    if (file_size != 19 + voxels * 4) {
        throw FormatError("payload length",
                          path.string() + ": expected " + std::to_string(19 + voxels * 4) +
                              " bytes, file has " + std::to_string(file_size));
    }

    std::vector<unsigned char> payload(voxels * 4);
    if (!in.read(reinterpret_cast<char*>(payload.data()),
                 static_cast<std::streamsize>(payload.size()))) {
        throw IoError("read failed for " + path.string());
    }
    VideoVolume v(static_cast<int>(frames), static_cast<int>(height), static_cast<int>(width));
    for (std::uint64_t i = 0; i < voxels; ++i) {
        v.data()[i] = std::bit_cast<float>(get_u32(payload.data() + i * 4));
    }
    return v;
}

// ---------------------------------------------------------------------------
// Minimal PNG: 8-bit grayscale, non-interlaced. zlib supplies deflate/crc32;
// the chunk framing and scanline filters below are all this subset needs.

namespace {

constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

void put_u32_be(std::string& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32_be(const unsigned char* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::string& out, const char type[4], const std::string& data) {
    put_u32_be(out, static_cast<std::uint32_t>(data.size()));
    out.append(type, 4);
    out.append(data);
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data()),
                static_cast<uInt>(data.size()));
    put_u32_be(out, crc);
}

unsigned char paeth(unsigned char a, unsigned char b, unsigned char c) {
    const int p = static_cast<int>(a) + b - c;
    const int pa = std::abs(p - a);
    const int pb = std::abs(p - b);
    const int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace

void save_mask_png(const VideoVolume& frame, const fs::path& path) {
    if (frame.frames() != 1) {
        throw ValidationError("PNG export expects a single-frame mask");
    }
    const int height = frame.height();
    const int width = frame.width();

    // Scanlines with filter byte 0; values land on a 1/255 grid.
    std::vector<unsigned char> raw(static_cast<std::size_t>(height) * (width + 1));
    std::size_t pos = 0;
    for (int y = 0; y < height; ++y) {
        raw[pos++] = 0;
        for (int x = 0; x < width; ++x) {
            const double v = std::min(std::max(static_cast<double>(frame.at(0, y, x)), 0.0), 1.0);
            raw[pos++] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
    }

    uLongf dest_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> compressed(dest_len);
    if (compress2(compressed.data(), &dest_len, raw.data(), static_cast<uLong>(raw.size()),
                  Z_DEFAULT_COMPRESSION) != Z_OK) {
        throw IoError("deflate failed for " + path.string());
    }

    std::string ihdr;
    put_u32_be(ihdr, static_cast<std::uint32_t>(width));
    put_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // non-interlaced

    std::string bytes(reinterpret_cast<const char*>(kPngSignature), 8);
    append_chunk(bytes, "IHDR", ihdr);
    append_chunk(bytes, "IDAT",
                 std::string(reinterpret_cast<const char*>(compressed.data()), dest_len));
    append_chunk(bytes, "IEND", std::string());
    write_file(path, bytes);
}

VideoVolume load_mask_png(const fs::path& path) {
    const std::vector<unsigned char> bytes = read_file(path);
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0) {
        throw FormatError("signature", path.string() + ": not a PNG file");
    }

    std::size_t off = 8;
    bool saw_ihdr = false;
    bool saw_iend = false;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<unsigned char> idat;
    while (off < bytes.size()) {
        if (bytes.size() - off < 12) {
            throw FormatError("chunk", path.string() + ": truncated chunk");
        }
        const std::uint32_t len = get_u32_be(bytes.data() + off);
        if (bytes.size() - off - 12 < len) {
            throw FormatError("chunk", path.string() + ": truncated chunk");
        }
        const unsigned char* type = bytes.data() + off + 4;
        const unsigned char* data = bytes.data() + off + 8;
        std::uint32_t crc = crc32(0L, Z_NULL, 0);
        crc = crc32(crc, type, 4 + len);
        if (crc != get_u32_be(data + len)) {
            throw FormatError("crc", path.string() + ": chunk checksum mismatch");
        }
        const std::string name(reinterpret_cast<const char*>(type), 4);
        if (!saw_ihdr && name != "IHDR") {
            throw FormatError("IHDR", path.string() + ": first chunk must be IHDR");
        }
        if (name == "IHDR") {
            if (saw_ihdr || len != 13) {
                throw FormatError("IHDR", path.string() + ": malformed IHDR");
            }
            width = get_u32_be(data);
            height = get_u32_be(data + 4);
            const auto int_max = static_cast<std::uint32_t>(std::numeric_limits<int>::max());
            if (width == 0 || height == 0 || width > int_max || height > int_max) {
                throw FormatError("IHDR", path.string() + ": bad image dimensions");
            }
            if (data[8] != 8 || data[9] != 0) {
                throw FormatError("color type",
                                  path.string() + ": only 8-bit grayscale is supported");
            }
            if (data[10] != 0 || data[11] != 0 || data[12] != 0) {
                throw FormatError("IHDR",
                                  path.string() + ": unsupported compression/filter/interlace");
            }
            saw_ihdr = true;
        } else if (name == "IDAT") {
            idat.insert(idat.end(), data, data + len);
        } else if (name == "IEND") {
            saw_iend = true;
            break;
        } else if ((type[0] & 0x20) == 0) {
            throw FormatError("chunk", path.string() + ": unknown critical chunk " + name);
        }
        off += 12 + len;
    }
    if (!saw_iend) {
        throw FormatError("IEND", path.string() + ": missing IEND");
    }
    if (idat.empty()) {
        throw FormatError("IDAT", path.string() + ": no image data");
    }

    const std::uint64_t expected =
        static_cast<std::uint64_t>(height) * (static_cast<std::uint64_t>(width) + 1);
    std::vector<unsigned char> raw(expected);
    uLongf raw_len = static_cast<uLongf>(expected);
    if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        raw_len != expected) {
        throw FormatError("IDAT", path.string() + ": bad compressed image data");
    }

    // Undo per-row filtering (bpp = 1).
    const std::size_t w = width;
    std::vector<unsigned char> prior(w, 0);
    std::vector<unsigned char> row(w, 0);
    VideoVolume v(1, static_cast<int>(height), static_cast<int>(width));
    for (std::uint32_t y = 0; y < height; ++y) {
        const unsigned char* line = raw.data() + static_cast<std::size_t>(y) * (w + 1);
        const unsigned char filter = line[0];
        for (std::size_t x = 0; x < w; ++x) {
            const unsigned char left = x > 0 ? row[x - 1] : 0;
            const unsigned char up = prior[x];
            const unsigned char up_left = x > 0 ? prior[x - 1] : 0;
            unsigned char recon = 0;
            switch (filter) {
                case 0: recon = line[1 + x]; break;
                case 1: recon = static_cast<unsigned char>(line[1 + x] + left); break;
                case 2: recon = static_cast<unsigned char>(line[1 + x] + up); break;
                case 3:
                    recon = static_cast<unsigned char>(line[1 + x] + ((left + up) >> 1));
                    break;
                case 4:
                    recon = static_cast<unsigned char>(line[1 + x] + paeth(left, up, up_left));
                    break;
                default:
                    throw FormatError("filter", path.string() + ": unknown row filter " +
                                                    std::to_string(filter));
            }
            row[x] = recon;
            v.set(0, static_cast<int>(y), static_cast<int>(x),
                  static_cast<float>(recon) / 255.0f);
        }
        prior.swap(row);
    }
    return v;
}

// ---------------------------------------------------------------------------
// JSON files.

namespace {

json parse_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("json", path.string() + ": " + e.what());
    }
}

void require_keys(const json& j, const std::vector<std::string>& required,
                  const std::vector<std::string>& optional, const fs::path& path) {
    if (!j.is_object()) {
        throw FormatError("json", path.string() + ": expected a JSON object");
    }
    for (const std::string& key : required) {
        if (!j.contains(key)) {
            throw FormatError(key, path.string() + ": missing key \"" + key + "\"");
        }
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find(required.begin(), required.end(), key) == required.end() &&
            std::find(optional.begin(), optional.end(), key) == optional.end()) {
            throw FormatError(key, path.string() + ": unknown key \"" + key + "\"");
        }
    }
}

json box_to_json(const BBox& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

BBox box_from_json(const json& j, const std::string& field, const fs::path& path) {
    if (!j.is_array() || j.size() != 4) {
        throw FormatError(field, path.string() + ": a box must be [x_min, y_min, x_max, y_max]");
    }
    for (const json& v : j) {
        if (!v.is_number_integer()) {
            throw FormatError(field, path.string() + ": box coordinates must be integers");
        }
    }
    return BBox{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

}  // namespace

void save_weights(const CombinerWeights& cw, const fs::path& path) {
    if (cw.w.empty()) {
        throw ValidationError("combiner has no weights to save");
    }
    json j;
    j["w"] = cw.w;
    j["b"] = cw.b;
    j["channels"] = cw.w.size();
    write_file(path, j.dump(2) + "\n");
}

CombinerWeights load_weights(const fs::path& path) {
    const json j = parse_json_file(path);
    require_keys(j, {"w", "b", "channels"}, {}, path);
    if (!j["w"].is_array() || j["w"].empty()) {
        throw FormatError("w", path.string() + ": \"w\" must be a non-empty array");
    }
    CombinerWeights cw;
    for (const json& v : j["w"]) {
        if (!v.is_number()) {
            throw FormatError("w", path.string() + ": weights must be numbers");
        }
        cw.w.push_back(v.get<double>());
    }
    if (!j["b"].is_number()) {
        throw FormatError("b", path.string() + ": \"b\" must be a number");
    }
    cw.b = j["b"].get<double>();
    if (!j["channels"].is_number_integer() ||
        j["channels"].get<std::int64_t>() != static_cast<std::int64_t>(cw.w.size())) {
        throw FormatError("channels",
                          path.string() + ": \"channels\" must equal the weight count");
    }
    return cw;
}

void save_trajectory(const Trajectory& t, const fs::path& path) {
    json boxes = json::array();
    for (const std::optional<BBox>& b : t.boxes) {
        boxes.push_back(b.has_value() ? box_to_json(*b) : json(nullptr));
    }
    json j;
    j["boxes"] = std::move(boxes);
    write_file(path, j.dump(2) + "\n");
}

Trajectory load_trajectory(const fs::path& path) {
    const json j = parse_json_file(path);
    require_keys(j, {"boxes"}, {}, path);
    if (!j["boxes"].is_array()) {
        throw FormatError("boxes", path.string() + ": \"boxes\" must be an array");
    }
    Trajectory t;
    for (const json& entry : j["boxes"]) {
        if (entry.is_null()) {
            t.boxes.emplace_back(std::nullopt);
        } else {
            t.boxes.emplace_back(box_from_json(entry, "boxes", path));
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Manifests and sequences.

int SequenceData::height() const {
    return channels_per_frame.empty() || channels_per_frame[0].empty()
               ? 0
               : channels_per_frame[0][0].height();
}

int SequenceData::width() const {
    return channels_per_frame.empty() || channels_per_frame[0].empty()
               ? 0
               : channels_per_frame[0][0].width();
}

SequenceData load_manifest(const fs::path& path) {
    const json j = parse_json_file(path);
    require_keys(j, {"frames", "channels", "frame_files", "init_box"}, {"gt_boxes"}, path);
    if (!j["frames"].is_number_integer() || j["frames"].get<int>() < 1) {
        throw FormatError("frames", path.string() + ": \"frames\" must be a positive integer");
    }
    if (!j["channels"].is_number_integer() || j["channels"].get<int>() < 1) {
        throw FormatError("channels",
                          path.string() + ": \"channels\" must be a positive integer");
    }
    const int frames = j["frames"].get<int>();
    const int channels = j["channels"].get<int>();

    const json& files = j["frame_files"];
    if (!files.is_array() || files.size() != static_cast<std::size_t>(frames)) {
        throw FormatError("frame_files", path.string() + ": \"frame_files\" must list " +
                                             std::to_string(frames) + " frames");
    }
    const fs::path base = path.parent_path();
    SequenceData seq;
    seq.channels_per_frame.reserve(static_cast<std::size_t>(frames));
    for (int t = 0; t < frames; ++t) {
        const json& frame = files[static_cast<std::size_t>(t)];
        if (!frame.is_array() || frame.size() != static_cast<std::size_t>(channels)) {
            throw FormatError("frame_files",
                              path.string() + ": frame " + std::to_string(t) + " lists " +
                                  std::to_string(frame.is_array() ? frame.size() : 0) +
                                  " channel files, expected " + std::to_string(channels));
        }
        std::vector<VideoVolume> masks;
        masks.reserve(static_cast<std::size_t>(channels));
        for (int c = 0; c < channels; ++c) {
            const json& entry = frame[static_cast<std::size_t>(c)];
            if (!entry.is_string()) {
                throw FormatError("frame_files", path.string() + ": frame " + std::to_string(t) +
                                                     " channel " + std::to_string(c) +
                                                     " is not a path");
            }
            fs::path file = entry.get<std::string>();
            if (file.is_relative()) file = base / file;
            const std::string ext = file.extension().string();
            VideoVolume mask;
            if (ext == ".sfvl") {
                mask = load_volume(file);
            } else if (ext == ".png") {
                mask = load_mask_png(file);
            } else {
                throw FormatError("frame_files",
                                  path.string() + ": unsupported mask file type \"" + ext +
                                      "\" at frame " + std::to_string(t));
            }
            if (mask.frames() != 1) {
                throw ValidationError(file.string() + ": manifest masks must be single-frame");
            }
            masks.push_back(std::move(mask));
        }
        for (const VideoVolume& m : masks) {
            if (!m.same_shape(masks[0])) {
                throw ValidationError(path.string() + ": mask shapes disagree at frame " +
                                      std::to_string(t));
            }
        }
        if (t > 0 && !seq.channels_per_frame[0][0].same_shape(masks[0])) {
            throw ValidationError(path.string() + ": mask shapes disagree at frame " +
                                  std::to_string(t));
        }
        seq.channels_per_frame.push_back(std::move(masks));
    }

    seq.init_box = box_from_json(j["init_box"], "init_box", path);
    validate_bbox(seq.init_box, seq.height(), seq.width());

    if (j.contains("gt_boxes")) {
        const json& gt = j["gt_boxes"];
        if (!gt.is_array() || gt.size() != static_cast<std::size_t>(frames)) {
            throw FormatError("gt_boxes", path.string() + ": \"gt_boxes\" must list " +
                                              std::to_string(frames) + " frames");
        }
        if (gt[0].is_null()) {
            throw FormatError("gt_boxes",
                              path.string() + ": the frame 0 ground-truth box is required");
        }
        for (const json& entry : gt) {
            if (entry.is_null()) {
                seq.gt.boxes.emplace_back(std::nullopt);
            } else {
                const BBox b = box_from_json(entry, "gt_boxes", path);
                validate_bbox(b, seq.height(), seq.width());
                seq.gt.boxes.emplace_back(b);
            }
        }
    } else {
        seq.gt.boxes.emplace_back(seq.init_box);
    }
    return seq;
}

fs::path save_manifest(const SequenceData& seq, const fs::path& dir) {
    if (seq.frames() < 1 || seq.channels() < 1) {
        throw ValidationError("sequence has no frames or channels to save");
    }
    for (int t = 0; t < seq.frames(); ++t) {
        const auto& frame = seq.channels_per_frame[static_cast<std::size_t>(t)];
        if (static_cast<int>(frame.size()) != seq.channels()) {
            throw ValidationError("frame " + std::to_string(t) +
                                  " channel count differs from frame 0");
        }
        for (const VideoVolume& m : frame) {
            if (m.frames() != 1 || !m.same_shape(frame[0]) ||
                !m.same_shape(seq.channels_per_frame[0][0])) {
                throw ValidationError("sequence masks must be single-frame and share one shape");
            }
        }
    }
    if (!seq.gt.boxes.empty() && seq.gt.boxes.size() != 1 &&
        seq.gt.boxes.size() != static_cast<std::size_t>(seq.frames())) {
        throw ValidationError("ground-truth trajectory length does not match the frame count");
    }

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }

    json files = json::array();
    char name[64];
    for (int t = 0; t < seq.frames(); ++t) {
        json row = json::array();
        for (int c = 0; c < seq.channels(); ++c) {
            std::snprintf(name, sizeof(name), "frame_%04d_ch%d.sfvl", t, c);
            save_volume(seq.channels_per_frame[static_cast<std::size_t>(t)]
                                              [static_cast<std::size_t>(c)],
                        dir / name);
            row.push_back(name);
        }
        files.push_back(std::move(row));
    }

    json j;
    j["frames"] = seq.frames();
    j["channels"] = seq.channels();
    j["frame_files"] = std::move(files);
    j["init_box"] = box_to_json(seq.init_box);
    if (seq.gt.boxes.size() == static_cast<std::size_t>(seq.frames()) && seq.frames() > 1) {
        json gt = json::array();
        for (const std::optional<BBox>& b : seq.gt.boxes) {
            gt.push_back(b.has_value() ? box_to_json(*b) : json(nullptr));
        }
        j["gt_boxes"] = std::move(gt);
    }
    const fs::path manifest = dir / "manifest.json";
    write_file(manifest, j.dump(2) + "\n");
    return manifest;
}

// ---------------------------------------------------------------------------
// Synthetic sequences.

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Position of a constant-speed walk reflected into [0, limit] at time t,
// via the triangular fold of the unreflected path.
int reflected_position(int start, int speed, int limit, int t) {
    if (limit <= 0) return 0;
    const long long period = 2LL * limit;
    long long u = (start + static_cast<long long>(speed) * t) % period;
    if (u < 0) u += period;
    return static_cast<int>(u <= limit ? u : period - u);
}

}  // namespace

SequenceData synth_sequence(const SynthSpec& spec) {
    if (spec.frames < 1) throw ValidationError("synthetic sequence needs at least 1 frame");
    if (spec.height < 1 || spec.width < 1) {
        throw ValidationError("synthetic frame dimensions must be positive");
    }
    if (spec.channels < 1) throw ValidationError("synthetic sequence needs at least 1 channel");
    if (spec.blob_width < 1 || spec.blob_width > spec.width || spec.blob_height < 1 ||
        spec.blob_height > spec.height) {
        throw ValidationError("blob does not fit inside the frame");
    }
    const int max_x = spec.width - spec.blob_width;
    const int max_y = spec.height - spec.blob_height;
    if (spec.start_x < 0 || spec.start_x > max_x || spec.start_y < 0 || spec.start_y > max_y) {
        throw ValidationError("blob start position is out of range");
    }
    if (spec.motion < 0) throw ValidationError("motion must be non-negative");
    if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) {
        throw ValidationError("noise must be non-negative and finite");
    }
    if (!(spec.feather >= 0.0) || !std::isfinite(spec.feather)) {
        throw ValidationError("feather must be non-negative and finite");
    }

    const double salt_prob = std::min(0.05 * spec.noise, 1.0);
    std::mt19937_64 rng(spec.seed);
    SequenceData seq;
    seq.channels_per_frame.reserve(static_cast<std::size_t>(spec.frames));
    seq.gt.boxes.reserve(static_cast<std::size_t>(spec.frames));
    for (int t = 0; t < spec.frames; ++t) {
        const int px = reflected_position(spec.start_x, spec.motion, max_x, t);
        const int py = reflected_position(spec.start_y, spec.motion, max_y, t);
        const BBox box{px, py, px + spec.blob_width, py + spec.blob_height};
        seq.gt.boxes.emplace_back(box);

        std::vector<VideoVolume> masks;
        masks.reserve(static_cast<std::size_t>(spec.channels));
        for (int c = 0; c < spec.channels; ++c) {
            const double ux = uniform01(rng);
            const double uy = uniform01(rng);
            const int dx = static_cast<int>(
                std::lround((2.0 * ux - 1.0) * spec.noise * spec.blob_width));
            const int dy = static_cast<int>(
                std::lround((2.0 * uy - 1.0) * spec.noise * spec.blob_height));
            const int jx = std::min(std::max(px + dx, 0), max_x);
            const int jy = std::min(std::max(py + dy, 0), max_y);
            VideoVolume mask =
                bbox_to_softmask(BBox{jx, jy, jx + spec.blob_width, jy + spec.blob_height},
                                 spec.height, spec.width, spec.feather);
            for (float& v : mask.data()) {
                if (uniform01(rng) < salt_prob) v = 1.0f;
            }
            masks.push_back(std::move(mask));
        }
        seq.channels_per_frame.push_back(std::move(masks));
    }
    seq.init_box = *seq.gt.boxes[0];
    return seq;
}

}  // namespace spectrack
