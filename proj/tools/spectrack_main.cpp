// Command-line surface over the refinement/tracking library. Machine output
// is JSON on stdout; progress and diagnostics go to stderr. Exit codes:
// 0 success, 1 usage/validation, 2 I/O, 3 numeric failure.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spectrack/errors.hpp"
#include "spectrack/io.hpp"
#include "spectrack/learning.hpp"
#include "spectrack/metrics.hpp"
#include "spectrack/spectral.hpp"
#include "spectrack/tracking.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace spectrack;

namespace {

struct RunConfig {
    double alpha = 1.0;
    double p = 1.0;
    int n_iter = 1;
    int window = 5;
    double sigma_t = 1.0;
    double sigma_s = 1.0;
    int radius_t = -1;  // -1 = ceil(3 sigma)
    int radius_s = -1;
    double threshold = 0.75;
    std::uint64_t seed = 0;

    double learning_rate = 0.1;
    int epochs = 100;
    int batch = 0;
    double l2_penalty = 0.0;

    double noise = 0.3;
    int motion = 2;
    int frames = 30;
    int height = 48;
    int width = 48;
    int num_channels = 5;
    int trials = 100;

    std::string channels;  // manifest path
    std::string weights;
    std::string out;
    std::string pred;
    std::string gt;
    std::string manifest;
    std::string out_dir;
    std::string subsets = "best1,top3,all";
};

json config_to_json(const RunConfig& c) {
    return json{{"alpha", c.alpha},
                {"p", c.p},
                {"n_iter", c.n_iter},
                {"window", c.window},
                {"sigma_t", c.sigma_t},
                {"sigma_s", c.sigma_s},
                {"radius_t", c.radius_t},
                {"radius_s", c.radius_s},
                {"threshold", c.threshold},
                {"seed", c.seed},
                {"learning_rate", c.learning_rate},
                {"epochs", c.epochs},
                {"batch", c.batch},
                {"l2_penalty", c.l2_penalty},
                {"noise", c.noise},
                {"motion", c.motion},
                {"frames", c.frames},
                {"height", c.height},
                {"width", c.width},
                {"num_channels", c.num_channels},
                {"trials", c.trials},
                {"channels", c.channels},
                {"weights", c.weights},
                {"out", c.out},
                {"pred", c.pred},
                {"gt", c.gt},
                {"manifest", c.manifest},
                {"out_dir", c.out_dir},
                {"subsets", c.subsets}};
}

double want_number(const json& v, const std::string& key) {
    if (!v.is_number()) throw FormatError(key, "config key \"" + key + "\" must be a number");
    return v.get<double>();
}

int want_int(const json& v, const std::string& key) {
    if (!v.is_number_integer()) {
        throw FormatError(key, "config key \"" + key + "\" must be an integer");
    }
    return v.get<int>();
}

std::string want_string(const json& v, const std::string& key) {
    if (!v.is_string()) throw FormatError(key, "config key \"" + key + "\" must be a string");
    return v.get<std::string>();
}

// File values fill in everything the command line left untouched:
// defaults < config file < explicit flags.
void apply_config_file(RunConfig& cfg, const fs::path& path,
                       const std::map<std::string, CLI::Option*>& opts) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("json", path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw FormatError("json", path.string() + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        const auto it = opts.find(key);
        if (it == opts.end()) {
            throw FormatError(key, path.string() + ": unknown config key \"" + key + "\"");
        }
        if (it->second->count() > 0) continue;  // explicit flag wins
        if (key == "alpha") cfg.alpha = want_number(value, key);
        else if (key == "p") cfg.p = want_number(value, key);
        else if (key == "n_iter") cfg.n_iter = want_int(value, key);
        else if (key == "window") cfg.window = want_int(value, key);
        else if (key == "sigma_t") cfg.sigma_t = want_number(value, key);
        else if (key == "sigma_s") cfg.sigma_s = want_number(value, key);
        else if (key == "radius_t") cfg.radius_t = want_int(value, key);
        else if (key == "radius_s") cfg.radius_s = want_int(value, key);
        else if (key == "threshold") cfg.threshold = want_number(value, key);
        else if (key == "seed") {
            if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
                throw FormatError(key, "config key \"seed\" must be a non-negative integer");
            }
            cfg.seed = value.get<std::uint64_t>();
        } else if (key == "learning_rate") cfg.learning_rate = want_number(value, key);
        else if (key == "epochs") cfg.epochs = want_int(value, key);
        else if (key == "batch") cfg.batch = want_int(value, key);
        else if (key == "l2_penalty") cfg.l2_penalty = want_number(value, key);
        else if (key == "noise") cfg.noise = want_number(value, key);
        else if (key == "motion") cfg.motion = want_int(value, key);
        else if (key == "frames") cfg.frames = want_int(value, key);
        else if (key == "height") cfg.height = want_int(value, key);
        else if (key == "width") cfg.width = want_int(value, key);
        else if (key == "num_channels") cfg.num_channels = want_int(value, key);
        else if (key == "trials") cfg.trials = want_int(value, key);
        else if (key == "channels") cfg.channels = want_string(value, key);
        else if (key == "weights") cfg.weights = want_string(value, key);
        else if (key == "out") cfg.out = want_string(value, key);
        else if (key == "pred") cfg.pred = want_string(value, key);
        else if (key == "gt") cfg.gt = want_string(value, key);
        else if (key == "manifest") cfg.manifest = want_string(value, key);
        else if (key == "out_dir") cfg.out_dir = want_string(value, key);
        else if (key == "subsets") cfg.subsets = want_string(value, key);
    }
}

SpectralParams make_params(const RunConfig& cfg) {
    SpectralParams params;
    params.alpha = cfg.alpha;
    params.p = cfg.p;
    params.n_iter = cfg.n_iter;
    params.window = cfg.window;
    if (!(cfg.sigma_t > 0.0) || !(cfg.sigma_s > 0.0)) {
        throw ValidationError("kernel sigmas must be positive");
    }
    const int rt = cfg.radius_t >= 0 ? cfg.radius_t
                                     : static_cast<int>(std::ceil(3.0 * cfg.sigma_t));
    const int rs = cfg.radius_s >= 0 ? cfg.radius_s
                                     : static_cast<int>(std::ceil(3.0 * cfg.sigma_s));
    params.kernel = build_kernel(cfg.sigma_t, cfg.sigma_s, rt, rs);
    validate_params(params);
    return params;
}

void require_path(const std::string& value, const char* flag) {
    if (value.empty()) {
        throw ValidationError(std::string("missing required option ") + flag);
    }
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

// Whole-sequence channel stack for offline refinement.
ChannelStack full_stack(const SequenceData& seq) {
    const int frames = seq.frames();
    const int channels = seq.channels();
    const std::size_t plane =
        static_cast<std::size_t>(seq.height()) * static_cast<std::size_t>(seq.width());
    std::vector<VideoVolume> stacked;
    stacked.reserve(static_cast<std::size_t>(channels));
    for (int c = 0; c < channels; ++c) {
        VideoVolume vol(frames, seq.height(), seq.width());
        for (int t = 0; t < frames; ++t) {
            const auto& src =
                seq.channels_per_frame[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)]
                    .data();
            std::copy(src.begin(), src.end(),
                      vol.data().begin() + static_cast<std::size_t>(t) * plane);
        }
        stacked.push_back(std::move(vol));
    }
    return ChannelStack(std::move(stacked));
}

std::vector<TrainSample> manifest_dataset(const SequenceData& seq,
                                          const std::vector<int>& channel_subset) {
    std::vector<TrainSample> dataset;
    for (std::size_t t = 0; t < seq.channels_per_frame.size(); ++t) {
        if (t >= seq.gt.boxes.size() || !seq.gt.boxes[t].has_value()) continue;
        std::vector<VideoVolume> masks;
        masks.reserve(channel_subset.size());
        for (int c : channel_subset) {
            masks.push_back(seq.channels_per_frame[t][static_cast<std::size_t>(c)]);
        }
        dataset.push_back(TrainSample{
            ChannelStack(std::move(masks)),
            bbox_to_softmask(*seq.gt.boxes[t], seq.height(), seq.width(), 0.0)});
    }
    if (dataset.empty()) {
        throw ValidationError("manifest has no frames with ground-truth boxes to train on");
    }
    return dataset;
}

std::vector<int> all_channels(int count) {
    std::vector<int> idx(static_cast<std::size_t>(count));
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

std::vector<std::vector<VideoVolume>> select_channels(const SequenceData& seq,
                                                      const std::vector<int>& subset) {
    std::vector<std::vector<VideoVolume>> out;
    out.reserve(seq.channels_per_frame.size());
    for (const auto& frame : seq.channels_per_frame) {
        std::vector<VideoVolume> masks;
        masks.reserve(subset.size());
        for (int c : subset) masks.push_back(frame[static_cast<std::size_t>(c)]);
        out.push_back(std::move(masks));
    }
    return out;
}

json report_to_json(const EvalReport& r) {
    return json{{"auc", r.auc},   {"ao", r.ao},     {"sr50", r.sr50},
                {"sr75", r.sr75}, {"prec", r.prec}, {"prec_norm", r.prec_norm},
                {"per_frame_iou", r.per_frame_iou}};
}

Trajectory load_gt_argument(const fs::path& path) {
    const json j = [&] {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open " + path.string());
        try {
            return json::parse(in);
        } catch (const json::parse_error& e) {
            throw FormatError("json", path.string() + ": " + e.what());
        }
    }();
    if (j.is_object() && j.contains("boxes")) {
        return load_trajectory(path);
    }
    // Otherwise treat it as a sequence manifest carrying ground truth.
    SequenceData seq = load_manifest(path);
    if (seq.gt.boxes.size() != static_cast<std::size_t>(seq.frames())) {
        throw ValidationError(path.string() +
                              ": manifest carries no full ground-truth trajectory");
    }
    return seq.gt;
}

// ---------------------------------------------------------------------------

void cmd_refine(const RunConfig& cfg) {
    require_path(cfg.channels, "--channels");
    require_path(cfg.weights, "--weights");
    require_path(cfg.out, "--out");
    const SpectralParams params = make_params(cfg);
    const SequenceData seq = load_manifest(cfg.channels);
    const CombinerWeights cw = load_weights(cfg.weights);
    const VideoVolume refined = refine(full_stack(seq), cw, params);
    save_volume(refined, cfg.out);
    std::cerr << "refined " << seq.frames() << " frames -> " << cfg.out << "\n";
    emit(json{{"command", "refine"},
              {"out", cfg.out},
              {"frames", refined.frames()},
              {"height", refined.height()},
              {"width", refined.width()},
              {"config", config_to_json(cfg)}});
}

void cmd_track(const RunConfig& cfg) {
    require_path(cfg.channels, "--channels");
    require_path(cfg.weights, "--weights");
    require_path(cfg.out, "--out");
    const SpectralParams params = make_params(cfg);
    const SequenceData seq = load_manifest(cfg.channels);
    const CombinerWeights cw = load_weights(cfg.weights);
    const Trajectory traj = track_sequence(seq.channels_per_frame, seq.init_box, cw, params,
                                           cfg.threshold);
    save_trajectory(traj, cfg.out);
    int extracted = 0;
    for (const auto& b : traj.boxes) extracted += b.has_value() ? 1 : 0;
    std::cerr << "tracked " << traj.size() << " frames (" << extracted
              << " with detections) -> " << cfg.out << "\n";
    emit(json{{"command", "track"},
              {"out", cfg.out},
              {"frames", traj.size()},
              {"extracted", extracted},
              {"config", config_to_json(cfg)}});
}

void cmd_train(const RunConfig& cfg) {
    require_path(cfg.channels, "--channels");
    require_path(cfg.out, "--out");
    const SequenceData seq = load_manifest(cfg.channels);
    const std::vector<TrainSample> dataset = manifest_dataset(seq, all_channels(seq.channels()));

    TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.epochs = cfg.epochs;
    tc.batch = cfg.batch;
    tc.l2_penalty = cfg.l2_penalty;
    tc.seed = cfg.seed;
    const CombinerWeights init =
        cfg.weights.empty() ? default_init(seq.channels()) : load_weights(cfg.weights);
    const TrainResult result = train_combiner(dataset, tc, init);
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
        std::cerr << "epoch " << e << " loss " << result.loss_history[e] << "\n";
    }
    save_weights(result.weights, cfg.out);
    emit(json{{"command", "train"},
              {"out", cfg.out},
              {"samples", dataset.size()},
              {"initial_loss", result.loss_history.front()},
              {"final_loss", result.loss_history.back()},
              {"loss_history", result.loss_history},
              {"weights", json{{"w", result.weights.w}, {"b", result.weights.b}}},
              {"config", config_to_json(cfg)}});
}

void cmd_eval(const RunConfig& cfg) {
    require_path(cfg.pred, "--pred");
    require_path(cfg.gt, "--gt");
    const Trajectory pred = load_trajectory(cfg.pred);
    const Trajectory gt = load_gt_argument(cfg.gt);
    const EvalReport report = evaluate(pred, gt);
    json j = report_to_json(report);
    j["config"] = config_to_json(cfg);
    emit(j);
}

void cmd_oracle_check(const RunConfig& cfg) {
    if (cfg.trials < 1) {
        throw ValidationError("oracle check needs at least 1 trial");
    }
    std::mt19937_64 master(cfg.seed);
    const double limit = 1e-5;
    double worst = 0.0;
    std::uint64_t worst_seed = 0;
    const double p_choices[] = {0.5, 1.0, 2.0};
    const double alpha_choices[] = {0.5, 1.0, 2.0};
    for (int trial = 0; trial < cfg.trials; ++trial) {
        const std::uint64_t instance_seed = master();
        std::mt19937_64 rng(instance_seed);
        const auto u01 = [&rng] {
            return static_cast<double>(rng() >> 11) * 0x1.0p-53;
        };
        const int frames = 1 + static_cast<int>(rng() % 4);
        const int height = 2 + static_cast<int>(rng() % 7);
        const int width = 2 + static_cast<int>(rng() % 7);

        SpectralParams params;
        params.p = p_choices[rng() % 3];
        params.alpha = alpha_choices[rng() % 3];
        params.n_iter = 1;
        params.window = frames;
        params.kernel = build_kernel(0.5 + u01(), 0.5 + u01(), 1, 1);

        VideoVolume x(frames, height, width);
        VideoVolume s(frames, height, width);
        VideoVolume f(frames, height, width);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x.data()[i] = static_cast<float>(0.05 + 0.9 * u01());
            s.data()[i] = static_cast<float>(0.05 + 0.9 * u01());
            f.data()[i] = static_cast<float>(u01());
        }

        const DenseAdjacency m = build_dense_adjacency(s, f, params);
        VideoVolume filtered = x;
        VideoVolume dense = x;
        for (int k = 0; k < 3; ++k) {
            filtered = spectral_iteration(filtered, s, f, params);
            dense = oracle_step(dense, m);
            for (std::size_t i = 0; i < filtered.size(); ++i) {
                const double diff = std::abs(static_cast<double>(filtered.data()[i]) -
                                             static_cast<double>(dense.data()[i]));
                if (diff > worst) {
                    worst = diff;
                    worst_seed = instance_seed;
                }
            }
        }
    }
    std::cerr << "oracle check: " << cfg.trials << " trials, max abs diff " << worst << "\n";
    emit(json{{"command", "oracle-check"},
              {"trials", cfg.trials},
              {"max_abs_diff", worst},
              {"tolerance", limit},
              {"worst_seed", worst_seed},
              {"config", config_to_json(cfg)}});
    if (!(worst < limit)) {
        throw NumericError("filtered iteration disagrees with the dense oracle; worst instance seed " +
                           std::to_string(worst_seed));
    }
}

void cmd_synth(const RunConfig& cfg) {
    require_path(cfg.out_dir, "--out-dir");
    SynthSpec spec;
    spec.seed = cfg.seed;
    spec.frames = cfg.frames;
    spec.height = cfg.height;
    spec.width = cfg.width;
    spec.channels = cfg.num_channels;
    spec.noise = cfg.noise;
    spec.motion = cfg.motion;
    const SequenceData seq = synth_sequence(spec);
    const fs::path manifest = save_manifest(seq, cfg.out_dir);
    std::cerr << "wrote " << seq.frames() << "x" << seq.channels() << " masks under "
              << cfg.out_dir << "\n";
    emit(json{{"command", "synth"},
              {"manifest", manifest.string()},
              {"frames", seq.frames()},
              {"channels", seq.channels()},
              {"config", config_to_json(cfg)}});
}

void cmd_ablate(const RunConfig& cfg) {
    require_path(cfg.manifest, "--manifest");
    if (cfg.n_iter < 1) {
        throw ValidationError("n_iter must be at least 1");
    }
    const SequenceData seq = load_manifest(cfg.manifest);
    if (seq.gt.boxes.size() != static_cast<std::size_t>(seq.frames())) {
        throw ValidationError("ablation needs a manifest with a full ground-truth trajectory");
    }
    for (const auto& b : seq.gt.boxes) {
        if (!b.has_value()) {
            throw ValidationError("ablation needs a ground-truth box on every frame");
        }
    }
    const int channels = seq.channels();

    // Rank channels by how well each one tracks on its own.
    std::vector<std::pair<double, int>> ranking;
    for (int c = 0; c < channels; ++c) {
        Trajectory traj;
        traj.boxes.emplace_back(seq.init_box);
        for (int t = 1; t < seq.frames(); ++t) {
            traj.boxes.push_back(extract_bbox(
                seq.channels_per_frame[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)],
                cfg.threshold));
        }
        ranking.emplace_back(evaluate(traj, seq.gt).ao, c);
    }
    std::sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    std::vector<int> order;
    for (const auto& [ao, c] : ranking) order.push_back(c);

    // Subset spellings: best1, top3, all.
    std::vector<std::pair<std::string, std::vector<int>>> subsets;
    std::string token;
    std::stringstream ss(cfg.subsets);
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        if (token == "best1") {
            subsets.emplace_back(token, std::vector<int>{order[0]});
        } else if (token == "top3") {
            std::vector<int> top(order.begin(),
                                 order.begin() + std::min<std::size_t>(3, order.size()));
            std::sort(top.begin(), top.end());
            subsets.emplace_back(token, std::move(top));
        } else if (token == "all") {
            subsets.emplace_back(token, all_channels(channels));
        } else {
            throw ValidationError("unknown channel subset \"" + token +
                                  "\" (expected best1, top3 or all)");
        }
    }
    if (subsets.empty()) {
        throw ValidationError("no channel subsets requested");
    }

    TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.epochs = cfg.epochs;
    tc.batch = cfg.batch;
    tc.l2_penalty = cfg.l2_penalty;
    tc.seed = cfg.seed;

    json rows = json::array();
    CombinerWeights all_weights;
    bool have_all_weights = false;
    for (const auto& [name, subset] : subsets) {
        const CombinerWeights weights =
            train_combiner(manifest_dataset(seq, subset), tc,
                           default_init(static_cast<int>(subset.size())))
                .weights;
        if (name == "all") {
            all_weights = weights;
            have_all_weights = true;
        }
        const auto sub_channels = select_channels(seq, subset);
        for (int k = 1; k <= cfg.n_iter; ++k) {
            RunConfig iter_cfg = cfg;
            iter_cfg.n_iter = k;
            const SpectralParams params = make_params(iter_cfg);
            const Trajectory traj = track_sequence(sub_channels, seq.init_box, weights, params,
                                                   cfg.threshold);
            json row;
            row["subset"] = name;
            row["channels"] = subset;
            row["n_iter"] = k;
            row["report"] = report_to_json(evaluate(traj, seq.gt));
            rows.push_back(std::move(row));
            std::cerr << "ablate " << name << " n_iter=" << k
                      << " ao=" << rows.back()["report"]["ao"].get<double>() << "\n";
        }
    }

    {
        const Trajectory traj =
            track_sequence_median(seq.channels_per_frame, seq.init_box, cfg.threshold);
        json row;
        row["subset"] = "median";
        row["channels"] = all_channels(channels);
        row["n_iter"] = nullptr;
        row["report"] = report_to_json(evaluate(traj, seq.gt));
        rows.push_back(std::move(row));
    }
    {
        if (!have_all_weights) {
            all_weights = train_combiner(manifest_dataset(seq, all_channels(channels)), tc,
                                         default_init(channels))
                              .weights;
        }
        const Trajectory traj = track_sequence_combine_only(seq.channels_per_frame, seq.init_box,
                                                            all_weights, cfg.threshold);
        json row;
        row["subset"] = "no_refinement";
        row["channels"] = all_channels(channels);
        row["n_iter"] = nullptr;
        row["report"] = report_to_json(evaluate(traj, seq.gt));
        rows.push_back(std::move(row));
    }

    emit(json{{"command", "ablate"},
              {"channel_ranking", order},
              {"rows", rows},
              {"config", config_to_json(cfg)}});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"space-time spectral mask refinement and tracking toolkit"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::map<std::string, CLI::Option*> opts;
    app.add_option("--config", config_path, "JSON config file (flags override it)");
    opts["alpha"] = app.add_option("--alpha", cfg.alpha, "pairwise scale, enters as 1/alpha");
    opts["p"] = app.add_option("--p", cfg.p, "unary map exponent");
    opts["n_iter"] = app.add_option("--iters", cfg.n_iter,
                                    "spectral iterations (ablate: sweep upper bound)");
    opts["window"] = app.add_option("--window", cfg.window, "sliding window length in frames");
    opts["sigma_t"] = app.add_option("--sigma-t", cfg.sigma_t, "Gaussian sigma along time");
    opts["sigma_s"] = app.add_option("--sigma-s", cfg.sigma_s, "Gaussian sigma in space");
    opts["radius_t"] =
        app.add_option("--radius-t", cfg.radius_t, "kernel radius along time (-1 = 3 sigma)");
    opts["radius_s"] =
        app.add_option("--radius-s", cfg.radius_s, "kernel radius in space (-1 = 3 sigma)");
    opts["threshold"] =
        app.add_option("--threshold", cfg.threshold, "binarization threshold for boxes");
    opts["seed"] = app.add_option("--seed", cfg.seed, "random seed");
    opts["learning_rate"] = app.add_option("--lr", cfg.learning_rate, "gradient step size");
    opts["epochs"] = app.add_option("--epochs", cfg.epochs, "training epochs");
    opts["batch"] = app.add_option("--batch", cfg.batch, "voxels per step (0 = full batch)");
    opts["l2_penalty"] = app.add_option("--l2-penalty", cfg.l2_penalty, "L2 weight penalty");
    opts["noise"] = app.add_option("--noise", cfg.noise, "synthetic channel corruption level");
    opts["motion"] = app.add_option("--motion", cfg.motion, "synthetic blob speed, px/frame");
    opts["frames"] = app.add_option("--frames", cfg.frames, "synthetic sequence length");
    opts["height"] = app.add_option("--height", cfg.height, "synthetic frame height");
    opts["width"] = app.add_option("--width", cfg.width, "synthetic frame width");
    opts["num_channels"] =
        app.add_option("--num-channels", cfg.num_channels, "synthetic channel count");
    opts["trials"] = app.add_option("--trials", cfg.trials, "oracle check trial count");
    opts["channels"] = app.add_option("--channels", cfg.channels, "sequence manifest path");
    opts["weights"] = app.add_option("--weights", cfg.weights, "combiner weights JSON path");
    opts["out"] = app.add_option("--out", cfg.out, "output file path");
    opts["pred"] = app.add_option("--pred", cfg.pred, "predicted trajectory JSON path");
    opts["gt"] = app.add_option("--gt", cfg.gt, "ground-truth trajectory or manifest path");
    opts["manifest"] = app.add_option("--manifest", cfg.manifest, "sequence manifest path");
    opts["out_dir"] = app.add_option("--out-dir", cfg.out_dir, "output directory");
    opts["subsets"] = app.add_option("--channels-subsets", cfg.subsets,
                                     "comma list of best1, top3, all");

    CLI::App* refine_cmd =
        app.add_subcommand("refine", "refine a sequence's masks into one volume");
    CLI::App* track_cmd = app.add_subcommand("track", "online tracking over a manifest");
    CLI::App* train_cmd = app.add_subcommand("train", "fit combiner weights on a manifest");
    CLI::App* eval_cmd = app.add_subcommand("eval", "score a trajectory against ground truth");
    CLI::App* oracle_cmd = app.add_subcommand(
        "oracle-check", "randomized equivalence trials: filtered vs dense iteration");
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic sequence");
    CLI::App* ablate_cmd =
        app.add_subcommand("ablate", "iteration/subset sweep with baseline rows");
    for (CLI::App* sub : {refine_cmd, track_cmd, train_cmd, eval_cmd, oracle_cmd, synth_cmd,
                          ablate_cmd}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (!config_path.empty()) {
            apply_config_file(cfg, config_path, opts);
        }
        if (app.got_subcommand(refine_cmd)) cmd_refine(cfg);
        else if (app.got_subcommand(track_cmd)) cmd_track(cfg);
        else if (app.got_subcommand(train_cmd)) cmd_train(cfg);
        else if (app.got_subcommand(eval_cmd)) cmd_eval(cfg);
        else if (app.got_subcommand(oracle_cmd)) cmd_oracle_check(cfg);
        else if (app.got_subcommand(synth_cmd)) cmd_synth(cfg);
        else if (app.got_subcommand(ablate_cmd)) cmd_ablate(cfg);
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
