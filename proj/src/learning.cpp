#include "spectrack/learning.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "spectrack/errors.hpp"

namespace spectrack {

namespace {

constexpr double kProbClip = 1e-7;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void require_binary(const VideoVolume& gt) {
    for (float g : gt.data()) {
        if (g != 0.0f && g != 1.0f) {
            throw ValidationError("ground truth mask must be exactly binary");
        }
    }
}

void require_compatible(const ChannelStack& cs, const CombinerWeights& cw,
                        const VideoVolume& gt) {
    if (cw.w.size() != static_cast<std::size_t>(cs.count())) {
        throw ValidationError("combiner has " + std::to_string(cw.w.size()) +
                              " weights for " + std::to_string(cs.count()) + " channels");
    }
    if (!gt.same_shape(cs.channel(0))) {
        throw ValidationError("ground truth shape does not match the channels");
    }
    require_binary(gt);
}

double voxel_z(const ChannelStack& cs, const CombinerWeights& cw, std::size_t i) {
    double z = cw.b;
    for (int c = 0; c < cs.count(); ++c) {
        z += cw.w[static_cast<std::size_t>(c)] * static_cast<double>(cs.channel(c).data()[i]);
    }
    return z;
}

double clipped_bce(double p, double g) {
    p = std::min(std::max(p, kProbClip), 1.0 - kProbClip);
    return -(g * std::log(p) + (1.0 - g) * std::log1p(-p));
}

}  // namespace

double bce_loss(const VideoVolume& pred, const VideoVolume& gt) {
    if (!pred.same_shape(gt)) {
        throw ValidationError("prediction and ground truth shapes differ");
    }
    require_binary(gt);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        sum += clipped_bce(static_cast<double>(pred.data()[i]),
                           static_cast<double>(gt.data()[i]));
    }
    return sum / static_cast<double>(pred.size());
}

CombinerGradient combiner_gradient(const ChannelStack& cs, const CombinerWeights& cw,
                                   const VideoVolume& gt, double l2_penalty) {
    require_compatible(cs, cw, gt);
    const int channels = cs.count();
    const std::size_t n = gt.size();
    CombinerGradient grad;
    grad.w.assign(static_cast<std::size_t>(channels), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = sigmoid(voxel_z(cs, cw, i)) - static_cast<double>(gt.data()[i]);
        for (int c = 0; c < channels; ++c) {
            grad.w[static_cast<std::size_t>(c)] +=
                d * static_cast<double>(cs.channel(c).data()[i]);
        }
        grad.b += d;
    }
    for (int c = 0; c < channels; ++c) {
        grad.w[static_cast<std::size_t>(c)] =
            grad.w[static_cast<std::size_t>(c)] / static_cast<double>(n) +
            2.0 * l2_penalty * cw.w[static_cast<std::size_t>(c)];
    }
    grad.b /= static_cast<double>(n);
    return grad;
}

double combiner_loss(const ChannelStack& cs, const CombinerWeights& cw,
                     const VideoVolume& gt, double l2_penalty) {
    require_compatible(cs, cw, gt);
    const std::size_t n = gt.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += clipped_bce(sigmoid(voxel_z(cs, cw, i)), static_cast<double>(gt.data()[i]));
    }
    double loss = sum / static_cast<double>(n);
    for (double w : cw.w) loss += l2_penalty * w * w;
    return loss;
}

CombinerWeights default_init(int channels) {
    if (channels < 1) {
        throw ValidationError("combiner needs at least one channel");
    }
    CombinerWeights cw;
    cw.w.assign(static_cast<std::size_t>(channels), 1.0 / channels);
    cw.b = 0.0;
    return cw;
}

namespace {

double dataset_loss(const std::vector<TrainSample>& dataset, const CombinerWeights& cw,
                    double l2_penalty) {
    double sum = 0.0;
    for (const TrainSample& sample : dataset) {
        sum += combiner_loss(sample.channels, cw, sample.gt, 0.0);
    }
    double loss = sum / static_cast<double>(dataset.size());
    for (double w : cw.w) loss += l2_penalty * w * w;
    return loss;
}

// Gradient on a voxel subset of one sample (with replacement draws).
CombinerGradient subset_gradient(const TrainSample& sample, const CombinerWeights& cw,
                                 const std::vector<std::size_t>& voxels, double l2_penalty) {
    const int channels = sample.channels.count();
    CombinerGradient grad;
    grad.w.assign(static_cast<std::size_t>(channels), 0.0);
    for (std::size_t i : voxels) {
        const double d = sigmoid(voxel_z(sample.channels, cw, i)) -
                         static_cast<double>(sample.gt.data()[i]);
        for (int c = 0; c < channels; ++c) {
            grad.w[static_cast<std::size_t>(c)] +=
                d * static_cast<double>(sample.channels.channel(c).data()[i]);
        }
        grad.b += d;
    }
    const auto m = static_cast<double>(voxels.size());
    for (int c = 0; c < channels; ++c) {
        grad.w[static_cast<std::size_t>(c)] =
            grad.w[static_cast<std::size_t>(c)] / m + 2.0 * l2_penalty * cw.w[static_cast<std::size_t>(c)];
    }
    grad.b /= m;
    return grad;
}

}  // namespace

TrainResult train_combiner(const std::vector<TrainSample>& dataset, const TrainConfig& cfg,
                           const CombinerWeights& init) {
    if (dataset.empty()) {
        throw ValidationError("training dataset is empty");
    }
    if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
        throw ValidationError("learning rate must be positive and finite");
    }
    if (cfg.epochs < 1) {
        throw ValidationError("epoch count must be at least 1");
    }
    if (cfg.batch < 0) {
        throw ValidationError("batch size must be non-negative");
    }
    if (cfg.l2_penalty < 0.0) {
        throw ValidationError("l2 penalty must be non-negative");
    }
    for (const TrainSample& sample : dataset) {
        require_compatible(sample.channels, init, sample.gt);
    }

    TrainResult result;
    result.weights = init;
    result.loss_history.reserve(static_cast<std::size_t>(cfg.epochs) + 1);

    double loss = dataset_loss(dataset, result.weights, cfg.l2_penalty);
    if (!std::isfinite(loss)) {
        throw DivergenceError(0, "training loss is non-finite at initialization");
    }
    result.loss_history.push_back(loss);
    CombinerWeights best = result.weights;
    double best_loss = loss;

    std::mt19937_64 rng(cfg.seed);
    const std::size_t channels = init.w.size();
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.batch == 0) {
            CombinerGradient total;
            total.w.assign(channels, 0.0);
            for (const TrainSample& sample : dataset) {
                const CombinerGradient g =
                    combiner_gradient(sample.channels, result.weights, sample.gt, 0.0);
                for (std::size_t c = 0; c < channels; ++c) total.w[c] += g.w[c];
                total.b += g.b;
            }
            const auto n = static_cast<double>(dataset.size());
            for (std::size_t c = 0; c < channels; ++c) {
                const double gw = total.w[c] / n + 2.0 * cfg.l2_penalty * result.weights.w[c];
                result.weights.w[c] -= cfg.learning_rate * gw;
            }
            result.weights.b -= cfg.learning_rate * (total.b / n);
        } else {
            for (const TrainSample& sample : dataset) {
                std::vector<std::size_t> voxels(static_cast<std::size_t>(cfg.batch));
                const std::size_t n = sample.gt.size();
                for (std::size_t& v : voxels) v = static_cast<std::size_t>(rng() % n);
                const CombinerGradient g =
                    subset_gradient(sample, result.weights, voxels, cfg.l2_penalty);
                for (std::size_t c = 0; c < channels; ++c) {
                    result.weights.w[c] -= cfg.learning_rate * g.w[c];
                }
                result.weights.b -= cfg.learning_rate * g.b;
            }
        }

        loss = dataset_loss(dataset, result.weights, cfg.l2_penalty);
        if (!std::isfinite(loss)) {
            throw DivergenceError(epoch, "training loss turned non-finite at epoch " +
                                             std::to_string(epoch));
        }
        result.loss_history.push_back(loss);
        if (loss < best_loss) {
            best_loss = loss;
            best = result.weights;
        }
    }
    // Guarantees the result never loses to the starting point even when the
    // step size was too aggressive late in the run.
    result.weights = std::move(best);
    return result;
}

}  // namespace spectrack
