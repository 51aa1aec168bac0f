#include "spectrack/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spectrack/errors.hpp"

namespace spectrack {

namespace {

constexpr double kCollapseEps = 1e-12;
// A frame slice is rescaled to peak 1 only when its max clearly exceeds the
// value a perfectly flat unit-norm volume would have everywhere.
constexpr double kConcentration = 1.5;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void validate_params(const SpectralParams& params) {
    if (!(params.alpha > 0.0)) {
        throw ValidationError("alpha must be positive");
    }
    if (!(params.p >= 0.0)) {
        throw ValidationError("p must be non-negative");
    }
    if (params.n_iter < 1) {
        throw ValidationError("n_iter must be at least 1");
    }
    if (params.window < 1) {
        throw ValidationError("window must be at least 1");
    }
    detail::validate_kernel(params.kernel);
}

VideoVolume combine_channels(const ChannelStack& cs, const CombinerWeights& cw) {
    if (cs.count() == 0) {
        throw ValidationError("combiner needs at least one channel");
    }
    if (cw.w.size() != static_cast<std::size_t>(cs.count())) {
        throw ValidationError("combiner has " + std::to_string(cw.w.size()) +
                              " weights for " + std::to_string(cs.count()) + " channels");
    }
    for (double w : cw.w) {
        if (!std::isfinite(w)) throw ValidationError("combiner weights must be finite");
    }
    if (!std::isfinite(cw.b)) throw ValidationError("combiner bias must be finite");

    const int channels = cs.count();
    VideoVolume out(cs.frames(), cs.height(), cs.width());
    const std::size_t n = out.size();
    const float lo = std::numeric_limits<float>::min();
    const float hi = std::nextafter(1.0f, 0.0f);
    for (std::size_t i = 0; i < n; ++i) {
        double z = cw.b;
        for (int c = 0; c < channels; ++c) {
            z += cw.w[static_cast<std::size_t>(c)] *
                 static_cast<double>(cs.channel(c).data()[i]);
        }
        const auto v = static_cast<float>(sigmoid(z));
        out.data()[i] = std::min(std::max(v, lo), hi);
    }
    return out;
}

VideoVolume spectral_iteration(const VideoVolume& x, const VideoVolume& s,
                               const VideoVolume& f, const SpectralParams& params) {
    validate_params(params);
    if (!x.same_shape(s) || !x.same_shape(f)) {
        throw ValidationError("iterate, unary and pairwise volumes must share one shape");
    }
    const std::size_t n = x.size();
    std::vector<double> sp(n), fv(n), xv(n);
    for (std::size_t i = 0; i < n; ++i) {
        sp[i] = std::pow(static_cast<double>(s.data()[i]), params.p);
        fv[i] = static_cast<double>(f.data()[i]);
        xv[i] = static_cast<double>(x.data()[i]);
    }

    // Three filtered terms: a = G*(S^p X), b = G*(F^2 S^p X), c = G*(F S^p X).
    std::vector<double> a(n), b(n), c(n), tmp(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = sp[i] * xv[i];
    for (std::size_t i = 0; i < n; ++i) b[i] = fv[i] * fv[i] * a[i];
    for (std::size_t i = 0; i < n; ++i) c[i] = fv[i] * a[i];
    detail::convolve3d_inplace(a, tmp, x.frames(), x.height(), x.width(), params.kernel);
    detail::convolve3d_inplace(b, tmp, x.frames(), x.height(), x.width(), params.kernel);
    detail::convolve3d_inplace(c, tmp, x.frames(), x.height(), x.width(), params.kernel);

    const double inv_alpha = 1.0 / params.alpha;
    double norm_sq = 0.0;
    std::vector<double>& r = tmp;
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = sp[i] * ((inv_alpha - fv[i] * fv[i]) * a[i] - b[i] + 2.0 * fv[i] * c[i]);
        norm_sq += r[i] * r[i];
    }
    const double norm = std::sqrt(norm_sq);
    if (!std::isfinite(norm)) {
        throw NumericError("spectral iteration produced a non-finite result");
    }
    if (norm < kCollapseEps) {
        throw SpectralCollapseError("spectral iteration collapsed to the zero vector");
    }
    VideoVolume out(x.frames(), x.height(), x.width());
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = static_cast<float>(r[i] / norm);
    return out;
}

VideoVolume refine(const ChannelStack& cs, const CombinerWeights& cw,
                   const SpectralParams& params) {
    validate_params(params);
    const VideoVolume s = combine_channels(cs, cw);
    VideoVolume x = s;
    for (int k = 0; k < params.n_iter; ++k) {
        x = spectral_iteration(x, s, s, params);
    }

    // Bring each frame back to mask range. A unit-norm volume spread evenly
    // over n voxels sits at 1/sqrt(n); only slices peaking clearly above that
    // are rescaled, so a signal-free result keeps near-zero values instead of
    // being inflated into a full-frame detection.
    const double flat = 1.0 / std::sqrt(static_cast<double>(x.size()));
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
    for (int t = 0; t < x.frames(); ++t) {
        float* slice = x.data().data() + static_cast<std::size_t>(t) * plane;
        const float peak = *std::max_element(slice, slice + plane);
        if (static_cast<double>(peak) > kConcentration * flat) {
            for (std::size_t i = 0; i < plane; ++i) {
                slice[i] = static_cast<float>(static_cast<double>(slice[i]) /
                                              static_cast<double>(peak));
            }
        }
    }
    return clamp01(x);
}

DenseAdjacency build_dense_adjacency(const VideoVolume& s, const VideoVolume& f,
                                     const SpectralParams& params) {
    validate_params(params);
    if (!s.same_shape(f)) {
        throw ValidationError("unary and pairwise volumes must share one shape");
    }
    const std::size_t n = s.size();
    if (n > 4096) {
        throw ValidationError("dense adjacency is limited to 4096 voxels, got " +
                              std::to_string(n));
    }
    const int frames = s.frames();
    const int height = s.height();
    const int width = s.width();
    const GaussianKernel3D& k = params.kernel;
    const double inv_alpha = 1.0 / params.alpha;

    std::vector<double> sp(n), fv(n);
    for (std::size_t i = 0; i < n; ++i) {
        sp[i] = std::pow(static_cast<double>(s.data()[i]), params.p);
        fv[i] = static_cast<double>(f.data()[i]);
    }

    DenseAdjacency m;
    m.n = n;
    m.entries.assign(n * n, 0.0);
    for (int t = 0; t < frames; ++t) {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const std::size_t i = s.index(t, y, x);
                const int t_lo = std::max(0, t - k.radius_t);
                const int t_hi = std::min(frames - 1, t + k.radius_t);
                const int y_lo = std::max(0, y - k.radius_s);
                const int y_hi = std::min(height - 1, y + k.radius_s);
                const int x_lo = std::max(0, x - k.radius_s);
                const int x_hi = std::min(width - 1, x + k.radius_s);
                for (int tj = t_lo; tj <= t_hi; ++tj) {
                    const double wt = k.weights_t[static_cast<std::size_t>(tj - t + k.radius_t)];
                    for (int yj = y_lo; yj <= y_hi; ++yj) {
                        const double wy =
                            k.weights_y[static_cast<std::size_t>(yj - y + k.radius_s)];
                        for (int xj = x_lo; xj <= x_hi; ++xj) {
                            const double wx =
                                k.weights_x[static_cast<std::size_t>(xj - x + k.radius_s)];
                            const std::size_t j = s.index(tj, yj, xj);
                            const double df = fv[i] - fv[j];
                            m.at(i, j) = sp[i] * sp[j] * wt * wy * wx * (inv_alpha - df * df);
                        }
                    }
                }
            }
        }
    }
    return m;
}

VideoVolume oracle_step(const VideoVolume& x, const DenseAdjacency& m) {
    if (x.size() != m.n) {
        throw ValidationError("iterate length does not match the adjacency size");
    }
    const std::size_t n = m.n;
    std::vector<double> y(n, 0.0);
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* row = m.entries.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            acc += row[j] * static_cast<double>(x.data()[j]);
        }
        y[i] = acc;
        norm_sq += acc * acc;
    }
    const double norm = std::sqrt(norm_sq);
    if (!std::isfinite(norm)) {
        throw NumericError("dense step produced a non-finite result");
    }
    if (norm < kCollapseEps) {
        throw SpectralCollapseError("dense step collapsed to the zero vector");
    }
    VideoVolume out(x.frames(), x.height(), x.width());
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = static_cast<float>(y[i] / norm);
    return out;
}

}  // namespace spectrack
