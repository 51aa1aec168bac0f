#include "spectrack/filtering.hpp"

#include <cmath>
#include <string>

#include "spectrack/errors.hpp"

namespace spectrack {

namespace {

std::vector<double> gaussian_weights(double sigma, int radius) {
    std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int d = -radius; d <= radius; ++d) {
        const double v = std::exp(-0.5 * d * d / (sigma * sigma));
        w[static_cast<std::size_t>(d + radius)] = v;
        sum += v;
    }
    for (double& v : w) v /= sum;
    return w;
}

// One 1D pass along a strided axis. Out-of-range taps contribute nothing.
void convolve_axis(const std::vector<double>& in, std::vector<double>& out,
                   const std::vector<double>& w, int radius, int len,
                   std::size_t stride, std::size_t lines, std::size_t line_stride,
                   std::size_t inner, std::size_t inner_stride) {
    const auto step = static_cast<std::ptrdiff_t>(stride);
    for (std::size_t line = 0; line < lines; ++line) {
        for (std::size_t j = 0; j < inner; ++j) {
            const std::size_t base = line * line_stride + j * inner_stride;
            for (int pos = 0; pos < len; ++pos) {
                const int lo = std::max(-radius, -pos);
                const int hi = std::min(radius, len - 1 - pos);
                double acc = 0.0;
                const double* src = in.data() + base + static_cast<std::size_t>(pos) * stride;
                for (int d = lo; d <= hi; ++d) {
                    acc += w[static_cast<std::size_t>(d + radius)] * src[d * step];
                }
                out[base + static_cast<std::size_t>(pos) * stride] = acc;
            }
        }
    }
}

}  // namespace

GaussianKernel3D build_kernel(double sigma_t, double sigma_s, int radius_t, int radius_s) {
    if (!(sigma_t > 0.0) || !(sigma_s > 0.0)) {
        throw ValidationError("kernel sigmas must be positive");
    }
    if (radius_t < 0 || radius_s < 0) {
        throw ValidationError("kernel radii must be non-negative");
    }
    GaussianKernel3D k;
    k.sigma_t = sigma_t;
    k.sigma_s = sigma_s;
    k.radius_t = radius_t;
    k.radius_s = radius_s;
    k.weights_t = gaussian_weights(sigma_t, radius_t);
    k.weights_y = gaussian_weights(sigma_s, radius_s);
    k.weights_x = k.weights_y;
    return k;
}

GaussianKernel3D build_kernel(double sigma_t, double sigma_s) {
    if (!(sigma_t > 0.0) || !(sigma_s > 0.0)) {
        throw ValidationError("kernel sigmas must be positive");
    }
    return build_kernel(sigma_t, sigma_s, static_cast<int>(std::ceil(3.0 * sigma_t)),
                        static_cast<int>(std::ceil(3.0 * sigma_s)));
}

namespace detail {

void validate_kernel(const GaussianKernel3D& k) {
    if (!(k.sigma_t > 0.0) || !(k.sigma_s > 0.0) || k.radius_t < 0 || k.radius_s < 0) {
        throw ValidationError("malformed kernel parameters");
    }
    const auto expect = [](const std::vector<double>& w, int radius, const char* axis) {
        if (w.size() != static_cast<std::size_t>(2 * radius + 1)) {
            throw ValidationError(std::string("kernel weight count does not match the ") + axis +
                                  " radius");
        }
        double sum = 0.0;
        for (double v : w) {
            if (!std::isfinite(v) || v < 0.0) {
                throw ValidationError(std::string("kernel has a bad weight on the ") + axis +
                                      " axis");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ValidationError(std::string("kernel weights on the ") + axis +
                                  " axis do not sum to 1");
        }
    };
    expect(k.weights_t, k.radius_t, "t");
    expect(k.weights_y, k.radius_s, "y");
    expect(k.weights_x, k.radius_s, "x");
}

void convolve3d_inplace(std::vector<double>& buf, std::vector<double>& tmp,
                        int frames, int height, int width, const GaussianKernel3D& k) {
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    const std::size_t f = static_cast<std::size_t>(frames);
    const std::size_t h = static_cast<std::size_t>(height);
    const std::size_t w = static_cast<std::size_t>(width);

    // t pass: stride = plane, one "line" per (y, x) column through time.
    convolve_axis(buf, tmp, k.weights_t, k.radius_t, frames, plane, 1, 0, plane, 1);
    // y pass: stride = width, lines indexed by frame, inner by x.
    convolve_axis(tmp, buf, k.weights_y, k.radius_s, height, w, f, plane, w, 1);
    // x pass: stride = 1, lines indexed by (frame, row).
    convolve_axis(buf, tmp, k.weights_x, k.radius_s, width, 1, f * h, w, 1, 0);
    buf.swap(tmp);
}

}  // namespace detail

VideoVolume convolve3d(const VideoVolume& v, const GaussianKernel3D& k) {
    detail::validate_kernel(k);
    for (float x : v.data()) {
        if (!std::isfinite(x)) {
            throw ValidationError("convolution input contains a non-finite voxel");
        }
    }
    std::vector<double> buf(v.size());
    std::vector<double> tmp(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) buf[i] = static_cast<double>(v.data()[i]);
    detail::convolve3d_inplace(buf, tmp, v.frames(), v.height(), v.width(), k);
    VideoVolume out(v.frames(), v.height(), v.width());
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = static_cast<float>(buf[i]);
    return out;
}

}  // namespace spectrack
