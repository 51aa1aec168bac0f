#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "spectrack/errors.hpp"
#include "spectrack/spectral.hpp"
#include "spectrack/tracking.hpp"
#include "test_support.hpp"

using namespace spectrack;
using test_support::random_volume;
using test_support::u01;

namespace {

SpectralParams make_params(double alpha, double p, int n_iter, const GaussianKernel3D& k) {
    SpectralParams params;
    params.alpha = alpha;
    params.p = p;
    params.n_iter = n_iter;
    params.kernel = k;
    return params;
}

VideoVolume mirror_x(const VideoVolume& v) {
    VideoVolume out(v.frames(), v.height(), v.width());
    for (int t = 0; t < v.frames(); ++t)
        for (int y = 0; y < v.height(); ++y)
            for (int x = 0; x < v.width(); ++x)
                out.set(t, y, x, v.at(t, y, v.width() - 1 - x));
    return out;
}

double rayleigh(const VideoVolume& x, const DenseAdjacency& m) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < m.n; ++i) {
        double mx = 0.0;
        for (std::size_t j = 0; j < m.n; ++j) {
            mx += m.at(i, j) * static_cast<double>(x.data()[j]);
        }
        num += static_cast<double>(x.data()[i]) * mx;
        den += static_cast<double>(x.data()[i]) * static_cast<double>(x.data()[i]);
    }
    return num / den;
}

VideoVolume slice_of(const VideoVolume& v, int t) {
    VideoVolume out(1, v.height(), v.width());
    for (int y = 0; y < v.height(); ++y)
        for (int x = 0; x < v.width(); ++x) out.set(0, y, x, v.at(t, y, x));
    return out;
}

}  // namespace

TEST_CASE("combiner is a per-voxel sigmoid of the weighted channel sum") {
    ChannelStack ones(std::vector<VideoVolume>{VideoVolume(1, 2, 2, 1.0f)});
    CombinerWeights cw;
    cw.w = {2.0};
    cw.b = -1.0;
    const VideoVolume out = combine_channels(ones, cw);
    for (float v : out.data()) {
        CHECK(v == doctest::Approx(0.7310585786).epsilon(1e-7));
    }

    ChannelStack two(std::vector<VideoVolume>{VideoVolume(1, 1, 1, 0.8f),
                                              VideoVolume(1, 1, 1, 0.3f)});
    CombinerWeights mix;
    mix.w = {1.0, -1.0};
    mix.b = 0.0;
    CHECK(combine_channels(two, mix).at(0, 0, 0) ==
          doctest::Approx(1.0 / (1.0 + std::exp(-0.5))).epsilon(1e-7));
}

TEST_CASE("combiner output is strictly inside (0, 1) even when saturated") {
    ChannelStack cs(std::vector<VideoVolume>{VideoVolume(1, 2, 2, 1.0f)});
    CombinerWeights hot;
    hot.w = {500.0};
    CombinerWeights cold;
    cold.w = {-500.0};
    const VideoVolume high = combine_channels(cs, hot);
    for (float v : high.data()) {
        CHECK(v < 1.0f);
        CHECK(v > 0.0f);
    }
    const VideoVolume low = combine_channels(cs, cold);
    for (float v : low.data()) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }
}

TEST_CASE("combiner grows with any positively weighted channel") {
    CombinerWeights cw;
    cw.w = {0.7, 1.3};
    cw.b = -0.4;
    float prev = 0.0f;
    for (float level : {0.0f, 0.25f, 0.5f, 0.75f, 1.0f}) {
        ChannelStack cs(std::vector<VideoVolume>{VideoVolume(1, 1, 1, level),
                                                 VideoVolume(1, 1, 1, 0.5f)});
        const float v = combine_channels(cs, cw).at(0, 0, 0);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("combiner validates weights against the stack") {
    ChannelStack cs(std::vector<VideoVolume>{VideoVolume(1, 1, 1, 0.5f)});
    CombinerWeights wrong;
    wrong.w = {1.0, 2.0};
    CHECK_THROWS_AS(combine_channels(cs, wrong), ValidationError);
    CombinerWeights nan_w;
    nan_w.w = {std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(combine_channels(cs, nan_w), ValidationError);
    CombinerWeights inf_b;
    inf_b.w = {1.0};
    inf_b.b = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(combine_channels(cs, inf_b), ValidationError);
}

TEST_CASE("a single voxel normalizes to exactly one") {
    const SpectralParams params = make_params(1.0, 1.0, 1, build_kernel(1.0, 1.0, 0, 0));
    const VideoVolume v(1, 1, 1, 0.7f);
    const VideoVolume out = spectral_iteration(v, v, v, params);
    CHECK(out.at(0, 0, 0) == 1.0f);
}

TEST_CASE("two symmetric voxels split the unit norm evenly") {
    const SpectralParams params = make_params(1.0, 1.0, 1, build_kernel(1.0, 1.0, 0, 1));
    const VideoVolume x(1, 1, 2, 1.0f);
    const VideoVolume s(1, 1, 2, 0.5f);
    const VideoVolume out = spectral_iteration(x, s, s, params);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(out.at(0, 0, 0) == doctest::Approx(inv_sqrt2).epsilon(1e-7));
    CHECK(out.at(0, 0, 1) == doctest::Approx(inv_sqrt2).epsilon(1e-7));
}

TEST_CASE("iterates always come back with unit norm") {
    std::mt19937_64 rng(101);
    const SpectralParams params = make_params(1.5, 1.0, 1, build_kernel(0.8, 0.8, 1, 1));
    for (int trial = 0; trial < 10; ++trial) {
        const VideoVolume s = random_volume(rng, 2, 5, 5, 0.05, 0.95);
        const VideoVolume f = random_volume(rng, 2, 5, 5, 0.0, 1.0);
        const VideoVolume x = random_volume(rng, 2, 5, 5, 0.05, 0.95);
        CHECK(l2_norm(spectral_iteration(x, s, f, params)) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("a dead unary map collapses the iteration") {
    const SpectralParams params = make_params(1.0, 1.0, 1, build_kernel(1.0, 1.0, 1, 1));
    const VideoVolume x(2, 4, 4, 0.5f);
    const VideoVolume dead(2, 4, 4, std::numeric_limits<float>::min());
    CHECK_THROWS_AS(spectral_iteration(x, dead, dead, params), SpectralCollapseError);
}

TEST_CASE("iteration rejects bad parameters and mismatched shapes") {
    const GaussianKernel3D k = build_kernel(1.0, 1.0, 1, 1);
    const VideoVolume v(1, 2, 2, 0.5f);
    CHECK_THROWS_AS(spectral_iteration(v, v, v, make_params(0.0, 1.0, 1, k)), ValidationError);
    CHECK_THROWS_AS(spectral_iteration(v, v, v, make_params(1.0, -1.0, 1, k)), ValidationError);
    CHECK_THROWS_AS(spectral_iteration(v, v, v, make_params(1.0, 1.0, 0, k)), ValidationError);
    const VideoVolume other(1, 2, 3, 0.5f);
    CHECK_THROWS_AS(spectral_iteration(v, v, other, make_params(1.0, 1.0, 1, k)),
                    ValidationError);
}

TEST_CASE("filtered iteration matches the dense matrix step") {
    std::mt19937_64 rng(4242);
    const double grid[] = {0.5, 1.0, 2.0};
    for (int trial = 0; trial < 25; ++trial) {
        const int frames = 1 + static_cast<int>(rng() % 3);
        const int height = 2 + static_cast<int>(rng() % 5);
        const int width = 2 + static_cast<int>(rng() % 5);
        const SpectralParams params =
            make_params(grid[rng() % 3], grid[rng() % 3], 1,
                        build_kernel(0.5 + u01(rng), 0.5 + u01(rng), 1, 1));
        const VideoVolume s = random_volume(rng, frames, height, width, 0.05, 0.95);
        const VideoVolume f = random_volume(rng, frames, height, width, 0.0, 1.0);
        VideoVolume fast = random_volume(rng, frames, height, width, 0.05, 0.95);
        VideoVolume slow = fast;
        const DenseAdjacency m = build_dense_adjacency(s, f, params);
        for (int step = 0; step < 3; ++step) {
            fast = spectral_iteration(fast, s, f, params);
            slow = oracle_step(slow, m);
            for (std::size_t i = 0; i < fast.size(); ++i) {
                CHECK(std::abs(fast.data()[i] - slow.data()[i]) < 1e-6);
            }
        }
    }
}

TEST_CASE("dense adjacency of a single voxel is the closed-form scalar") {
    const VideoVolume s(1, 1, 1, 0.6f);
    const VideoVolume f(1, 1, 1, 0.3f);
    const SpectralParams p0 = make_params(2.0, 2.0, 1, build_kernel(1.0, 1.0, 0, 0));
    const DenseAdjacency m0 = build_dense_adjacency(s, f, p0);
    CHECK(m0.n == 1);
    const double sp = std::pow(static_cast<double>(0.6f), 2.0);
    CHECK(m0.at(0, 0) == doctest::Approx(sp * sp * 0.5).epsilon(1e-12));

    // With a radius the self-weight is the product of the three center taps.
    const GaussianKernel3D k1 = build_kernel(1.0, 1.0, 1, 1);
    const DenseAdjacency m1 = build_dense_adjacency(s, f, make_params(2.0, 2.0, 1, k1));
    CHECK(m1.at(0, 0) ==
          doctest::Approx(sp * sp * 0.5 * k1.weights_t[1] * k1.weights_y[1] * k1.weights_x[1])
              .epsilon(1e-12));
}

TEST_CASE("dense adjacency is symmetric and zero outside the kernel support") {
    std::mt19937_64 rng(919);
    const VideoVolume s = random_volume(rng, 2, 3, 4, 0.05, 0.95);
    const VideoVolume f = random_volume(rng, 2, 3, 4, 0.0, 1.0);
    const SpectralParams params = make_params(1.0, 1.0, 1, build_kernel(0.7, 0.9, 1, 1));
    const DenseAdjacency m = build_dense_adjacency(s, f, params);
    for (int t = 0; t < 2; ++t)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 4; ++x)
                for (int tt = 0; tt < 2; ++tt)
                    for (int yy = 0; yy < 3; ++yy)
                        for (int xx = 0; xx < 4; ++xx) {
                            const std::size_t i = s.index(t, y, x);
                            const std::size_t j = s.index(tt, yy, xx);
                            CHECK(m.at(i, j) == m.at(j, i));
                            const bool supported = std::abs(t - tt) <= 1 &&
                                                   std::abs(y - yy) <= 1 && std::abs(x - xx) <= 1;
                            if (!supported) CHECK(m.at(i, j) == 0.0);
                        }
}

TEST_CASE("a constant pairwise map makes every supported entry positive") {
    std::mt19937_64 rng(920);
    const VideoVolume s = random_volume(rng, 2, 3, 3, 0.05, 0.95);
    const VideoVolume f(2, 3, 3, 0.4f);
    const DenseAdjacency m =
        build_dense_adjacency(s, f, make_params(1.0, 1.0, 1, build_kernel(1.0, 1.0, 1, 1)));
    for (int t = 0; t < 2; ++t)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x)
                for (int tt = 0; tt < 2; ++tt)
                    for (int yy = 0; yy < 3; ++yy)
                        for (int xx = 0; xx < 3; ++xx) {
                            const bool supported = std::abs(t - tt) <= 1 &&
                                                   std::abs(y - yy) <= 1 && std::abs(x - xx) <= 1;
                            const double v = m.at(s.index(t, y, x), s.index(tt, yy, xx));
                            if (supported) {
                                CHECK(v > 0.0);
                            } else {
                                CHECK(v == 0.0);
                            }
                        }
}

TEST_CASE("dense adjacency refuses volumes past the node budget") {
    const VideoVolume big(1, 64, 65, 0.5f);
    CHECK_THROWS_AS(
        build_dense_adjacency(big, big, make_params(1.0, 1.0, 1, build_kernel(1.0, 1.0, 1, 1))),
        ValidationError);
}

TEST_CASE("dense step with a uniform diagonal is plain normalization") {
    DenseAdjacency m;
    m.n = 3;
    m.entries.assign(9, 0.0);
    for (std::size_t i = 0; i < 3; ++i) m.at(i, i) = 2.0;
    VideoVolume x(1, 1, 3);
    x.set(0, 0, 0, 3.0f);
    x.set(0, 0, 2, 4.0f);
    const VideoVolume out = oracle_step(x, m);
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.6).epsilon(1e-7));
    CHECK(out.at(0, 0, 1) == 0.0f);
    CHECK(out.at(0, 0, 2) == doctest::Approx(0.8).epsilon(1e-7));

    const VideoVolume wrong(1, 1, 2, 1.0f);
    CHECK_THROWS_AS(oracle_step(wrong, m), ValidationError);
}

TEST_CASE("the Rayleigh quotient never drops along the iteration") {
    // Tight kernels keep each per-axis Toeplitz factor diagonally dominant,
    // so with a constant pairwise map the adjacency is positive semidefinite
    // and power iteration is monotone in the quotient.
    std::mt19937_64 rng(555);
    const SpectralParams params = make_params(1.0, 1.0, 1, build_kernel(0.5, 0.5, 1, 1));
    const VideoVolume s = random_volume(rng, 2, 4, 4, 0.1, 1.0);
    const VideoVolume f(2, 4, 4, 0.4f);
    const DenseAdjacency m = build_dense_adjacency(s, f, params);
    VideoVolume x = l2_normalize(s);
    double prev = rayleigh(x, m);
    for (int step = 0; step < 6; ++step) {
        x = spectral_iteration(x, s, f, params);
        const double cur = rayleigh(x, m);
        CHECK(cur >= prev - 1e-7);
        prev = cur;
    }
}

TEST_CASE("mirroring the frame axis commutes with the iteration") {
    std::mt19937_64 rng(77);
    const SpectralParams params = make_params(1.0, 1.0, 1, build_kernel(0.8, 0.8, 1, 1));
    const VideoVolume s = random_volume(rng, 3, 5, 6, 0.05, 0.95);
    const VideoVolume f = random_volume(rng, 3, 5, 6, 0.0, 1.0);
    const VideoVolume x = random_volume(rng, 3, 5, 6, 0.05, 0.95);
    const VideoVolume direct = mirror_x(spectral_iteration(x, s, f, params));
    const VideoVolume flipped =
        spectral_iteration(mirror_x(x), mirror_x(s), mirror_x(f), params);
    for (std::size_t i = 0; i < direct.size(); ++i) {
        CHECK(std::abs(direct.data()[i] - flipped.data()[i]) < 1e-6);
    }
}

TEST_CASE("refining a crisp static blob keeps its exact box") {
    const BBox box{4, 4, 12, 12};
    VideoVolume mask(8, 16, 16, 0.0f);
    for (int t = 0; t < 8; ++t)
        for (int y = box.y_min; y < box.y_max; ++y)
            for (int x = box.x_min; x < box.x_max; ++x) mask.set(t, y, x, 1.0f);
    ChannelStack cs(std::vector<VideoVolume>{mask, mask});
    CombinerWeights cw;
    cw.w = {6.0, 6.0};
    cw.b = -6.0;
    const SpectralParams params = make_params(1.0, 1.0, 1, build_kernel(0.5, 0.5, 1, 1));
    const VideoVolume refined = refine(cs, cw, params);
    for (int t = 0; t < 8; ++t) {
        const auto extracted = extract_bbox(slice_of(refined, t), 0.75);
        REQUIRE(extracted.has_value());
        CHECK(*extracted == box);
    }
}

TEST_CASE("refined volumes live in the mask range") {
    std::mt19937_64 rng(31337);
    ChannelStack cs(std::vector<VideoVolume>{random_volume(rng, 3, 8, 8),
                                             random_volume(rng, 3, 8, 8)});
    CombinerWeights cw;
    cw.w = {1.0, 1.0};
    cw.b = -1.0;
    const VideoVolume out =
        refine(cs, cw, make_params(1.0, 1.0, 2, build_kernel(1.0, 1.0, 1, 1)));
    for (float v : out.data()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("a featureless scene refines to a near-zero mask, not a detection") {
    ChannelStack cs(std::vector<VideoVolume>{VideoVolume(5, 50, 50, 0.5f)});
    CombinerWeights cw;
    cw.w = {1.0};
    cw.b = -6.0;
    const SpectralParams params = make_params(1.0, 1.0, 1, build_kernel(0.5, 0.5, 1, 1));
    const VideoVolume out = refine(cs, cw, params);
    const double gate = 1.5 / std::sqrt(static_cast<double>(out.size()));
    for (float v : out.data()) CHECK(static_cast<double>(v) < gate);
    for (int t = 0; t < out.frames(); ++t) {
        CHECK_FALSE(extract_bbox(slice_of(out, t), 0.75).has_value());
    }
}

TEST_CASE("an all-off combiner starves the iteration into collapse") {
    ChannelStack cs(std::vector<VideoVolume>{VideoVolume(2, 4, 4, 0.0f)});
    CombinerWeights cw;
    cw.w = {0.0};
    cw.b = -20.0;
    CHECK_THROWS_AS(refine(cs, cw, make_params(1.0, 1.0, 1, build_kernel(1.0, 1.0, 1, 1))),
                    SpectralCollapseError);
}

TEST_CASE("refine insists on at least one iteration") {
    ChannelStack cs(std::vector<VideoVolume>{VideoVolume(2, 4, 4, 0.5f)});
    CombinerWeights cw;
    cw.w = {1.0};
    SpectralParams params = make_params(1.0, 1.0, 1, build_kernel(1.0, 1.0, 1, 1));
    params.n_iter = 0;
    CHECK_THROWS_AS(refine(cs, cw, params), ValidationError);
}
