#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"

#include "bgsim/heatmap.hpp"
#include "bgsim/reference.hpp"

using namespace bgsim;
using heatmap::ConfidenceMap;
using heatmap::TransformKernel;

namespace {

// Independent transcription of the Gaussian formula, cell by cell.
double gaussian_at(int x, int y, Vec2 c, double sigma, double amp) {
    const double dx = x - c.x;
    const double dy = y - c.y;
    return amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
}

ConfidenceMap random_map(std::mt19937& gen, int w, int h) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    ConfidenceMap m = heatmap::make_map(w, h);
    for (double& v : m.values) v = dist(gen);
    return m;
}

}  // namespace

TEST_CASE("render_gaussian matches the formula everywhere") {
    const ConfidenceMap m = heatmap::render_gaussian(9, 7, {4.3, 2.1}, 1.5, 0.8, 3);
    CHECK(m.joint_id == 3);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            CHECK(m.at(x, y) == doctest::Approx(gaussian_at(x, y, {4.3, 2.1}, 1.5, 0.8))
                                    .epsilon(1e-12));
}

TEST_CASE("gaussian peaks at the nearest cell to an integer center") {
    const ConfidenceMap m = heatmap::render_gaussian(11, 11, {5.0, 6.0}, 1.5);
    double best = -1.0;
    Cell arg{-1, -1};
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 11; ++x)
            if (m.at(x, y) > best) {
                best = m.at(x, y);
                arg = {x, y};
            }
    CHECK(arg == Cell{5, 6});
    CHECK(best == doctest::Approx(1.0));
}

TEST_CASE("shift_kernel places a single unit weight") {
    const TransformKernel k = heatmap::shift_kernel(2, -1, 7);
    REQUIRE(k.size == 7);
    int nonzero = 0;
    for (int ky = 0; ky < 7; ++ky)
        for (int kx = 0; kx < 7; ++kx)
            if (k.at(kx, ky) != 0.0) {
                ++nonzero;
                CHECK(k.at(kx, ky) == 1.0);
                CHECK(kx == 3 + 2);
                CHECK(ky == 3 - 1);
            }
    CHECK(nonzero == 1);
}

TEST_CASE("shift_kernel rejects out-of-kernel shifts and even sizes") {
    CHECK_THROWS_AS((void)heatmap::shift_kernel(4, 0, 7), std::invalid_argument);
    CHECK_THROWS_AS((void)heatmap::shift_kernel(0, 0, 6), std::invalid_argument);
}

TEST_CASE("convolving with a shift kernel translates the argmax exactly") {
    const ConfidenceMap m = heatmap::render_gaussian(15, 15, {7.0, 7.0}, 1.2);
    for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx) {
            const ConfidenceMap out = heatmap::convolve(m, heatmap::shift_kernel(dx, dy, 7));
            double best = -1.0;
            Cell arg{-1, -1};
            for (int y = 0; y < 15; ++y)
                for (int x = 0; x < 15; ++x)
                    if (out.at(x, y) > best) {
                        best = out.at(x, y);
                        arg = {x, y};
                    }
            CHECK(arg == Cell{7 + dx, 7 + dy});
        }
}

TEST_CASE("convolve agrees bit for bit with the serial reference") {
    std::mt19937 gen(99);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const ConfidenceMap m = random_map(gen, 12 + rep % 5, 9 + rep % 3);
        TransformKernel k;
        k.size = 1 + 2 * (rep % 3);
        k.weights.resize(static_cast<size_t>(k.size) * k.size);
        for (double& w : k.weights) w = dist(gen);
        const ConfidenceMap a = heatmap::convolve(m, k);
        const ConfidenceMap b = reference::convolve(m, k);
        REQUIRE(a.values.size() == b.values.size());
        for (size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
    }
}

TEST_CASE("fuse_shifted adds the translated source onto the target") {
    ConfidenceMap target = heatmap::make_map(9, 9, -1, 0.25);
    ConfidenceMap source = heatmap::make_map(9, 9);
    source.at(4, 4) = 2.0;
    const ConfidenceMap fused =
        heatmap::fuse_shifted(target, source, heatmap::shift_kernel(1, 2, 5));
    CHECK(fused.at(5, 6) == doctest::Approx(0.25 + 2.0));
    CHECK(fused.at(4, 4) == doctest::Approx(0.25));
}

TEST_CASE("find_peaks keeps strict local maxima above threshold") {
    ConfidenceMap m = heatmap::make_map(12, 12);
    m.at(2, 2) = 1.0;
    m.at(9, 9) = 0.8;
    m.at(9, 2) = 0.1;  // below threshold
    const auto peaks = heatmap::find_peaks(m, 0.2, 2);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0].position == Cell{2, 2});
    CHECK(peaks[1].position == Cell{9, 9});
    CHECK(peaks[0].value == 1.0);
}

TEST_CASE("find_peaks suppresses within the radius and keeps beyond it") {
    ConfidenceMap m = heatmap::make_map(20, 5);
    m.at(3, 2) = 1.0;
    m.at(6, 2) = 0.9;   // Chebyshev 3 from the first -> suppressed at radius 3
    m.at(10, 2) = 0.8;  // Chebyshev 7 -> kept
    const auto peaks = heatmap::find_peaks(m, 0.5, 3);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0].position == Cell{3, 2});
    CHECK(peaks[1].position == Cell{10, 2});
}

TEST_CASE("find_peaks tie order is row-major") {
    ConfidenceMap m = heatmap::make_map(16, 16);
    m.at(12, 3) = 0.7;
    m.at(2, 3) = 0.7;
    m.at(2, 12) = 0.7;
    const auto peaks = heatmap::find_peaks(m, 0.5, 2);
    REQUIRE(peaks.size() == 3);
    CHECK(peaks[0].position == Cell{2, 3});
    CHECK(peaks[1].position == Cell{12, 3});
    CHECK(peaks[2].position == Cell{2, 12});
}
