#include "bgsim/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bgsim::heatmap {

ConfidenceMap make_map(int width, int height, int joint_id, double fill) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("map dimensions must be positive");
    ConfidenceMap m;
    m.width = width;
    m.height = height;
    m.joint_id = joint_id;
    m.values.assign(static_cast<size_t>(width) * height, fill);
    return m;
}

ConfidenceMap render_gaussian(int width, int height, Vec2 center, double sigma,
                              double amplitude, int joint_id) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("map dimensions must be positive");
    if (!(sigma > 0.0))
        throw std::invalid_argument("sigma must be positive");
    ConfidenceMap m = make_map(width, height, joint_id);
    const double inv = 1.0 / (2.0 * sigma * sigma);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double dx = x - center.x;
            const double dy = y - center.y;
            m.at(x, y) = amplitude * std::exp(-(dx * dx + dy * dy) * inv);
        }
    }
    return m;
}

TransformKernel shift_kernel(int dx, int dy, int size) {
    if (size <= 0 || size % 2 == 0)
        throw std::invalid_argument("kernel size must be odd and positive");
    const int half = size / 2;
    if (std::abs(dx) > half || std::abs(dy) > half)
        throw std::invalid_argument("shift offset (" + std::to_string(dx) + "," +
                                    std::to_string(dy) + ") exceeds kernel half-width " +
                                    std::to_string(half));
    TransformKernel k;
    k.size = size;
    k.weights.assign(static_cast<size_t>(size) * size, 0.0);
    k.at(half + dx, half + dy) = 1.0;
    return k;
}

ConfidenceMap convolve(const ConfidenceMap& map, const TransformKernel& kernel) {
    if (kernel.size <= 0 || kernel.size % 2 == 0)
        throw std::invalid_argument("kernel size must be odd and positive");
    if (kernel.size > map.width || kernel.size > map.height)
        throw std::invalid_argument("kernel larger than map");
    ConfidenceMap out;
    out.width = map.width;
    out.height = map.height;
    out.joint_id = map.joint_id;
    out.values.assign(map.values.size(), 0.0);
    const int half = kernel.size / 2;
    // Same per-cell accumulation order as reference::convolve so results are
    // bit-identical regardless of thread count.
#pragma omp parallel for schedule(static)
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            double acc = 0.0;
            for (int ky = -half; ky <= half; ++ky) {
                for (int kx = -half; kx <= half; ++kx) {
                    const int sx = x - kx;
                    const int sy = y - ky;
                    if (sx < 0 || sx >= map.width || sy < 0 || sy >= map.height) continue;
                    acc += kernel.at(kx + half, ky + half) * map.at(sx, sy);
                }
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

ConfidenceMap fuse_shifted(const ConfidenceMap& target, const ConfidenceMap& source,
                           const TransformKernel& kernel) {
    if (target.width != source.width || target.height != source.height)
        throw std::invalid_argument("fuse_shifted: map dimensions differ");
    ConfidenceMap shifted = convolve(source, kernel);
    ConfidenceMap out = target;
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] += shifted.values[i];
    return out;
}

std::vector<Peak> find_peaks(const ConfidenceMap& map, double threshold, int nms_radius) {
    if (nms_radius < 0) throw std::invalid_argument("nms_radius must be non-negative");
    std::vector<Peak> peaks;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const double v = map.at(x, y);
            if (v < threshold) continue;
            // Maximal within its Chebyshev window; equal values yield to the
            // row-major-first cell so plateaus produce one deterministic peak.
            bool maximal = true;
            for (int wy = std::max(0, y - nms_radius);
                 maximal && wy <= std::min(map.height - 1, y + nms_radius); ++wy) {
                for (int wx = std::max(0, x - nms_radius);
                     wx <= std::min(map.width - 1, x + nms_radius); ++wx) {
                    if (wx == x && wy == y) continue;
                    const double w = map.at(wx, wy);
                    if (w > v || (w == v && row_major_less({wx, wy}, {x, y}))) {
                        maximal = false;
                        break;
                    }
                }
            }
            if (maximal) peaks.push_back({{x, y}, v, map.joint_id});
        }
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        if (a.value != b.value) return a.value > b.value;
        return row_major_less(a.position, b.position);
    });
    return peaks;
}

}  // namespace bgsim::heatmap
