#pragma once

#include <vector>

#include "bgsim/geometry.hpp"

namespace bgsim::heatmap {

// Per-joint confidence map. Dense row-major grid of responses.
struct ConfidenceMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;  // size width * height, index y * width + x
    int joint_id = -1;

    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    bool in_bounds(Cell c) const { return in_bounds(c.x, c.y); }

    bool operator==(const ConfidenceMap&) const = default;
};

// Square odd-sized convolution kernel used to shift confidence between joints.
struct TransformKernel {
    int size = 0;                 // odd
    std::vector<double> weights;  // size * size, row-major, center at (size/2, size/2)

    double at(int kx, int ky) const { return weights[static_cast<size_t>(ky) * size + kx]; }
    double& at(int kx, int ky) { return weights[static_cast<size_t>(ky) * size + kx]; }
};

struct Peak {
    Cell position;
    double value = 0.0;
    int joint_id = -1;
};

inline constexpr int kDefaultKernelSize = 7;

ConfidenceMap make_map(int width, int height, int joint_id = -1, double fill = 0.0);

// Isotropic Gaussian: amplitude * exp(-||c - center||^2 / (2 sigma^2)) at every cell.
ConfidenceMap render_gaussian(int width, int height, Vec2 center, double sigma,
                              double amplitude = 1.0, int joint_id = -1);

// Kernel with a single unit weight displaced (dx, dy) from the center;
// convolving a map with it translates content by (dx, dy).
TransformKernel shift_kernel(int dx, int dy, int size = kDefaultKernelSize);

// Zero-padded convolution, output has the input's dimensions.
// out(x, y) = sum_k w(k) * in(x - k.x, y - k.y), k relative to the kernel center.
ConfidenceMap convolve(const ConfidenceMap& map, const TransformKernel& kernel);

// target + convolve(source, kernel); the occlusion-recovery fusion step.
ConfidenceMap fuse_shifted(const ConfidenceMap& target, const ConfidenceMap& source,
                           const TransformKernel& kernel);

// Local maxima with value >= threshold, pairwise separated by more than
// nms_radius in Chebyshev distance, sorted by value descending, ties by (y, x).
std::vector<Peak> find_peaks(const ConfidenceMap& map, double threshold, int nms_radius);

}  // namespace bgsim::heatmap
