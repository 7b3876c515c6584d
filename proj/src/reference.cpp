#include "bgsim/reference.hpp"

namespace bgsim::reference {

using heatmap::ConfidenceMap;
using heatmap::TransformKernel;

ConfidenceMap convolve(const ConfidenceMap& map, const TransformKernel& kernel) {
    ConfidenceMap out;
    out.width = map.width;
    out.height = map.height;
    out.joint_id = map.joint_id;
    out.values.assign(map.values.size(), 0.0);
    const int half = kernel.size / 2;
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

}  // namespace bgsim::reference
