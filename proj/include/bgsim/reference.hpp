#pragma once

#include "bgsim/heatmap.hpp"

// Serial reference kernels. The production code paths are OpenMP-parallel;
// these stay single-threaded and loop-naive so tests and the benchmark can
// compare against them.
namespace bgsim::reference {

heatmap::ConfidenceMap convolve(const heatmap::ConfidenceMap& map,
                                const heatmap::TransformKernel& kernel);

}  // namespace bgsim::reference
