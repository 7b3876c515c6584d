#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bgsim/heatmap.hpp"

namespace bgsim::cmf {

// Confidence-map stack file.
//   header : ASCII "CMF1 <width> <height> <num_joints>\n"
//   payload: num_joints * height * width IEEE-754 float32, little-endian,
//            joint-major then row-major.

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

std::vector<uint8_t> encode(const std::vector<heatmap::ConfidenceMap>& maps);
std::vector<heatmap::ConfidenceMap> decode(const std::vector<uint8_t>& bytes);

void write_file(const std::string& path, const std::vector<heatmap::ConfidenceMap>& maps);
std::vector<heatmap::ConfidenceMap> read_file(const std::string& path);

}  // namespace bgsim::cmf
