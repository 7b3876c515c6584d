#pragma once

#include <string>
#include <vector>

#include "bgsim/metrics.hpp"
#include "bgsim/skeleton.hpp"

namespace bgsim::posefile {

// Pose/ground-truth JSON document:
//   { "images": [ { "id": int, "persons": [
//       { "keypoints": [[x, y, v], ...],       required; a 4th per-keypoint
//                                              entry (response) is accepted
//         "scale": number,                      ground truth, default 1
//         "score": number,                      predictions, default 0
//         "occlusions": [int, ...] } ] } ] }    optional, same length
// Unknown keys are ignored, so prediction files may carry extra data.

struct Person {
    std::vector<metrics::Keypoint> keypoints;
    double scale = 1.0;
    double score = 0.0;
    std::vector<int> occlusions;  // empty when absent

    bool operator==(const Person&) const = default;
};

struct Image {
    int id = 0;
    std::vector<Person> persons;

    bool operator==(const Image&) const = default;
};

struct Document {
    std::vector<Image> images;

    bool operator==(const Document&) const = default;
};

// Parse errors name the first offending key, e.g.
// 'images[2].persons[0].keypoints[3] must be [x, y, v]'.
Document from_json(const std::string& text);
std::string to_json(const Document& doc);

Document load(const std::string& path);
void save(const std::string& path, const Document& doc);  // atomic (tmp + rename)

// Occlusion code -> visibility flag: visible joints are v = 2, occluded ones
// (either state) v = 1, matching the labeled-but-occluded convention.
Person from_pose(const skeleton::PoseConfiguration& pose, double score);

metrics::GroundTruthPerson to_ground_truth(const Person& person);

}  // namespace bgsim::posefile
