#pragma once

#include <vector>

#include "bgsim/heatmap.hpp"
#include "bgsim/inference.hpp"
#include "bgsim/skeleton.hpp"

namespace bgsim::cascade {

// Joint ids per stage, in stage order 1..3. Disjoint; union covers the model.
std::vector<std::vector<int>> stage_plan(const skeleton::SkeletonModel& model);

struct CascadeOptions {
    double sigma = 0.1;               // hypothesis retention for inference
    inference::DpBackend backend = inference::DpBackend::Separable;
    double detection_threshold = 0.2; // map max below this = undetected joint
    int nms_radius = 5;               // peak separation and masking radius, cells
    int max_persons = 8;
};

struct StageBase {
    int stage = 0;
    int joint = -1;  // original joint id
    Cell position;
    double response = 0.0;
};

struct PersonResult {
    skeleton::PoseConfiguration pose;  // indexed by original joint id
    std::vector<char> assigned;        // per joint: covered by a run stage
    std::vector<StageBase> per_stage_base;
    double agreement = 0.0;  // directional fusion value of the last stage
};

// Highest map response among the active joints; ties go to the lower joint
// id, then the row-major earlier cell.
StageBase select_base_point(const std::vector<heatmap::ConfidenceMap>& maps,
                            const std::vector<int>& active_joints);

// One cascade stage: restricts the model to stages 1..stage_index, boosts the
// maps of previously occluded joints with confidence shifted from an assigned
// neighbor, then runs inference rooted at the base point. The base prefers
// joints placed by earlier stages (whose maps are windowed to their committed
// cells, keeping the stage on the same person) and falls back to the new
// stage's joints when none are detectable. A seed, when given, fixes the
// stage-1 base outright. Joints assigned by earlier stages are revised only
// when the new configuration strictly improves their unary-plus-incident-
// pairwise contribution.
PersonResult run_stage(int stage_index, const skeleton::SkeletonModel& model,
                       const std::vector<heatmap::ConfidenceMap>& maps, PersonResult state,
                       const CascadeOptions& options = {}, const StageBase* seed = nullptr);

// All three stages for a single person on the given maps; the optional seed
// anchors stage 1.
PersonResult run_cascade(const skeleton::SkeletonModel& model,
                         const std::vector<heatmap::ConfidenceMap>& maps,
                         const CascadeOptions& options = {}, const StageBase* seed = nullptr);

// Multi-person assembly: every surviving stage-1 peak seeds one cascade
// (strongest first, up to max_persons); each accepted person masks a square
// of the NMS radius around every claimed joint before the next seed runs.
// Persons that still collide with an earlier claim are dropped as duplicate
// detections. Results are sorted by pose score, descending.
std::vector<PersonResult> assemble_persons(const skeleton::SkeletonModel& model,
                                           const std::vector<heatmap::ConfidenceMap>& maps,
                                           const CascadeOptions& options = {});

}  // namespace bgsim::cascade
