#pragma once

#include <vector>

#include "bgsim/skeleton.hpp"

namespace bgsim::metrics {

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    int v = 0;  // 0 unlabeled, 1 labeled occluded, 2 labeled visible

    bool operator==(const Keypoint&) const = default;
};

struct GroundTruthPerson {
    std::vector<Keypoint> keypoints;
    double scale = 1.0;  // object scale, sqrt of area

    bool operator==(const GroundTruthPerson&) const = default;
};

// Keypoint similarity: mean over labeled keypoints of
// exp(-d_i^2 / (2 s^2 k_i^2)). Throws std::domain_error when no keypoint is
// labeled, std::invalid_argument on size mismatch or non-positive scale.
double oks(const GroundTruthPerson& gt, const skeleton::PoseConfiguration& pred,
           const std::vector<double>& k);

struct MatchPair {
    int gt = -1;
    int pred = -1;
    double oks = 0.0;
};

struct MatchResult {
    std::vector<MatchPair> pairs;
    std::vector<int> unmatched_gt;
    std::vector<int> unmatched_pred;
};

// Greedy matching: predictions in descending score order (ties keep input
// order) each take the unmatched gt with the highest OKS >= threshold (ties
// go to the lower gt index).
MatchResult greedy_match(const std::vector<GroundTruthPerson>& gts,
                         const std::vector<skeleton::PoseConfiguration>& preds,
                         const std::vector<double>& k, double threshold);

struct ImageSample {
    std::vector<GroundTruthPerson> gts;
    std::vector<skeleton::PoseConfiguration> preds;
};

struct ApResult {
    std::vector<double> ap;   // per threshold, input order
    double mean_ap = 0.0;     // mean over thresholds
    double ar = 0.0;          // mean detection recall over thresholds
    int excluded_images = 0;  // images with no ground truth
};

// Detections pooled across images and ranked by score (ties by image then
// prediction index); AP is the area under the monotone precision envelope
// (all-point interpolation). Images without ground truth are excluded.
ApResult match_and_ap(const std::vector<ImageSample>& images, const std::vector<double>& k,
                      const std::vector<double>& thresholds);

std::vector<double> default_oks_thresholds();  // 0.50, 0.55, ..., 0.95

struct PckhResult {
    std::vector<long long> correct;  // per joint id
    std::vector<long long> scored;
    std::vector<double> accuracy;  // correct/scored, -1 when never scored
    double total = 0.0;
    int skipped = 0;  // instances without a usable head size
};

// Index-aligned PCKh: prediction i is compared against gt i; a joint is
// correct when its distance to the labeled gt keypoint is <= alpha *
// head_sizes[i]. Instances with missing or non-positive head size are
// skipped and counted.
PckhResult pckh_match(const std::vector<GroundTruthPerson>& gts,
                      const std::vector<skeleton::PoseConfiguration>& preds, double alpha,
                      const std::vector<double>& head_sizes);

}  // namespace bgsim::metrics
