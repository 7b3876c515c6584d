#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "bgsim/metrics.hpp"

using namespace bgsim;
using metrics::GroundTruthPerson;
using metrics::ImageSample;
using metrics::Keypoint;
using skeleton::PoseConfiguration;

namespace {

GroundTruthPerson one_point_gt(double x, double y, double scale = 1.0, int v = 2) {
    GroundTruthPerson gt;
    gt.keypoints = {{x, y, v}};
    gt.scale = scale;
    return gt;
}

PoseConfiguration one_point_pred(int x, int y, double score = 0.0) {
    PoseConfiguration p;
    p.positions = {{x, y}};
    p.occlusions = {skeleton::OcclusionState::Visible};
    p.score = score;
    return p;
}

}  // namespace

TEST_CASE("similarity is 1 for a perfect prediction and exp(-1) at the scale distance") {
    GroundTruthPerson gt;
    gt.keypoints = {{3.0, 4.0, 2}, {7.0, 2.0, 1}};
    gt.scale = 2.0;
    PoseConfiguration pred;
    pred.positions = {{3, 4}, {7, 2}};
    const std::vector<double> k{0.5, 0.25};
    CHECK(metrics::oks(gt, pred, k) == doctest::Approx(1.0).epsilon(1e-12));

    // One labeled keypoint, displacement chosen so d^2 = 2 s^2 k^2.
    const auto single = one_point_gt(0.0, 0.0, 1.0);
    CHECK(metrics::oks(single, one_point_pred(1, 1), {1.0}) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("similarity ignores unlabeled keypoints and averages over the rest") {
    GroundTruthPerson gt;
    gt.keypoints = {{0.0, 0.0, 2}, {100.0, 100.0, 0}};  // second unlabeled
    gt.scale = 1.0;
    PoseConfiguration pred;
    pred.positions = {{0, 0}, {0, 0}};  // nowhere near the unlabeled point
    CHECK(metrics::oks(gt, pred, {1.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-12));

    gt.keypoints[1].v = 1;  // labeled-occluded points do count
    CHECK(metrics::oks(gt, pred, {1.0, 1.0}) < 0.51);
}

TEST_CASE("similarity is invariant to translation and scale") {
    GroundTruthPerson gt;
    gt.keypoints = {{2.0, 3.0, 2}, {5.0, 1.0, 2}};
    gt.scale = 1.5;
    PoseConfiguration pred;
    pred.positions = {{3, 3}, {5, 2}};
    const std::vector<double> k{0.4, 0.8};
    const double base = metrics::oks(gt, pred, k);

    GroundTruthPerson moved = gt;
    PoseConfiguration moved_pred = pred;
    for (auto& kp : moved.keypoints) {
        kp.x += 17.0;
        kp.y -= 6.0;
    }
    for (auto& c : moved_pred.positions) {
        c.x += 17;
        c.y -= 6;
    }
    CHECK(metrics::oks(moved, moved_pred, k) == doctest::Approx(base).epsilon(1e-9));

    GroundTruthPerson scaled = gt;
    PoseConfiguration scaled_pred = pred;
    scaled.scale = 3.0;  // doubled alongside every coordinate
    for (auto& kp : scaled.keypoints) {
        kp.x *= 2.0;
        kp.y *= 2.0;
    }
    for (auto& c : scaled_pred.positions) {
        c.x *= 2;
        c.y *= 2;
    }
    CHECK(metrics::oks(scaled, scaled_pred, k) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("similarity input validation") {
    const auto gt = one_point_gt(0.0, 0.0);
    CHECK_THROWS_AS((void)metrics::oks(gt, one_point_pred(0, 0), {1.0, 1.0}),
                    std::invalid_argument);
    auto zero_scale = gt;
    zero_scale.scale = 0.0;
    CHECK_THROWS_AS((void)metrics::oks(zero_scale, one_point_pred(0, 0), {1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)metrics::oks(gt, one_point_pred(0, 0), {0.0}),
                    std::invalid_argument);
    const auto unlabeled = one_point_gt(0.0, 0.0, 1.0, 0);
    CHECK_THROWS_AS((void)metrics::oks(unlabeled, one_point_pred(0, 0), {1.0}),
                    std::domain_error);
}

TEST_CASE("greedy matching takes predictions by score and gts by similarity") {
    const std::vector<GroundTruthPerson> gts{one_point_gt(0.0, 0.0), one_point_gt(10.0, 0.0)};
    const std::vector<double> k{1.0};
    std::vector<PoseConfiguration> preds{
        one_point_pred(11, 0, 0.5),  // near gt1, weakest score
        one_point_pred(0, 0, 0.9),   // exact on gt0, strongest
        one_point_pred(30, 0, 0.7),  // near nothing
    };
    const auto m = metrics::greedy_match(gts, preds, k, 0.5);
    REQUIRE(m.pairs.size() == 2);
    CHECK(m.pairs[0].gt == 0);
    CHECK(m.pairs[0].pred == 1);
    CHECK(m.pairs[0].oks == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.pairs[1].gt == 1);
    CHECK(m.pairs[1].pred == 0);
    CHECK(m.pairs[1].oks == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(m.unmatched_pred == std::vector<int>{2});
    CHECK(m.unmatched_gt.empty());
}

TEST_CASE("a similarity exactly at the threshold still matches") {
    // d^2 = 2 s^2 k^2 gives exp(-1) exactly (the exponent is exactly -1).
    const std::vector<GroundTruthPerson> gts{one_point_gt(0.0, 0.0)};
    const std::vector<PoseConfiguration> preds{one_point_pred(1, 1, 1.0)};
    const double tau = std::exp(-1.0);
    CHECK(metrics::greedy_match(gts, preds, {1.0}, tau).pairs.size() == 1);
    const double above = std::nextafter(tau, 1.0);
    CHECK(metrics::greedy_match(gts, preds, {1.0}, above).pairs.empty());
}

TEST_CASE("equal similarity goes to the lower gt index") {
    const std::vector<GroundTruthPerson> gts{one_point_gt(5.0, 5.0), one_point_gt(5.0, 5.0)};
    const std::vector<PoseConfiguration> preds{one_point_pred(5, 5, 1.0)};
    const auto m = metrics::greedy_match(gts, preds, {1.0}, 0.5);
    REQUIRE(m.pairs.size() == 1);
    CHECK(m.pairs[0].gt == 0);
    CHECK(m.unmatched_gt == std::vector<int>{1});
}

TEST_CASE("average precision on a worked example") {
    ImageSample img;
    img.gts = {one_point_gt(0.0, 0.0), one_point_gt(10.0, 0.0)};
    img.preds = {
        one_point_pred(11, 0, 0.5),  // matches gt1 with oks exp(-1/2) ~ 0.607
        one_point_pred(0, 0, 0.9),   // matches gt0 with oks 1
        one_point_pred(30, 0, 0.7),  // false positive
    };
    ImageSample empty;  // no ground truth: excluded, its predictions too
    empty.preds = {one_point_pred(1, 1, 99.0)};
    const std::vector<ImageSample> images{img, empty};
    const std::vector<double> k{1.0};

    // Ranked detections at tau=0.5: tp(0.9), fp(0.7), tp(0.5).
    // Precisions 1, 1/2, 2/3; monotone envelope 1, 2/3, 2/3;
    // AP = (1 + 2/3) / 2 gts = 5/6. At tau=0.9 only the exact hit survives:
    // AP = 1/2. Recalls 1 and 1/2.
    const auto res = metrics::match_and_ap(images, k, {0.5, 0.9});
    REQUIRE(res.ap.size() == 2);
    CHECK(res.ap[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(res.ap[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(res.mean_ap == doctest::Approx((5.0 / 6.0 + 0.5) / 2.0).epsilon(1e-12));
    CHECK(res.ar == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(res.excluded_images == 1);
}

TEST_CASE("average precision never increases with the threshold") {
    ImageSample img;
    img.gts = {one_point_gt(0.0, 0.0), one_point_gt(8.0, 0.0), one_point_gt(0.0, 8.0)};
    img.preds = {one_point_pred(1, 0, 0.9), one_point_pred(8, 1, 0.8),
                 one_point_pred(2, 7, 0.7)};
    const auto thresholds = metrics::default_oks_thresholds();
    REQUIRE(thresholds.size() == 10);
    CHECK(thresholds.front() == doctest::Approx(0.50));
    CHECK(thresholds.back() == doctest::Approx(0.95));
    const auto res = metrics::match_and_ap({img}, {1.0}, thresholds);
    for (size_t t = 1; t < res.ap.size(); ++t) CHECK(res.ap[t] <= res.ap[t - 1] + 1e-12);
}

TEST_CASE("pckh scores index-aligned pairs against the head size") {
    std::vector<GroundTruthPerson> gts(2);
    gts[0].keypoints = {{0.0, 0.0, 2}, {5.0, 5.0, 2}, {9.0, 9.0, 0}};
    gts[1].keypoints = {{0.0, 0.0, 2}, {5.0, 5.0, 2}, {9.0, 9.0, 2}};
    std::vector<PoseConfiguration> preds(2);
    preds[0].positions = {{1, 0}, {8, 5}, {9, 9}};
    preds[1].positions = {{0, 0}, {5, 5}, {9, 9}};

    // Second instance has no usable head size and is skipped entirely.
    const auto res = metrics::pckh_match(gts, preds, 0.5, {2.0, -1.0});
    CHECK(res.skipped == 1);
    REQUIRE(res.correct.size() == 3);
    // Joint 0 misses by exactly alpha * head = 1.0; the boundary counts.
    CHECK(res.correct == std::vector<long long>{1, 0, 0});
    CHECK(res.scored == std::vector<long long>{1, 1, 0});
    CHECK(res.accuracy[0] == 1.0);
    CHECK(res.accuracy[1] == 0.0);
    CHECK(res.accuracy[2] == -1.0);  // never scored: unlabeled in the only instance
    CHECK(res.total == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS((void)metrics::pckh_match(gts, preds, 0.0, {2.0, 2.0}),
                    std::invalid_argument);
}
