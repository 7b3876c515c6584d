#include "bgsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bgsim::metrics {

using skeleton::PoseConfiguration;

double oks(const GroundTruthPerson& gt, const PoseConfiguration& pred,
           const std::vector<double>& k) {
    const size_t n = gt.keypoints.size();
    if (pred.positions.size() != n || k.size() != n)
        throw std::invalid_argument("oks: keypoint/constant counts differ");
    if (!(gt.scale > 0.0)) throw std::invalid_argument("oks: scale must be positive");
    double sum = 0.0;
    int labeled = 0;
    for (size_t i = 0; i < n; ++i) {
        if (gt.keypoints[i].v <= 0) continue;
        if (!(k[i] > 0.0)) throw std::invalid_argument("oks: constants must be positive");
        const double dx = pred.positions[i].x - gt.keypoints[i].x;
        const double dy = pred.positions[i].y - gt.keypoints[i].y;
        const double denom = 2.0 * gt.scale * gt.scale * k[i] * k[i];
        sum += std::exp(-(dx * dx + dy * dy) / denom);
        ++labeled;
    }
    if (labeled == 0) throw std::domain_error("oks: no labeled ground-truth keypoints");
    return sum / labeled;
}

MatchResult greedy_match(const std::vector<GroundTruthPerson>& gts,
                         const std::vector<PoseConfiguration>& preds,
                         const std::vector<double>& k, double threshold) {
    std::vector<int> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return preds[a].score > preds[b].score; });
    MatchResult result;
    std::vector<char> gt_taken(gts.size(), 0);
    for (int p : order) {
        int best_gt = -1;
        double best = 0.0;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (gt_taken[g]) continue;
            const double v = oks(gts[g], preds[p], k);
            if (v >= threshold && (best_gt < 0 || v > best)) {
                best = v;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0) {
            gt_taken[best_gt] = 1;
            result.pairs.push_back({best_gt, p, best});
        } else {
            result.unmatched_pred.push_back(p);
        }
    }
    for (size_t g = 0; g < gts.size(); ++g)
        if (!gt_taken[g]) result.unmatched_gt.push_back(static_cast<int>(g));
    return result;
}

std::vector<double> default_oks_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
    return t;
}

namespace {

struct Detection {
    double score = 0.0;
    int image = 0;
    int pred = 0;
    bool tp = false;
};

}  // namespace

ApResult match_and_ap(const std::vector<ImageSample>& images, const std::vector<double>& k,
                      const std::vector<double>& thresholds) {
    ApResult result;
    long long total_gts = 0;
    for (const ImageSample& img : images) {
        if (img.gts.empty()) continue;
        total_gts += static_cast<long long>(img.gts.size());
    }
    result.excluded_images = static_cast<int>(
        std::count_if(images.begin(), images.end(),
                      [](const ImageSample& s) { return s.gts.empty(); }));

    double recall_sum = 0.0;
    for (double tau : thresholds) {
        std::vector<Detection> dets;
        long long matched = 0;
        for (size_t i = 0; i < images.size(); ++i) {
            const ImageSample& img = images[i];
            if (img.gts.empty()) continue;
            const MatchResult m = greedy_match(img.gts, img.preds, k, tau);
            std::vector<char> is_tp(img.preds.size(), 0);
            for (const MatchPair& p : m.pairs) is_tp[p.pred] = 1;
            matched += static_cast<long long>(m.pairs.size());
            for (size_t p = 0; p < img.preds.size(); ++p)
                dets.push_back({img.preds[p].score, static_cast<int>(i),
                                static_cast<int>(p), is_tp[p] != 0});
        }
        std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.image != b.image) return a.image < b.image;
            return a.pred < b.pred;
        });
        double ap = 0.0;
        if (total_gts > 0 && !dets.empty()) {
            std::vector<double> precision(dets.size());
            long long tp = 0;
            for (size_t d = 0; d < dets.size(); ++d) {
                if (dets[d].tp) ++tp;
                precision[d] = static_cast<double>(tp) / static_cast<double>(d + 1);
            }
            // Monotone envelope from the right (all-point interpolation).
            for (size_t d = dets.size() - 1; d-- > 0;)
                precision[d] = std::max(precision[d], precision[d + 1]);
            for (size_t d = 0; d < dets.size(); ++d)
                if (dets[d].tp) ap += precision[d] / static_cast<double>(total_gts);
        }
        result.ap.push_back(ap);
        recall_sum += total_gts > 0
                          ? static_cast<double>(matched) / static_cast<double>(total_gts)
                          : 0.0;
    }
    result.mean_ap = thresholds.empty()
                         ? 0.0
                         : std::accumulate(result.ap.begin(), result.ap.end(), 0.0) /
                               static_cast<double>(thresholds.size());
    result.ar = thresholds.empty() ? 0.0 : recall_sum / static_cast<double>(thresholds.size());
    return result;
}

PckhResult pckh_match(const std::vector<GroundTruthPerson>& gts,
                      const std::vector<PoseConfiguration>& preds, double alpha,
                      const std::vector<double>& head_sizes) {
    if (!(alpha > 0.0)) throw std::invalid_argument("pckh_match: alpha must be positive");
    PckhResult result;
    const size_t pairs = std::min(gts.size(), preds.size());
    for (size_t i = 0; i < pairs; ++i) {
        if (i >= head_sizes.size() || !(head_sizes[i] > 0.0)) {
            ++result.skipped;
            continue;
        }
        const GroundTruthPerson& gt = gts[i];
        const PoseConfiguration& pred = preds[i];
        const size_t n = std::min(gt.keypoints.size(), pred.positions.size());
        if (result.correct.size() < n) {
            result.correct.resize(n, 0);
            result.scored.resize(n, 0);
        }
        const double limit = alpha * head_sizes[i];
        for (size_t j = 0; j < n; ++j) {
            if (gt.keypoints[j].v <= 0) continue;
            const double dx = pred.positions[j].x - gt.keypoints[j].x;
            const double dy = pred.positions[j].y - gt.keypoints[j].y;
            ++result.scored[j];
            if (std::sqrt(dx * dx + dy * dy) <= limit) ++result.correct[j];
        }
    }
    long long c = 0, s = 0;
    result.accuracy.resize(result.correct.size(), -1.0);
    for (size_t j = 0; j < result.correct.size(); ++j) {
        c += result.correct[j];
        s += result.scored[j];
        if (result.scored[j] > 0)
            result.accuracy[j] = static_cast<double>(result.correct[j]) /
                                 static_cast<double>(result.scored[j]);
    }
    result.total = s > 0 ? static_cast<double>(c) / static_cast<double>(s) : 0.0;
    return result;
}

}  // namespace bgsim::metrics
