#include "bgsim/scoring.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bgsim::scoring {

using skeleton::EdgeKind;
using skeleton::EdgeSpec;
using skeleton::OcclusionState;
using skeleton::PoseConfiguration;
using skeleton::SkeletonModel;

std::array<double, 4> deformation_features(Vec2 dp) {
    return {dp.x, dp.x * dp.x, dp.y, dp.y * dp.y};
}

double occlusion_indicator(OcclusionState o) {
    return o == OcclusionState::OtherOccluded ? 0.0 : 1.0;
}

namespace {

inline double deform_term(const skeleton::EdgeDirection& dir, int t, Cell from, Cell to) {
    const Vec2 dp = to_vec(to) - to_vec(from) - dir.mean_offsets[t];
    const std::array<double, 4> mu = deformation_features(dp);
    const std::array<double, 4>& w = dir.deform_weights[t];
    return w[0] * mu[0] + w[1] * mu[1] + w[2] * mu[2] + w[3] * mu[3];
}

inline void check_type(const EdgeSpec& edge, int t, const char* which) {
    if (t < 0 || t >= edge.num_types)
        throw std::invalid_argument(std::string(which) + " relationship type out of range");
}

}  // namespace

double unary_score(const SkeletonModel& model, const std::vector<heatmap::ConfidenceMap>& maps,
                   int joint, Cell p, OcclusionState o) {
    if (joint < 0 || joint >= model.joint_count())
        throw std::invalid_argument("unary_score: joint out of range");
    const heatmap::ConfidenceMap& map = maps[joint];
    if (!map.in_bounds(p))
        throw std::invalid_argument("unary_score: position (" + std::to_string(p.x) + "," +
                                    std::to_string(p.y) + ") outside map");
    const int oi = static_cast<int>(o);
    return model.unary_weights[joint] * map.at(p.x, p.y) * occlusion_indicator(o) +
           model.unary_bias[joint][oi];
}

double kinetic_pair_score(const EdgeSpec& edge, Cell p_i, Cell p_j, int t_ij, int t_ji,
                          OcclusionState o_i, OcclusionState o_j) {
    check_type(edge, t_ij, "forward");
    check_type(edge, t_ji, "backward");
    double s = deform_term(edge.fwd, t_ij, p_i, p_j);
    s += edge.fwd.type_weight * edge.fwd.type_priors[t_ij] * occlusion_indicator(o_i);
    s += deform_term(edge.bwd, t_ji, p_j, p_i);
    s += edge.bwd.type_weight * edge.bwd.type_priors[t_ji] * occlusion_indicator(o_j);
    s += edge.bias(t_ij, t_ji, static_cast<int>(o_i), static_cast<int>(o_j));
    return s;
}

double contextual_pair_score(const EdgeSpec& edge, Cell p_m, Cell p_n, int t_mn, int t_nm,
                             OcclusionState o_m, OcclusionState o_n) {
    check_type(edge, t_mn, "forward");
    check_type(edge, t_nm, "backward");
    double s = deform_term(edge.fwd, t_mn, p_m, p_n);
    s += deform_term(edge.bwd, t_nm, p_n, p_m);
    s += edge.bias(t_mn, t_nm, static_cast<int>(o_m), static_cast<int>(o_n));
    return s;
}

double pair_score(const EdgeSpec& edge, Cell p_i, Cell p_j, int t_ij, int t_ji,
                  OcclusionState o_i, OcclusionState o_j) {
    return edge.kind == EdgeKind::Kinetic
               ? kinetic_pair_score(edge, p_i, p_j, t_ij, t_ji, o_i, o_j)
               : contextual_pair_score(edge, p_i, p_j, t_ij, t_ji, o_i, o_j);
}

double total_score(const SkeletonModel& model, const std::vector<heatmap::ConfidenceMap>& maps,
                   const PoseConfiguration& config) {
    const int n = model.joint_count();
    if (config.positions.size() != static_cast<size_t>(n) ||
        config.occlusions.size() != static_cast<size_t>(n) ||
        config.rel_types.size() != model.edges.size())
        throw std::invalid_argument("total_score: configuration shape mismatch");
    double s = 0.0;
    for (int k = 0; k < n; ++k)
        s += unary_score(model, maps, k, config.positions[k], config.occlusions[k]);
    for (EdgeKind kind : {EdgeKind::Kinetic, EdgeKind::Contextual}) {
        for (size_t e = 0; e < model.edges.size(); ++e) {
            const EdgeSpec& edge = model.edges[e];
            if (edge.kind != kind) continue;
            s += pair_score(edge, config.positions[edge.i], config.positions[edge.j],
                            config.rel_types[e].fwd, config.rel_types[e].bwd,
                            config.occlusions[edge.i], config.occlusions[edge.j]);
        }
    }
    return s;
}

double fuse_bidirectional(double forward, double backward) {
    const double denom = std::abs(forward) + std::abs(backward);
    if (denom == 0.0) return 0.0;
    return forward / denom + backward / denom;
}

}  // namespace bgsim::scoring
