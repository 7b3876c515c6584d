#pragma once

#include <array>
#include <vector>

#include "bgsim/heatmap.hpp"
#include "bgsim/skeleton.hpp"

namespace bgsim::scoring {

// Deformation feature of a displacement: [dx, dx^2, dy, dy^2].
std::array<double, 4> deformation_features(Vec2 dp);

// 1 for Visible and SelfOccluded, 0 for OtherOccluded: appearance evidence is
// trusted unless another object hides the joint.
double occlusion_indicator(skeleton::OcclusionState o);

// w_i * map_i(p) * indicator(o) + b_i(o). Throws when p is out of bounds.
double unary_score(const skeleton::SkeletonModel& model,
                   const std::vector<heatmap::ConfidenceMap>& maps, int joint, Cell p,
                   skeleton::OcclusionState o);

// Kinetic edge score: both directed deformation terms, both type-prior terms
// gated by the owner's occlusion indicator, plus the occlusion bias.
double kinetic_pair_score(const skeleton::EdgeSpec& edge, Cell p_i, Cell p_j, int t_ij,
                          int t_ji, skeleton::OcclusionState o_i, skeleton::OcclusionState o_j);

// Contextual edge score: both directed deformation terms plus the occlusion
// bias; no appearance-type terms.
double contextual_pair_score(const skeleton::EdgeSpec& edge, Cell p_m, Cell p_n, int t_mn,
                             int t_nm, skeleton::OcclusionState o_m,
                             skeleton::OcclusionState o_n);

// Dispatch on edge.kind.
double pair_score(const skeleton::EdgeSpec& edge, Cell p_i, Cell p_j, int t_ij, int t_ji,
                  skeleton::OcclusionState o_i, skeleton::OcclusionState o_j);

// Full configuration score. Fixed summation order: unary terms by joint id,
// then kinetic edges by edge index, then contextual edges by edge index.
// Exactness checks against enumeration rely on this order; do not reorder.
double total_score(const skeleton::SkeletonModel& model,
                   const std::vector<heatmap::ConfidenceMap>& maps,
                   const skeleton::PoseConfiguration& config);

// (F + F') / (|F| + |F'|); 0 when both are exactly 0. Candidate ranking uses
// F + F' instead (this value saturates at +-1 whenever the signs agree), so
// the fused value is reported as a direction-agreement diagnostic.
double fuse_bidirectional(double forward, double backward);

struct DirectionalScore {
    double forward = 0.0;
    double backward = 0.0;
    double fused = 0.0;
};

}  // namespace bgsim::scoring
