#pragma once

#include <array>
#include <string>
#include <vector>

#include "bgsim/geometry.hpp"

namespace bgsim::skeleton {

// Occlusion state codes are part of the file formats; never reorder.
enum class OcclusionState : int {
    Visible = 0,
    SelfOccluded = 1,
    OtherOccluded = 2,
};

inline constexpr int kNumOcclusionStates = 3;

enum class EdgeKind { Kinetic, Contextual };

// Tables for one direction (i -> j or j -> i) of an edge, indexed by
// relationship type t in [0, num_types).
struct EdgeDirection {
    std::vector<Vec2> mean_offsets;                     // r^t, expected p_to - p_from
    std::vector<std::array<double, 4>> deform_weights;  // w^t against [dx, dx^2, dy, dy^2]
    double type_weight = 1.0;                           // scalar multiplying the type prior
    std::vector<double> type_priors;                    // f(t), uniform by default

    bool operator==(const EdgeDirection&) const = default;
};

struct EdgeSpec {
    int i = 0;
    int j = 0;
    EdgeKind kind = EdgeKind::Kinetic;
    int num_types = 1;   // T, shared by both directions
    EdgeDirection fwd;   // i -> j
    EdgeDirection bwd;   // j -> i
    // Pairwise occlusion compatibility, flattened [t_ij][t_ji][o_i][o_j].
    std::vector<double> occlusion_bias;

    double bias(int t_ij, int t_ji, int o_i, int o_j) const {
        return occlusion_bias[((static_cast<size_t>(t_ij) * num_types + t_ji) * 3 + o_i) * 3 +
                              o_j];
    }
    double& bias(int t_ij, int t_ji, int o_i, int o_j) {
        return occlusion_bias[((static_cast<size_t>(t_ij) * num_types + t_ji) * 3 + o_i) * 3 +
                              o_j];
    }

    bool operator==(const EdgeSpec&) const = default;
};

struct Joint {
    int id = 0;
    std::string name;
    int stage = 1;

    bool operator==(const Joint&) const = default;
};

struct SkeletonModel {
    std::vector<Joint> joints;
    std::vector<EdgeSpec> edges;
    std::vector<double> unary_weights;                // w_i per joint
    std::vector<std::array<double, 3>> unary_bias;    // b_i(o) per joint per state
    std::vector<double> oks_k;                        // per-joint OKS constant

    int joint_count() const { return static_cast<int>(joints.size()); }

    bool operator==(const SkeletonModel&) const = default;
};

// One scored pose: integer cell per joint, occlusion state per joint, and the
// chosen relationship types per edge (aligned with model.edges).
struct TypePair {
    int fwd = 0;  // t for the edge's i -> j direction
    int bwd = 0;  // t for j -> i

    bool operator==(const TypePair&) const = default;
};

struct PoseConfiguration {
    std::vector<Cell> positions;
    std::vector<OcclusionState> occlusions;
    std::vector<TypePair> rel_types;
    double score = 0.0;

    bool operator==(const PoseConfiguration&) const = default;
};

// Structural checks; returns human-readable violations instead of throwing so
// callers can report all of them at once.
std::vector<std::string> validate(const SkeletonModel& model);

// The 15-joint model shipped as models/default15.json.
SkeletonModel default_model();

// BFS depth of every joint in the kinetic tree rooted at `root`; adjacency is
// scanned in edge-list order, so the result is deterministic.
std::vector<int> kinetic_depths(const SkeletonModel& model, int root);

// True if `edge` is oriented i -> j when all edges point away from `root`:
// kinetic edges follow the tree orientation, contextual edges go from the
// kinetically shallower endpoint to the deeper one (ties by joint id).
bool oriented_i_to_j(const SkeletonModel& model, const EdgeSpec& edge,
                     const std::vector<int>& depths);

// Number of edges (both kinds) leaving `joint` when every edge of the graph is
// oriented away from `root`.
int out_degree(const SkeletonModel& model, int joint, int root);

// Sub-model induced by a joint subset (for stage-restricted inference).
struct RestrictedModel {
    SkeletonModel model;
    std::vector<int> orig_ids;  // new joint id -> original joint id
};
RestrictedModel restrict(const SkeletonModel& model, std::vector<int> joint_ids);

// UTF-8 JSON serialization; schema documented in the README.
std::string to_json(const SkeletonModel& model);
SkeletonModel from_json(const std::string& text);
void save_model(const std::string& path, const SkeletonModel& model);
SkeletonModel load_model(const std::string& path);

}  // namespace bgsim::skeleton
