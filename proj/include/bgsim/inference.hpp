#pragma once

#include <cstdint>
#include <vector>

#include "bgsim/heatmap.hpp"
#include "bgsim/scoring.hpp"
#include "bgsim/skeleton.hpp"

namespace bgsim::inference {

// Orientation of the unrolling. Forward points every edge away from the root
// (virtual copies duplicate the far endpoint of each loop-closing edge);
// Backward reverses the loop-closing edges, duplicating the near endpoint.
enum class Direction { Forward, Backward };

enum class DpBackend {
    Naive,          // serial reference, O(|grid|^2) per edge
    NaiveParallel,  // same arithmetic, OpenMP over parent states
    Separable,      // distance-transform fast path, O(|grid|) per edge per combo
};

struct TreeNode {
    int tree_id = 0;
    int joint = 0;  // original joint id
    bool is_virtual = false;
    int parent = -1;      // tree id, -1 at the root
    int edge_index = -1;  // model edge joining this node to its parent
    bool parent_is_i = false;  // parent's joint plays the edge's "i" role
    int depth = 0;
    std::vector<int> children;  // creation order
};

struct ComputationTree {
    int root = 0;
    Direction direction = Direction::Forward;
    std::vector<TreeNode> nodes;  // indexed by tree id; parents precede children
    int real_count = 0;
};

// Unrolls the loopy graph into a computation tree: the kinetic spanning tree
// (BFS from root, adjacency in edge-list order) is the backbone; every
// contextual edge closes a loop and contributes one virtual leaf copy, created
// in edge-list order.
ComputationTree unroll(const skeleton::SkeletonModel& model, int root,
                       Direction direction = Direction::Forward);

// Argmax child state for one parent state; types are stored in edge terms
// (t_fwd = the edge's i->j direction).
struct ChildArg {
    uint16_t x = 0;
    uint16_t y = 0;
    uint8_t occ = 0;
    uint8_t t_fwd = 0;
    uint8_t t_bwd = 0;
};

struct DPTables {
    int width = 0;
    int height = 0;
    // best[node][o * width*height + cell]: highest subtree score with the node
    // pinned to (cell, o).
    std::vector<std::vector<double>> best;
    // arg[node][parent_state]: the state of `node` under that parent state.
    // Empty for the root.
    std::vector<std::vector<ChildArg>> arg;

    size_t states() const { return static_cast<size_t>(width) * height * 3; }
};

DPTables dp_pass(const ComputationTree& tree, const skeleton::SkeletonModel& model,
                 const std::vector<heatmap::ConfidenceMap>& maps,
                 DpBackend backend = DpBackend::Separable);

struct Hypothesis {
    Cell root_position;
    skeleton::OcclusionState root_occlusion = skeleton::OcclusionState::Visible;
    double dp_score = 0.0;
};

// Per root position, the best occlusion state; sorted by dp_score descending,
// ties by (y, x, occlusion code); the top ceil(sigma * positions) returned.
std::vector<Hypothesis> top_hypotheses(const DPTables& tables, const ComputationTree& tree,
                                       double sigma);

// Full state of every tree node plus the chosen types on each parent link.
struct UnrolledAssignment {
    std::vector<Cell> positions;
    std::vector<skeleton::OcclusionState> occlusions;
    std::vector<skeleton::TypePair> link_types;  // [node], edge terms; root entry unused
};

UnrolledAssignment backtrack_unrolled(const ComputationTree& tree, const DPTables& tables,
                                      const Hypothesis& h);

// Collapse an unrolled assignment onto the original joints. Duplicated joints
// report the copy whose parent is a real node; among qualifying copies the one
// nearest the root wins (then lowest tree id).
skeleton::PoseConfiguration collapse(const ComputationTree& tree,
                                     const skeleton::SkeletonModel& model,
                                     const UnrolledAssignment& assignment);

skeleton::PoseConfiguration backtrack(const ComputationTree& tree,
                                      const skeleton::SkeletonModel& model,
                                      const DPTables& tables, const Hypothesis& h);

// The unrolled tree expressed as a standalone model whose joint k is tree
// node k. Lets enumeration oracles score the unrolled objective directly.
skeleton::SkeletonModel tree_to_model(const ComputationTree& tree,
                                      const skeleton::SkeletonModel& model);
std::vector<heatmap::ConfidenceMap> tree_maps(const ComputationTree& tree,
                                              const std::vector<heatmap::ConfidenceMap>& maps);

// Score of an unrolled assignment under the unrolled model, same summation
// convention as scoring::total_score.
double unrolled_score(const ComputationTree& tree, const skeleton::SkeletonModel& model,
                      const std::vector<heatmap::ConfidenceMap>& maps,
                      const UnrolledAssignment& assignment);

struct RescoreResult {
    std::vector<skeleton::PoseConfiguration> configs;  // sorted by score, descending
    int skipped = 0;  // configurations the loopy model rejected as invalid
};

// Replace every configuration's score with the original loopy model's
// total_score and re-rank (stable for ties).
RescoreResult rescore(const skeleton::SkeletonModel& model,
                      const std::vector<heatmap::ConfidenceMap>& maps,
                      std::vector<skeleton::PoseConfiguration> configs);

struct InferOptions {
    double sigma = 0.1;                           // hypothesis retention fraction
    DpBackend backend = DpBackend::Separable;
};

struct InferResult {
    skeleton::PoseConfiguration pose;
    scoring::DirectionalScore score;
    int skipped = 0;
};

// Both unrolling directions run as independent passes; candidates are ranked
// by F + F', and the winning configuration is reported with both directional
// scores and their fused agreement value.
InferResult infer(const skeleton::SkeletonModel& model,
                  const std::vector<heatmap::ConfidenceMap>& maps, int root,
                  const InferOptions& options = {});

}  // namespace bgsim::inference
