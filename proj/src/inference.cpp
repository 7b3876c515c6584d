#include "bgsim/inference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>

namespace bgsim::inference {

using heatmap::ConfidenceMap;
using skeleton::EdgeKind;
using skeleton::EdgeSpec;
using skeleton::OcclusionState;
using skeleton::PoseConfiguration;
using skeleton::SkeletonModel;
using skeleton::TypePair;

ComputationTree unroll(const SkeletonModel& model, int root, Direction direction) {
    const int n = model.joint_count();
    if (root < 0 || root >= n) throw std::invalid_argument("unroll: root out of range");
    const std::vector<int> depths = skeleton::kinetic_depths(model, root);
    for (int k = 0; k < n; ++k)
        if (depths[k] < 0)
            throw std::invalid_argument("unroll: kinetic edges do not reach joint " +
                                        std::to_string(k));

    ComputationTree tree;
    tree.direction = direction;
    std::vector<int> real_node(n, -1);

    // Kinetic backbone, BFS from the root, adjacency in edge-list order.
    tree.nodes.push_back({0, root, false, -1, -1, false, 0, {}});
    real_node[root] = 0;
    std::queue<int> q;
    q.push(0);
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        const int uj = tree.nodes[u].joint;
        for (size_t e = 0; e < model.edges.size(); ++e) {
            const EdgeSpec& edge = model.edges[e];
            if (edge.kind != EdgeKind::Kinetic) continue;
            int other = -1;
            if (edge.i == uj) other = edge.j;
            else if (edge.j == uj) other = edge.i;
            else continue;
            if (real_node[other] >= 0) continue;
            const int id = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back({id, other, false, u, static_cast<int>(e), edge.i == uj,
                                  tree.nodes[u].depth + 1, {}});
            tree.nodes[u].children.push_back(id);
            real_node[other] = id;
            q.push(id);
        }
    }
    tree.real_count = static_cast<int>(tree.nodes.size());

    // Every contextual edge closes a loop; it contributes one virtual leaf.
    // Forward duplicates the endpoint farther from the root, backward the
    // nearer one (ties broken by joint id).
    for (size_t e = 0; e < model.edges.size(); ++e) {
        const EdgeSpec& edge = model.edges[e];
        if (edge.kind != EdgeKind::Contextual) continue;
        const bool i_near = skeleton::oriented_i_to_j(model, edge, depths);
        int near = i_near ? edge.i : edge.j;
        int far = i_near ? edge.j : edge.i;
        if (direction == Direction::Backward) std::swap(near, far);
        const int parent = real_node[near];
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({id, far, true, parent, static_cast<int>(e),
                              edge.i == tree.nodes[parent].joint,
                              tree.nodes[parent].depth + 1, {}});
        tree.nodes[parent].children.push_back(id);
    }
    return tree;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Unary table for one joint: plane per occlusion state, arithmetic identical
// to scoring::unary_score.
std::vector<double> unary_planes(const SkeletonModel& model, const ConfidenceMap& map,
                                 int joint) {
    const size_t wh = map.values.size();
    std::vector<double> out(wh * 3);
    for (int o = 0; o < 3; ++o) {
        const double indicator =
            scoring::occlusion_indicator(static_cast<OcclusionState>(o));
        const double bias = model.unary_bias[joint][o];
        const double w = model.unary_weights[joint];
        for (size_t c = 0; c < wh; ++c) out[o * wh + c] = w * map.values[c] * indicator + bias;
    }
    return out;
}

// Best child state for one parent state, exhaustive scan. The semantics
// anchor: both fast paths must agree with this within tolerance.
void naive_parent_state(const EdgeSpec& edge, bool parent_is_i,
                        const std::vector<double>& best_c, int w, int h, int o_p, int px,
                        int py, double& out_val, ChildArg& out_arg) {
    const size_t wh = static_cast<size_t>(w) * h;
    double best = kNegInf;
    ChildArg arg;
    const Cell pp{px, py};
    const OcclusionState op = static_cast<OcclusionState>(o_p);
    for (int o_c = 0; o_c < 3; ++o_c) {
        const OcclusionState oc = static_cast<OcclusionState>(o_c);
        for (int cy = 0; cy < h; ++cy) {
            for (int cx = 0; cx < w; ++cx) {
                const double base = best_c[o_c * wh + static_cast<size_t>(cy) * w + cx];
                const Cell pc{cx, cy};
                for (int tf = 0; tf < edge.num_types; ++tf) {
                    for (int tb = 0; tb < edge.num_types; ++tb) {
                        const double pair =
                            parent_is_i
                                ? scoring::pair_score(edge, pp, pc, tf, tb, op, oc)
                                : scoring::pair_score(edge, pc, pp, tf, tb, oc, op);
                        const double v = base + pair;
                        if (v > best) {
                            best = v;
                            arg = {static_cast<uint16_t>(cx), static_cast<uint16_t>(cy),
                                   static_cast<uint8_t>(o_c), static_cast<uint8_t>(tf),
                                   static_cast<uint8_t>(tb)};
                        }
                    }
                }
            }
        }
    }
    out_val = best;
    out_arg = arg;
}

void naive_message(const EdgeSpec& edge, bool parent_is_i, const std::vector<double>& best_c,
                   int w, int h, std::vector<double>& msg, std::vector<ChildArg>& arg,
                   bool parallel) {
    const size_t wh = static_cast<size_t>(w) * h;
    msg.assign(wh * 3, 0.0);
    arg.assign(wh * 3, {});
    const int total = static_cast<int>(wh) * 3;
#pragma omp parallel for schedule(static) if (parallel)
    for (int s = 0; s < total; ++s) {
        const int o_p = s / static_cast<int>(wh);
        const int cell = s % static_cast<int>(wh);
        naive_parent_state(edge, parent_is_i, best_c, w, h, o_p, cell % w, cell / w, msg[s],
                           arg[s]);
    }
}

// out(p) = max_q h(q) + A (q - p)^2 + B (q - p); arg(p) = the chosen q.
// Requires A <= 0 (concave); the A == 0 cases degenerate to a single scan.
void quad_transform_1d(const double* h, int n, double A, double B, double* out,
                       int32_t* arg) {
    if (A == 0.0) {
        double best = kNegInf;
        int bq = 0;
        for (int qi = 0; qi < n; ++qi) {
            const double v = h[qi] + B * qi;
            if (v > best) {
                best = v;
                bq = qi;
            }
        }
        for (int p = 0; p < n; ++p) {
            out[p] = best - B * p;
            arg[p] = bq;
        }
        return;
    }
    // Upper envelope of concave parabolas P_q(p) = h(q) + A (p-q)^2 - B (p-q).
    std::vector<int> v(n);
    std::vector<double> z(n + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    // Crossing point of the parabolas rooted at q1 < q2; q2 dominates beyond it.
    auto isect = [&](int q1, int q2) {
        return 0.5 * (q1 + q2) + (B * (q1 - q2) - (h[q2] - h[q1])) / (2.0 * A * (q1 - q2));
    };
    for (int qi = 1; qi < n; ++qi) {
        double s = isect(v[k], qi);
        while (s <= z[k]) {
            --k;
            s = isect(v[k], qi);
        }
        ++k;
        v[k] = qi;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int p = 0; p < n; ++p) {
        while (z[k + 1] < p) ++k;
        const int qi = v[k];
        const double d = static_cast<double>(p) - qi;
        out[p] = h[qi] + A * d * d - B * d;
        arg[p] = qi;
    }
}

struct AxisQuad {
    double a = 0.0, b = 0.0, c = 0.0;
};

// Per-axis quadratic of the combined deformation as a function of
// delta = p_child - p_parent on that axis.
AxisQuad axis_quad(const std::array<double, 4>& w_to_child, double r_to_child,
                   const std::array<double, 4>& w_to_parent, double r_to_parent, int lin,
                   int quad) {
    AxisQuad q;
    q.a = w_to_child[quad] + w_to_parent[quad];
    q.b = w_to_child[lin] - 2.0 * w_to_child[quad] * r_to_child - w_to_parent[lin] +
          2.0 * w_to_parent[quad] * r_to_parent;
    q.c = -w_to_child[lin] * r_to_child + w_to_child[quad] * r_to_child * r_to_child -
          w_to_parent[lin] * r_to_parent + w_to_parent[quad] * r_to_parent * r_to_parent;
    return q;
}

void separable_message(const EdgeSpec& edge, bool parent_is_i,
                       const std::vector<double>& best_c, int w, int h,
                       std::vector<double>& msg, std::vector<ChildArg>& arg) {
    const size_t wh = static_cast<size_t>(w) * h;
    msg.assign(wh * 3, kNegInf);
    arg.assign(wh * 3, {});
    const int T = edge.num_types;

    std::vector<double> t1(wh), g0(wh);
    std::vector<int32_t> arg_y(wh), arg_x(wh);
    std::vector<double> col_in(h), col_out(h);
    std::vector<int32_t> col_arg(h);

    for (int tf = 0; tf < T; ++tf) {
        for (int tb = 0; tb < T; ++tb) {
            // Tables seen from the child-minus-parent displacement.
            const auto& to_child = parent_is_i ? edge.fwd : edge.bwd;
            const auto& to_parent = parent_is_i ? edge.bwd : edge.fwd;
            const int t_child = parent_is_i ? tf : tb;   // type on parent -> child
            const int t_parent = parent_is_i ? tb : tf;  // type on child -> parent
            const AxisQuad qx =
                axis_quad(to_child.deform_weights[t_child], to_child.mean_offsets[t_child].x,
                          to_parent.deform_weights[t_parent],
                          to_parent.mean_offsets[t_parent].x, 0, 1);
            const AxisQuad qy =
                axis_quad(to_child.deform_weights[t_child], to_child.mean_offsets[t_child].y,
                          to_parent.deform_weights[t_parent],
                          to_parent.mean_offsets[t_parent].y, 2, 3);
            const double cc = qx.c + qy.c;

            for (int o_c = 0; o_c < 3; ++o_c) {
                const double* plane = best_c.data() + static_cast<size_t>(o_c) * wh;
                // Column pass along y.
#pragma omp parallel for schedule(static) firstprivate(col_in, col_out, col_arg)
                for (int cx = 0; cx < w; ++cx) {
                    for (int y = 0; y < h; ++y) col_in[y] = plane[static_cast<size_t>(y) * w + cx];
                    quad_transform_1d(col_in.data(), h, qy.a, qy.b, col_out.data(),
                                      col_arg.data());
                    for (int y = 0; y < h; ++y) {
                        t1[static_cast<size_t>(y) * w + cx] = col_out[y];
                        arg_y[static_cast<size_t>(y) * w + cx] = col_arg[y];
                    }
                }
                // Row pass along x.
#pragma omp parallel for schedule(static)
                for (int py = 0; py < h; ++py) {
                    quad_transform_1d(t1.data() + static_cast<size_t>(py) * w, w, qx.a, qx.b,
                                      g0.data() + static_cast<size_t>(py) * w,
                                      arg_x.data() + static_cast<size_t>(py) * w);
                }
                // Fold in the state-dependent constants and keep the running max.
                for (int o_p = 0; o_p < 3; ++o_p) {
                    const double ind_p = scoring::occlusion_indicator(
                        static_cast<OcclusionState>(o_p));
                    const double ind_c = scoring::occlusion_indicator(
                        static_cast<OcclusionState>(o_c));
                    const double ind_i = parent_is_i ? ind_p : ind_c;
                    const double ind_j = parent_is_i ? ind_c : ind_p;
                    double extras = 0.0;
                    if (edge.kind == EdgeKind::Kinetic) {
                        extras += edge.fwd.type_weight * edge.fwd.type_priors[tf] * ind_i;
                        extras += edge.bwd.type_weight * edge.bwd.type_priors[tb] * ind_j;
                    }
                    extras += parent_is_i ? edge.bias(tf, tb, o_p, o_c)
                                          : edge.bias(tf, tb, o_c, o_p);
                    const double add = cc + extras;
                    double* out = msg.data() + static_cast<size_t>(o_p) * wh;
                    ChildArg* oarg = arg.data() + static_cast<size_t>(o_p) * wh;
#pragma omp parallel for schedule(static)
                    for (int cell = 0; cell < static_cast<int>(wh); ++cell) {
                        const double v = g0[cell] + add;
                        if (v > out[cell]) {
                            out[cell] = v;
                            const int cx = arg_x[cell];
                            const int cy = arg_y[(cell / w) * w + cx];
                            oarg[cell] = {static_cast<uint16_t>(cx),
                                          static_cast<uint16_t>(cy),
                                          static_cast<uint8_t>(o_c),
                                          static_cast<uint8_t>(tf),
                                          static_cast<uint8_t>(tb)};
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

DPTables dp_pass(const ComputationTree& tree, const SkeletonModel& model,
                 const std::vector<ConfidenceMap>& maps, DpBackend backend) {
    if (maps.size() != static_cast<size_t>(model.joint_count()))
        throw std::invalid_argument("dp_pass: one map per joint required");
    const int w = maps[0].width;
    const int h = maps[0].height;
    for (const auto& m : maps)
        if (m.width != w || m.height != h)
            throw std::invalid_argument("dp_pass: map dimensions differ");
    if (w > 65535 || h > 65535) throw std::invalid_argument("dp_pass: grid too large");

    DPTables tables;
    tables.width = w;
    tables.height = h;
    const size_t nodes = tree.nodes.size();
    tables.best.resize(nodes);
    tables.arg.resize(nodes);

    // Post-order: a node's table is its unary plus one message per child,
    // accumulated in child creation order.
    std::function<void(int)> solve = [&](int id) {
        const TreeNode& nd = tree.nodes[id];
        tables.best[id] = unary_planes(model, maps[nd.joint], nd.joint);
        for (int child : nd.children) {
            solve(child);
            const TreeNode& cn = tree.nodes[child];
            const EdgeSpec& edge = model.edges[cn.edge_index];
            std::vector<double> msg;
            std::vector<ChildArg> arg;
            switch (backend) {
                case DpBackend::Naive:
                    naive_message(edge, cn.parent_is_i, tables.best[child], w, h, msg, arg,
                                  false);
                    break;
                case DpBackend::NaiveParallel:
                    naive_message(edge, cn.parent_is_i, tables.best[child], w, h, msg, arg,
                                  true);
                    break;
                case DpBackend::Separable:
                    separable_message(edge, cn.parent_is_i, tables.best[child], w, h, msg,
                                      arg);
                    break;
            }
            tables.arg[child] = std::move(arg);
            auto& acc = tables.best[id];
            for (size_t s = 0; s < acc.size(); ++s) acc[s] += msg[s];
        }
    };
    solve(tree.root);
    return tables;
}

std::vector<Hypothesis> top_hypotheses(const DPTables& tables, const ComputationTree& tree,
                                       double sigma) {
    if (!(sigma > 0.0) || sigma > 1.0)
        throw std::invalid_argument("sigma must be in (0, 1]");
    const size_t wh = static_cast<size_t>(tables.width) * tables.height;
    const std::vector<double>& root = tables.best[tree.root];
    std::vector<Hypothesis> hyps;
    hyps.reserve(wh);
    for (size_t cell = 0; cell < wh; ++cell) {
        int best_o = 0;
        double best = root[cell];
        for (int o = 1; o < 3; ++o) {
            const double v = root[o * wh + cell];
            if (v > best) {
                best = v;
                best_o = o;
            }
        }
        if (!std::isfinite(best)) continue;
        hyps.push_back({{static_cast<int>(cell % tables.width),
                         static_cast<int>(cell / tables.width)},
                        static_cast<OcclusionState>(best_o),
                        best});
    }
    std::sort(hyps.begin(), hyps.end(), [](const Hypothesis& a, const Hypothesis& b) {
        if (a.dp_score != b.dp_score) return a.dp_score > b.dp_score;
        if (a.root_position.y != b.root_position.y) return a.root_position.y < b.root_position.y;
        if (a.root_position.x != b.root_position.x) return a.root_position.x < b.root_position.x;
        return static_cast<int>(a.root_occlusion) < static_cast<int>(b.root_occlusion);
    });
    const size_t keep = static_cast<size_t>(
        std::ceil(sigma * static_cast<double>(hyps.size())));
    if (hyps.size() > keep) hyps.resize(std::max<size_t>(keep, 1));
    return hyps;
}

UnrolledAssignment backtrack_unrolled(const ComputationTree& tree, const DPTables& tables,
                                      const Hypothesis& h) {
    const size_t wh = static_cast<size_t>(tables.width) * tables.height;
    UnrolledAssignment asg;
    asg.positions.resize(tree.nodes.size());
    asg.occlusions.resize(tree.nodes.size(), OcclusionState::Visible);
    asg.link_types.resize(tree.nodes.size());
    asg.positions[tree.root] = h.root_position;
    asg.occlusions[tree.root] = h.root_occlusion;
    std::function<void(int)> walk = [&](int id) {
        const TreeNode& nd = tree.nodes[id];
        const size_t state = static_cast<size_t>(asg.occlusions[id]) * wh +
                             static_cast<size_t>(asg.positions[id].y) * tables.width +
                             asg.positions[id].x;
        for (int child : nd.children) {
            const ChildArg& a = tables.arg[child][state];
            asg.positions[child] = {a.x, a.y};
            asg.occlusions[child] = static_cast<OcclusionState>(a.occ);
            asg.link_types[child] = {a.t_fwd, a.t_bwd};
            walk(child);
        }
    };
    walk(tree.root);
    return asg;
}

PoseConfiguration collapse(const ComputationTree& tree, const SkeletonModel& model,
                           const UnrolledAssignment& assignment) {
    PoseConfiguration config;
    config.positions.resize(model.joint_count());
    config.occlusions.resize(model.joint_count(), OcclusionState::Visible);
    config.rel_types.resize(model.edges.size());
    // chosen[joint] = tree node that reports the joint: parent must be a real
    // node; among qualifying copies, lowest depth, then lowest tree id.
    std::vector<int> chosen(model.joint_count(), -1);
    for (const TreeNode& nd : tree.nodes) {
        const bool parent_real = nd.parent < 0 || !tree.nodes[nd.parent].is_virtual;
        if (!parent_real) continue;
        int& cur = chosen[nd.joint];
        if (cur < 0 || nd.depth < tree.nodes[cur].depth ||
            (nd.depth == tree.nodes[cur].depth && nd.tree_id < tree.nodes[cur].tree_id))
            cur = nd.tree_id;
    }
    for (int j = 0; j < model.joint_count(); ++j) {
        if (chosen[j] < 0) throw std::logic_error("collapse: joint without a reporting copy");
        config.positions[j] = assignment.positions[chosen[j]];
        config.occlusions[j] = assignment.occlusions[chosen[j]];
    }
    for (const TreeNode& nd : tree.nodes) {
        if (nd.parent < 0) continue;
        config.rel_types[nd.edge_index] = assignment.link_types[nd.tree_id];
    }
    return config;
}

PoseConfiguration backtrack(const ComputationTree& tree, const SkeletonModel& model,
                            const DPTables& tables, const Hypothesis& h) {
    PoseConfiguration config = collapse(tree, model, backtrack_unrolled(tree, tables, h));
    config.score = h.dp_score;
    return config;
}

SkeletonModel tree_to_model(const ComputationTree& tree, const SkeletonModel& model) {
    SkeletonModel out;
    for (const TreeNode& nd : tree.nodes) {
        const skeleton::Joint& src = model.joints[nd.joint];
        out.joints.push_back({nd.tree_id, nd.is_virtual ? src.name + "_virtual" : src.name,
                              src.stage});
        out.unary_weights.push_back(model.unary_weights[nd.joint]);
        out.unary_bias.push_back(model.unary_bias[nd.joint]);
        out.oks_k.push_back(model.oks_k[nd.joint]);
    }
    for (const TreeNode& nd : tree.nodes) {
        if (nd.parent < 0) continue;
        EdgeSpec edge = model.edges[nd.edge_index];
        edge.i = nd.parent_is_i ? nd.parent : nd.tree_id;
        edge.j = nd.parent_is_i ? nd.tree_id : nd.parent;
        out.edges.push_back(std::move(edge));
    }
    return out;
}

std::vector<ConfidenceMap> tree_maps(const ComputationTree& tree,
                                     const std::vector<ConfidenceMap>& maps) {
    std::vector<ConfidenceMap> out;
    out.reserve(tree.nodes.size());
    for (const TreeNode& nd : tree.nodes) out.push_back(maps[nd.joint]);
    return out;
}

double unrolled_score(const ComputationTree& tree, const SkeletonModel& model,
                      const std::vector<ConfidenceMap>& maps,
                      const UnrolledAssignment& assignment) {
    const SkeletonModel tm = tree_to_model(tree, model);
    PoseConfiguration config;
    config.positions = assignment.positions;
    config.occlusions = assignment.occlusions;
    // Tree-model edge k joins node k+1 to its parent (creation order).
    for (const TreeNode& nd : tree.nodes)
        if (nd.parent >= 0) config.rel_types.push_back(assignment.link_types[nd.tree_id]);
    return scoring::total_score(tm, tree_maps(tree, maps), config);
}

RescoreResult rescore(const SkeletonModel& model, const std::vector<ConfidenceMap>& maps,
                      std::vector<PoseConfiguration> configs) {
    RescoreResult out;
    for (PoseConfiguration& c : configs) {
        try {
            c.score = scoring::total_score(model, maps, c);
        } catch (const std::invalid_argument&) {
            ++out.skipped;
            continue;
        }
        out.configs.push_back(std::move(c));
    }
    std::stable_sort(out.configs.begin(), out.configs.end(),
                     [](const PoseConfiguration& a, const PoseConfiguration& b) {
                         return a.score > b.score;
                     });
    return out;
}

InferResult infer(const SkeletonModel& model, const std::vector<ConfidenceMap>& maps,
                  int root, const InferOptions& options) {
    InferResult result;
    bool have_fwd = false, have_bwd = false;
    PoseConfiguration best_fwd, best_bwd;
    for (Direction dir : {Direction::Forward, Direction::Backward}) {
        const ComputationTree tree = unroll(model, root, dir);
        const DPTables tables = dp_pass(tree, model, maps, options.backend);
        const std::vector<Hypothesis> hyps = top_hypotheses(tables, tree, options.sigma);
        std::vector<PoseConfiguration> pool;
        pool.reserve(hyps.size());
        for (const Hypothesis& h : hyps) pool.push_back(backtrack(tree, model, tables, h));
        RescoreResult rr = rescore(model, maps, std::move(pool));
        result.skipped += rr.skipped;
        if (rr.configs.empty()) continue;
        if (dir == Direction::Forward) {
            best_fwd = rr.configs.front();
            have_fwd = true;
        } else {
            best_bwd = rr.configs.front();
            have_bwd = true;
        }
    }
    if (!have_fwd && !have_bwd)
        throw std::runtime_error("infer: no valid hypotheses survived rescoring");
    if (!have_fwd) best_fwd = best_bwd;
    if (!have_bwd) best_bwd = best_fwd;
    result.score.forward = best_fwd.score;
    result.score.backward = best_bwd.score;
    result.score.fused = scoring::fuse_bidirectional(best_fwd.score, best_bwd.score);
    // Rank by F + F': with one candidate per direction this is the larger of
    // the two totals; the forward result wins exact ties.
    result.pose = best_bwd.score > best_fwd.score ? best_bwd : best_fwd;
    return result;
}

}  // namespace bgsim::inference
