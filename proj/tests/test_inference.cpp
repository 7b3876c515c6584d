#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"

#include "bgsim/inference.hpp"
#include "bgsim/oracle.hpp"
#include "bgsim/synth.hpp"

using namespace bgsim;
using inference::Direction;
using inference::DpBackend;
using skeleton::EdgeKind;
using skeleton::EdgeSpec;
using skeleton::OcclusionState;
using skeleton::SkeletonModel;

namespace {

void add_joint(SkeletonModel& m, int id) {
    m.joints.push_back({id, "j" + std::to_string(id), 1});
    m.unary_weights.push_back(1.0);
    m.unary_bias.push_back({0.0, -0.125, -10.0});
    m.oks_k.push_back(0.1);
}

EdgeSpec make_edge(int i, int j, EdgeKind kind, Vec2 fwd_offset) {
    EdgeSpec e;
    e.i = i;
    e.j = j;
    e.kind = kind;
    e.num_types = 1;
    e.fwd.mean_offsets = {fwd_offset};
    e.fwd.deform_weights = {{0.0, -1.0, 0.0, -1.0}};
    e.fwd.type_priors = {0.25};
    e.bwd.mean_offsets = {{-fwd_offset.x, -fwd_offset.y}};
    e.bwd.deform_weights = {{0.0, -1.0, 0.0, -1.0}};
    e.bwd.type_priors = {0.25};
    e.occlusion_bias.assign(9, 0.0);
    return e;
}

// 0 -1 -2 kinetic chain plus a 0-2 loop closer.
SkeletonModel triangle() {
    SkeletonModel m;
    for (int j = 0; j < 3; ++j) add_joint(m, j);
    m.edges.push_back(make_edge(0, 1, EdgeKind::Kinetic, {3.0, 0.0}));
    m.edges.push_back(make_edge(1, 2, EdgeKind::Kinetic, {1.0, 0.0}));
    m.edges.push_back(make_edge(0, 2, EdgeKind::Contextual, {1.0, 0.0}));
    return m;
}

std::vector<heatmap::ConfidenceMap> triangle_maps() {
    std::vector<heatmap::ConfidenceMap> maps;
    for (int j = 0; j < 3; ++j) maps.push_back(heatmap::make_map(7, 1, j));
    maps[0].at(0, 0) = 4.0;
    maps[1].at(3, 0) = 4.0;
    // Joint 2 has no appearance evidence; only the edges place it.
    return maps;
}

}  // namespace

TEST_CASE("unrolling a pure tree adds no virtual nodes") {
    SkeletonModel m = skeleton::default_model();
    m.edges.erase(std::remove_if(m.edges.begin(), m.edges.end(),
                                 [](const EdgeSpec& e) {
                                     return e.kind == EdgeKind::Contextual;
                                 }),
                  m.edges.end());
    const auto tree = inference::unroll(m, 0);
    CHECK(tree.nodes.size() == m.joints.size());
    CHECK(tree.real_count == static_cast<int>(m.joints.size()));
    const auto depths = skeleton::kinetic_depths(m, 0);
    std::vector<int> seen(m.joints.size(), 0);
    for (const auto& nd : tree.nodes) {
        CHECK_FALSE(nd.is_virtual);
        CHECK(nd.depth == depths[nd.joint]);
        seen[nd.joint] += 1;
        if (nd.parent >= 0) {
            CHECK(tree.nodes[nd.parent].depth == nd.depth - 1);
            const EdgeSpec& e = m.edges[nd.edge_index];
            const int pj = tree.nodes[nd.parent].joint;
            CHECK(((e.i == pj && e.j == nd.joint) || (e.j == pj && e.i == nd.joint)));
            CHECK(nd.parent_is_i == (e.i == pj));
        }
    }
    for (int c : seen) CHECK(c == 1);
    CHECK_THROWS_AS((void)inference::unroll(m, 99), std::invalid_argument);
}

TEST_CASE("loop closers become one virtual leaf each, direction picks the copy") {
    const SkeletonModel m = triangle();

    const auto fwd = inference::unroll(m, 0, Direction::Forward);
    REQUIRE(fwd.nodes.size() == 4);
    CHECK(fwd.real_count == 3);
    const auto& vf = fwd.nodes[3];
    CHECK(vf.is_virtual);
    CHECK(vf.joint == 2);  // kinetically deeper endpoint of the 0-2 edge
    CHECK(fwd.nodes[vf.parent].joint == 0);
    CHECK(vf.children.empty());
    CHECK(vf.depth == 1);

    const auto bwd = inference::unroll(m, 0, Direction::Backward);
    REQUIRE(bwd.nodes.size() == 4);
    const auto& vb = bwd.nodes[3];
    CHECK(vb.is_virtual);
    CHECK(vb.joint == 0);  // reversed: the shallower endpoint is duplicated
    CHECK(bwd.nodes[vb.parent].joint == 2);
}

TEST_CASE("single-joint DP table is the unary table") {
    SkeletonModel m;
    add_joint(m, 0);
    std::vector<heatmap::ConfidenceMap> maps{heatmap::make_map(4, 3, 0)};
    for (int k = 0; k < 12; ++k) maps[0].values[k] = k / 16.0;
    const auto tree = inference::unroll(m, 0);
    const auto tables = inference::dp_pass(tree, m, maps);
    for (int o = 0; o < 3; ++o)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 4; ++x)
                CHECK(tables.best[0][(o * 3 + y) * 4 + x] ==
                      scoring::unary_score(m, maps, 0, {x, y},
                                           static_cast<OcclusionState>(o)));
}

TEST_CASE("two-joint chain: root table equals exhaustive max over child states") {
    SkeletonModel m;
    add_joint(m, 0);
    add_joint(m, 1);
    EdgeSpec e = make_edge(0, 1, EdgeKind::Kinetic, {1.0, 0.0});
    e.fwd.deform_weights = {{0.25, -1.0, 0.5, -0.5}};
    e.bwd.deform_weights = {{-0.5, -1.0, 0.0, -0.25}};
    e.bwd.type_priors = {0.5};
    for (int oi = 0; oi < 3; ++oi)
        for (int oj = 0; oj < 3; ++oj) e.bias(0, 0, oi, oj) = (oi - oj) * 0.125;
    m.edges = {e};

    std::vector<heatmap::ConfidenceMap> maps;
    for (int j = 0; j < 2; ++j) {
        auto map = heatmap::make_map(3, 3, j);
        for (int k = 0; k < 9; ++k) map.values[k] = ((k * 7 + j * 5) % 13) / 16.0;
        maps.push_back(std::move(map));
    }

    const auto tree = inference::unroll(m, 0);
    REQUIRE(tree.nodes.size() == 2);
    REQUIRE(tree.nodes[1].parent_is_i);  // root joint 0 plays the "i" role
    for (DpBackend backend :
         {DpBackend::Naive, DpBackend::NaiveParallel, DpBackend::Separable}) {
        const auto tables = inference::dp_pass(tree, m, maps, backend);
        for (int o0 = 0; o0 < 3; ++o0)
            for (int y0 = 0; y0 < 3; ++y0)
                for (int x0 = 0; x0 < 3; ++x0) {
                    double best_child = -1e300;
                    for (int o1 = 0; o1 < 3; ++o1)
                        for (int y1 = 0; y1 < 3; ++y1)
                            for (int x1 = 0; x1 < 3; ++x1) {
                                const double s =
                                    scoring::unary_score(m, maps, 1, {x1, y1},
                                                         static_cast<OcclusionState>(o1)) +
                                    scoring::kinetic_pair_score(
                                        e, {x0, y0}, {x1, y1}, 0, 0,
                                        static_cast<OcclusionState>(o0),
                                        static_cast<OcclusionState>(o1));
                                best_child = std::max(best_child, s);
                            }
                    const double expected =
                        scoring::unary_score(m, maps, 0, {x0, y0},
                                             static_cast<OcclusionState>(o0)) +
                        best_child;
                    // Dyadic inputs with tiny magnitude: equality is exact.
                    CHECK(tables.best[0][(o0 * 3 + y0) * 3 + x0] == expected);
                }
    }
}

TEST_CASE("all three DP backends produce identical tables on dyadic instances") {
    synth::Rng rng(77);
    oracle::InstanceSpec spec;
    for (int rep = 0; rep < 5; ++rep) {
        const auto inst = oracle::random_instance(rng, spec);
        const auto tree = inference::unroll(inst.model, 0);
        const auto a = inference::dp_pass(tree, inst.model, inst.maps, DpBackend::Naive);
        const auto b =
            inference::dp_pass(tree, inst.model, inst.maps, DpBackend::NaiveParallel);
        const auto c = inference::dp_pass(tree, inst.model, inst.maps, DpBackend::Separable);
        CHECK(a.best == b.best);
        CHECK(a.best == c.best);
    }
}

TEST_CASE("separable backend stays within 1e-9 of the naive one off the dyadic grid") {
    synth::Rng rng(3111);
    SkeletonModel m;
    for (int j = 0; j < 3; ++j) add_joint(m, j);
    m.edges.push_back(make_edge(0, 1, EdgeKind::Kinetic, {0.0, 0.0}));
    m.edges.push_back(make_edge(1, 2, EdgeKind::Kinetic, {0.0, 0.0}));
    for (EdgeSpec& e : m.edges)
        for (auto* dir : {&e.fwd, &e.bwd}) {
            dir->mean_offsets = {{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)}};
            dir->deform_weights = {{rng.uniform(-1.0, 1.0), rng.uniform(-2.0, -0.1),
                                    rng.uniform(-1.0, 1.0), rng.uniform(-2.0, -0.1)}};
            dir->type_priors = {rng.uniform(0.0, 1.0)};
        }
    std::vector<heatmap::ConfidenceMap> maps;
    for (int j = 0; j < 3; ++j) {
        auto map = heatmap::make_map(9, 7, j);
        for (double& v : map.values) v = rng.uniform(0.0, 1.0);
        maps.push_back(std::move(map));
    }
    const auto tree = inference::unroll(m, 0);
    const auto naive = inference::dp_pass(tree, m, maps, DpBackend::Naive);
    const auto sep = inference::dp_pass(tree, m, maps, DpBackend::Separable);
    for (size_t n = 0; n < naive.best.size(); ++n)
        for (size_t s = 0; s < naive.best[n].size(); ++s)
            CHECK(naive.best[n][s] == doctest::Approx(sep.best[n][s]).epsilon(1e-9));
}

TEST_CASE("triangle: DP max matches enumeration of the unrolled model exactly") {
    const SkeletonModel m = triangle();
    const auto maps = triangle_maps();
    for (Direction dir : {Direction::Forward, Direction::Backward}) {
        const auto tree = inference::unroll(m, 0, dir);
        const auto tables = inference::dp_pass(tree, m, maps);
        const auto hyps = inference::top_hypotheses(tables, tree, 1.0);
        REQUIRE_FALSE(hyps.empty());
        const auto assignment = inference::backtrack_unrolled(tree, tables, hyps.front());
        const double replayed = inference::unrolled_score(tree, m, maps, assignment);
        CHECK(replayed == hyps.front().dp_score);
        const auto oracle_best = synth::enumerate_exact(
            inference::tree_to_model(tree, m), inference::tree_maps(tree, maps), 1e8);
        CHECK(oracle_best.score == hyps.front().dp_score);
        CHECK(hyps.front().dp_score == 9.0);
    }
}

TEST_CASE("collapse reports the duplicated joint from the copy nearest the root") {
    const SkeletonModel m = triangle();
    const auto maps = triangle_maps();
    const auto tree = inference::unroll(m, 0, Direction::Forward);
    const auto tables = inference::dp_pass(tree, m, maps);
    const auto hyps = inference::top_hypotheses(tables, tree, 1.0);
    const auto assignment = inference::backtrack_unrolled(tree, tables, hyps.front());
    // The pulls disagree: the real copy of joint 2 sits next to joint 1, the
    // virtual copy next to joint 0.
    REQUIRE(assignment.positions[2] == Cell{4, 0});
    REQUIRE(assignment.positions[3] == Cell{1, 0});
    const auto pose = inference::collapse(tree, m, assignment);
    CHECK(pose.positions[0] == Cell{0, 0});
    CHECK(pose.positions[1] == Cell{3, 0});
    // Both copies have real parents; depth 1 (under the root) beats depth 2.
    CHECK(pose.positions[2] == Cell{1, 0});
    CHECK(pose.rel_types.size() == m.edges.size());
    const auto direct = inference::backtrack(tree, m, tables, hyps.front());
    CHECK(direct.positions == pose.positions);
    CHECK(direct.occlusions == pose.occlusions);
}

TEST_CASE("top_hypotheses: retention count, ordering, and tie-breaks") {
    SkeletonModel m;
    add_joint(m, 0);
    std::vector<heatmap::ConfidenceMap> maps{heatmap::make_map(3, 2, 0)};
    // Two tied maxima; tie resolved by (y, x).
    maps[0].values = {0.5, 0.875, 0.25, 0.875, 0.125, 0.0625};
    const auto tree = inference::unroll(m, 0);
    const auto tables = inference::dp_pass(tree, m, maps);
    const auto all = inference::top_hypotheses(tables, tree, 1.0);
    REQUIRE(all.size() == 6);
    CHECK(all[0].root_position == Cell{1, 0});
    CHECK(all[1].root_position == Cell{0, 1});
    CHECK(all[0].root_occlusion == OcclusionState::Visible);
    for (size_t k = 1; k < all.size(); ++k) CHECK(all[k - 1].dp_score >= all[k].dp_score);
    CHECK(inference::top_hypotheses(tables, tree, 0.1).size() == 1);
    CHECK(inference::top_hypotheses(tables, tree, 0.5).size() == 3);
    CHECK_THROWS_AS((void)inference::top_hypotheses(tables, tree, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)inference::top_hypotheses(tables, tree, 1.5),
                    std::invalid_argument);
}

TEST_CASE("rescore drops configurations the model cannot score") {
    SkeletonModel m;
    add_joint(m, 0);
    add_joint(m, 1);
    m.edges = {make_edge(0, 1, EdgeKind::Kinetic, {1.0, 0.0})};
    std::vector<heatmap::ConfidenceMap> maps{heatmap::make_map(3, 3, 0),
                                             heatmap::make_map(3, 3, 1)};
    maps[0].at(0, 0) = 0.5;
    maps[1].at(1, 0) = 0.5;

    skeleton::PoseConfiguration good;
    good.positions = {{0, 0}, {1, 0}};
    good.occlusions = {OcclusionState::Visible, OcclusionState::Visible};
    good.rel_types = {{0, 0}};

    skeleton::PoseConfiguration oob = good;
    oob.positions[1] = {5, 0};  // outside the 3x3 grid

    skeleton::PoseConfiguration short_types = good;
    short_types.rel_types.clear();

    auto rr = inference::rescore(m, maps, {oob, good, short_types});
    CHECK(rr.skipped == 2);
    REQUIRE(rr.configs.size() == 1);
    CHECK(rr.configs[0].score == scoring::total_score(m, maps, good));
}

TEST_CASE("infer on a tree reproduces the exhaustive argmax") {
    synth::Rng rng(404);
    SkeletonModel m;
    add_joint(m, 0);
    add_joint(m, 1);
    m.edges = {make_edge(0, 1, EdgeKind::Kinetic, {1.0, 1.0})};
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<heatmap::ConfidenceMap> maps;
        for (int j = 0; j < 2; ++j) {
            auto map = heatmap::make_map(4, 4, j);
            for (double& v : map.values) v = rng.uniform_int(0, 256) / 256.0;
            maps.push_back(std::move(map));
        }
        const auto oracle_best = synth::brute_force_infer(m, maps);
        inference::InferOptions opt;
        opt.sigma = 1.0;
        opt.backend = static_cast<DpBackend>(rep % 3);
        const auto got = inference::infer(m, maps, 0, opt);
        CHECK(got.pose.score == oracle_best.score);
        if (oracle_best.multiplicity == 1) {
            CHECK(got.pose.positions == oracle_best.pose.positions);
            CHECK(got.pose.occlusions == oracle_best.pose.occlusions);
        }
        CHECK(got.score.forward == got.score.backward);  // a tree has no loops
    }
}
