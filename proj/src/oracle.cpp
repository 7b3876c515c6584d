#include "bgsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "bgsim/inference.hpp"
#include "bgsim/scoring.hpp"

namespace bgsim::oracle {

using heatmap::ConfidenceMap;
using skeleton::EdgeDirection;
using skeleton::EdgeKind;
using skeleton::EdgeSpec;
using skeleton::SkeletonModel;
using synth::Rng;

namespace {

// Dyadic rational in [lo, hi] with the given power-of-two denominator.
double dyadic(Rng& rng, double lo, double hi, int denom) {
    const int a = static_cast<int>(std::lround(lo * denom));
    const int b = static_cast<int>(std::lround(hi * denom));
    return static_cast<double>(rng.uniform_int(a, b)) / denom;
}

EdgeDirection random_direction(Rng& rng, int types) {
    EdgeDirection dir;
    for (int t = 0; t < types; ++t) {
        dir.mean_offsets.push_back({dyadic(rng, -3.0, 3.0, 4), dyadic(rng, -3.0, 3.0, 4)});
        dir.deform_weights.push_back({dyadic(rng, -1.0, 1.0, 256),
                                      dyadic(rng, -1.0, 0.0, 256),
                                      dyadic(rng, -1.0, 1.0, 256),
                                      dyadic(rng, -1.0, 0.0, 256)});
        dir.type_priors.push_back(dyadic(rng, 0.0, 1.0, 256));
    }
    dir.type_weight = dyadic(rng, -1.0, 1.0, 256);
    return dir;
}

EdgeSpec random_edge(Rng& rng, int i, int j, EdgeKind kind, int max_types) {
    EdgeSpec edge;
    edge.i = i;
    edge.j = j;
    edge.kind = kind;
    edge.num_types = rng.uniform_int(1, max_types);
    edge.fwd = random_direction(rng, edge.num_types);
    edge.bwd = random_direction(rng, edge.num_types);
    edge.occlusion_bias.resize(static_cast<size_t>(edge.num_types) * edge.num_types * 9);
    for (double& b : edge.occlusion_bias) b = dyadic(rng, -1.0, 1.0, 256);
    return edge;
}

double enumeration_cost(int n, int edges, long long wh) {
    const double states = static_cast<double>(wh) * 3;
    return std::pow(states, n) * (n + edges) + edges * states * states * 4;
}

}  // namespace

Instance random_instance(Rng& rng, const InstanceSpec& spec) {
    const int min_joints = spec.contextual ? 3 : 1;
    const int n = rng.uniform_int(min_joints, spec.max_joints);
    const int extra = spec.contextual ? 1 : 0;

    int w = 0, h = 0;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        w = rng.uniform_int(2, spec.max_dim);
        h = rng.uniform_int(2, spec.max_dim);
        // The loopy suite enumerates the unrolled model: one extra node.
        if (enumeration_cost(n + extra, n - 1 + extra, static_cast<long long>(w) * h) <=
            spec.budget)
            break;
        w = h = 0;
    }
    if (w == 0) throw std::invalid_argument("random_instance: budget too small");

    Instance inst;
    SkeletonModel& model = inst.model;
    for (int j = 0; j < n; ++j) {
        model.joints.push_back({j, "j" + std::to_string(j), 1});
        model.unary_weights.push_back(dyadic(rng, 0.0, 2.0, 256));
        model.unary_bias.push_back({dyadic(rng, -1.0, 1.0, 256), dyadic(rng, -1.0, 1.0, 256),
                                    dyadic(rng, -1.0, 1.0, 256)});
        model.oks_k.push_back(0.1);
    }
    for (int j = 1; j < n; ++j) {
        const int parent = rng.uniform_int(0, j - 1);
        if (rng.uniform01() < 0.5)
            model.edges.push_back(random_edge(rng, parent, j, EdgeKind::Kinetic, spec.max_types));
        else
            model.edges.push_back(random_edge(rng, j, parent, EdgeKind::Kinetic, spec.max_types));
    }
    if (spec.contextual) {
        std::vector<std::pair<int, int>> free_pairs;
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                bool used = false;
                for (const EdgeSpec& e : model.edges)
                    if ((e.i == a && e.j == b) || (e.i == b && e.j == a)) used = true;
                if (!used) free_pairs.emplace_back(a, b);
            }
        const auto [a, b] = free_pairs[rng.uniform_int(
            0, static_cast<int>(free_pairs.size()) - 1)];
        if (rng.uniform01() < 0.5)
            model.edges.push_back(random_edge(rng, a, b, EdgeKind::Contextual, spec.max_types));
        else
            model.edges.push_back(random_edge(rng, b, a, EdgeKind::Contextual, spec.max_types));
    }

    for (int j = 0; j < n; ++j) {
        ConfidenceMap map = heatmap::make_map(w, h, j);
        for (double& v : map.values) v = dyadic(rng, 0.0, 1.0, 256);
        inst.maps.push_back(std::move(map));
    }
    return inst;
}

SuiteReport run_tree_suite(uint64_t seed, int instances) {
    SuiteReport report;
    Rng rng(seed);
    InstanceSpec spec;
    for (int i = 0; i < instances; ++i) {
        const Instance inst = random_instance(rng, spec);
        const synth::BruteForceResult expected =
            synth::brute_force_infer(inst.model, inst.maps);

        inference::InferOptions opt;
        opt.sigma = 1.0;
        opt.backend = static_cast<inference::DpBackend>(i % 3);
        const inference::InferResult got =
            inference::infer(inst.model, inst.maps, 0, opt);

        ++report.instances;
        if (expected.multiplicity == 1) ++report.unique_maxima;
        if (got.pose.score != expected.score) {
            ++report.score_mismatches;
            if (report.first_failure.empty())
                report.first_failure = "instance " + std::to_string(i) + ": score " +
                                       std::to_string(got.pose.score) + " != " +
                                       std::to_string(expected.score);
        } else if (expected.multiplicity == 1 &&
                   (got.pose.positions != expected.pose.positions ||
                    got.pose.occlusions != expected.pose.occlusions ||
                    got.pose.rel_types != expected.pose.rel_types)) {
            ++report.config_mismatches;
            if (report.first_failure.empty())
                report.first_failure =
                    "instance " + std::to_string(i) + ": unique maximum, different config";
        }
    }
    return report;
}

SuiteReport run_loopy_suite(uint64_t seed, int instances) {
    SuiteReport report;
    Rng rng(seed);
    InstanceSpec spec;
    spec.contextual = true;
    // Enumerating the unrolled model costs (3wh)^(n+1); four real joints would
    // force degenerate 2x2 grids, so trade one joint for grid diversity.
    spec.max_joints = 3;
    spec.budget = 1e7;
    for (int i = 0; i < instances; ++i) {
        const Instance inst = random_instance(rng, spec);
        ++report.instances;
        for (const inference::Direction dir :
             {inference::Direction::Forward, inference::Direction::Backward}) {
            const inference::ComputationTree tree = inference::unroll(inst.model, 0, dir);
            const inference::DPTables tables = inference::dp_pass(
                tree, inst.model, inst.maps,
                static_cast<inference::DpBackend>((i + static_cast<int>(dir)) % 3));
            const std::vector<inference::Hypothesis> hyps =
                inference::top_hypotheses(tables, tree, 1.0);

            const SkeletonModel unrolled = inference::tree_to_model(tree, inst.model);
            const std::vector<ConfidenceMap> unrolled_maps =
                inference::tree_maps(tree, inst.maps);
            const synth::BruteForceResult expected =
                synth::enumerate_exact(unrolled, unrolled_maps, spec.budget * 16);

            const inference::UnrolledAssignment assignment =
                inference::backtrack_unrolled(tree, tables, hyps.front());
            const double backtracked =
                inference::unrolled_score(tree, inst.model, inst.maps, assignment);

            if (hyps.front().dp_score != expected.score ||
                backtracked != hyps.front().dp_score) {
                ++report.score_mismatches;
                if (report.first_failure.empty())
                    report.first_failure = "instance " + std::to_string(i) +
                                           (dir == inference::Direction::Forward
                                                ? " forward"
                                                : " backward") +
                                           ": dp " + std::to_string(hyps.front().dp_score) +
                                           " enum " + std::to_string(expected.score) +
                                           " backtracked " + std::to_string(backtracked);
                break;
            }
        }
    }
    return report;
}

}  // namespace bgsim::oracle
