#include "bgsim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

#include "bgsim/scoring.hpp"

namespace bgsim::synth {

using heatmap::ConfidenceMap;
using skeleton::EdgeSpec;
using skeleton::OcclusionState;
using skeleton::SkeletonModel;

double Rng::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

int Rng::uniform_int(int lo, int hi) {
    const int n = hi - lo + 1;
    const int k = static_cast<int>(uniform01() * n);
    return lo + std::min(k, n - 1);
}

double Rng::gaussian(double mean, double sigma) {
    if (have_spare_) {
        have_spare_ = false;
        return mean + sigma * spare_;
    }
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return mean + sigma * r * std::cos(theta);
}

namespace {

struct GrowthStep {
    int parent = 0;
    int child = 0;
    Vec2 offset;  // expected child - parent
};

// Kinetic growth order: BFS from joint 0, adjacency in edge-list order. The
// same traversal the inference unrolling uses, so generator and model agree
// on which direction's offsets describe each limb.
std::vector<GrowthStep> growth_plan(const SkeletonModel& model) {
    std::vector<GrowthStep> plan;
    std::vector<char> seen(model.joint_count(), 0);
    seen[0] = 1;
    std::queue<int> q;
    q.push(0);
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (const EdgeSpec& edge : model.edges) {
            if (edge.kind != skeleton::EdgeKind::Kinetic) continue;
            int other = -1;
            Vec2 r;
            if (edge.i == u) {
                other = edge.j;
                r = edge.fwd.mean_offsets[0];
            } else if (edge.j == u) {
                other = edge.i;
                r = edge.bwd.mean_offsets[0];
            } else {
                continue;
            }
            if (seen[other]) continue;
            seen[other] = 1;
            plan.push_back({u, other, r});
            q.push(other);
        }
    }
    if (static_cast<int>(plan.size()) != model.joint_count() - 1)
        throw std::invalid_argument("generate_scene: kinetic edges do not span the joints");
    return plan;
}

void check_spec(const SceneSpec& s) {
    auto bad = [](const std::string& what) {
        throw std::invalid_argument("generate_scene: " + what);
    };
    if (s.width < 2 || s.height < 2) bad("grid must be at least 2x2");
    if (s.n_persons < 1) bad("n_persons must be >= 1");
    if (s.occlusion_rate < 0.0 || s.occlusion_rate > 1.0) bad("occlusion_rate outside [0,1]");
    if (s.self_occlusion_rate < 0.0 || s.self_occlusion_rate > 1.0)
        bad("self_occlusion_rate outside [0,1]");
    if (s.offset_noise_sigma < 0.0) bad("offset_noise_sigma must be >= 0");
    if (!(s.peak_sigma > 0.0)) bad("peak_sigma must be > 0");
    if (!(s.min_separation > 0.0)) bad("min_separation must be > 0");
    if (!(s.amplitude > 0.0)) bad("amplitude must be > 0");
    if (s.suppressed_amplitude < 0.0 || s.suppressed_amplitude > 0.15 * s.amplitude)
        bad("suppressed_amplitude must be in [0, 0.15 * amplitude]");
    if (s.background_noise < 0.0) bad("background_noise must be >= 0");
    if (s.margin < 0.0) bad("margin must be >= 0");
}

}  // namespace

Scene generate_scene(const SkeletonModel& model, const SceneSpec& spec) {
    check_spec(spec);
    const int n = model.joint_count();
    const std::vector<GrowthStep> plan = growth_plan(model);

    // Nominal skeleton extent relative to the root, for placement margins.
    std::vector<Vec2> nominal(n, {0.0, 0.0});
    for (const GrowthStep& g : plan) nominal[g.child] = nominal[g.parent] + g.offset;
    double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
    for (const Vec2& v : nominal) {
        min_x = std::min(min_x, v.x);
        max_x = std::max(max_x, v.x);
        min_y = std::min(min_y, v.y);
        max_y = std::max(max_y, v.y);
    }
    const double rx_lo = spec.margin - min_x;
    const double rx_hi = (spec.width - 1) - spec.margin - max_x;
    const double ry_lo = spec.margin - min_y;
    const double ry_hi = (spec.height - 1) - spec.margin - max_y;
    if (rx_lo > rx_hi || ry_lo > ry_hi)
        throw std::invalid_argument(
            "generate_scene: grid too small for the skeleton at the requested margin");

    Rng rng(spec.seed);

    // Root placement with minimum separation, bounded rejection sampling.
    std::vector<Vec2> roots;
    for (int p = 0; p < spec.n_persons; ++p) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            const Vec2 cand{rng.uniform(rx_lo, rx_hi), rng.uniform(ry_lo, ry_hi)};
            placed = true;
            for (const Vec2& r : roots)
                if (norm(cand - r) < spec.min_separation) {
                    placed = false;
                    break;
                }
            if (placed) roots.push_back(cand);
        }
        if (!placed)
            throw std::invalid_argument(
                "generate_scene: grid too small for n_persons at minimum separation");
    }

    Scene scene;
    for (const Vec2& root : roots) {
        GroundTruthPerson person;
        person.positions.assign(n, {0.0, 0.0});
        person.occlusions.assign(n, OcclusionState::Visible);
        person.positions[0] = root;
        for (const GrowthStep& g : plan) {
            Vec2 pos = person.positions[g.parent] + g.offset;
            pos.x += rng.gaussian(0.0, spec.offset_noise_sigma);
            pos.y += rng.gaussian(0.0, spec.offset_noise_sigma);
            pos.x = std::clamp(pos.x, 0.0, static_cast<double>(spec.width - 1));
            pos.y = std::clamp(pos.y, 0.0, static_cast<double>(spec.height - 1));
            person.positions[g.child] = pos;
        }
        // Two draws per joint keep the stream layout independent of outcomes.
        for (int j = 0; j < n; ++j) {
            const double u = rng.uniform01();
            const double v = rng.uniform01();
            if (u < spec.occlusion_rate) person.occlusions[j] = OcclusionState::OtherOccluded;
            else if (j > 0 && v < spec.self_occlusion_rate)
                person.occlusions[j] = OcclusionState::SelfOccluded;
        }
        scene.gts.push_back(std::move(person));
    }

    // Parent joint per non-root joint, for self-occlusion displacement.
    std::vector<int> parent(n, -1);
    for (const GrowthStep& g : plan) parent[g.child] = g.parent;

    scene.maps.reserve(n);
    for (int j = 0; j < n; ++j) {
        ConfidenceMap map = heatmap::make_map(spec.width, spec.height, j);
        for (double& v : map.values) v = spec.background_noise * rng.uniform01();
        scene.maps.push_back(std::move(map));
    }
    for (const GroundTruthPerson& person : scene.gts) {
        for (int j = 0; j < n; ++j) {
            Vec2 center = person.positions[j];
            double amp = spec.amplitude;
            switch (person.occlusions[j]) {
                case OcclusionState::Visible:
                    break;
                case OcclusionState::SelfOccluded:
                    center = center + spec.displacement_fraction *
                                          (person.positions[parent[j]] - center);
                    break;
                case OcclusionState::OtherOccluded:
                    amp = spec.suppressed_amplitude;
                    break;
            }
            const ConfidenceMap peak = heatmap::render_gaussian(
                spec.width, spec.height, center, spec.peak_sigma, amp, j);
            ConfidenceMap& map = scene.maps[j];
            for (size_t c = 0; c < map.values.size(); ++c)
                map.values[c] = std::max(map.values[c], peak.values[c]);
        }
    }
    return scene;
}

namespace {

// Seeded k-means on 2D points; empty clusters keep their center. Determinism:
// fixed iteration count, ties to the lower cluster index.
std::vector<Vec2> kmeans(const std::vector<Vec2>& points, int k, uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec2> centers;
    std::vector<int> used;
    for (int attempt = 0; attempt < 1000 && static_cast<int>(centers.size()) < k; ++attempt) {
        const int idx = rng.uniform_int(0, static_cast<int>(points.size()) - 1);
        if (std::find(used.begin(), used.end(), idx) == used.end()) {
            used.push_back(idx);
            centers.push_back(points[idx]);
        }
    }
    for (int idx = 0; static_cast<int>(centers.size()) < k; ++idx)
        centers.push_back(points[idx % points.size()]);

    std::vector<int> assign(points.size(), 0);
    for (int iter = 0; iter < 50; ++iter) {
        for (size_t p = 0; p < points.size(); ++p) {
            double best = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = squared_norm(points[p] - centers[c]);
                if (d < best) {
                    best = d;
                    assign[p] = c;
                }
            }
        }
        for (int c = 0; c < k; ++c) {
            Vec2 sum{0.0, 0.0};
            int count = 0;
            for (size_t p = 0; p < points.size(); ++p)
                if (assign[p] == c) {
                    sum = sum + points[p];
                    ++count;
                }
            // Division (not reciprocal multiply): exact whenever the true mean
            // is representable, e.g. identical samples.
            if (count > 0) centers[c] = {sum.x / count, sum.y / count};
        }
    }
    return centers;
}

}  // namespace

FitResult fit_offsets(const std::vector<Scene>& scenes, const SkeletonModel& model) {
    if (scenes.size() < 10)
        throw std::invalid_argument("fit_offsets: at least 10 scenes required");
    FitResult result;
    result.model = model;
    for (size_t e = 0; e < model.edges.size(); ++e) {
        const EdgeSpec& edge = model.edges[e];
        std::vector<Vec2> fwd_samples;
        for (const Scene& scene : scenes)
            for (const GroundTruthPerson& person : scene.gts)
                fwd_samples.push_back(person.positions[edge.j] - person.positions[edge.i]);
        if (static_cast<int>(fwd_samples.size()) < edge.num_types) {
            result.skipped_edges.push_back(static_cast<int>(e));
            continue;
        }
        std::vector<Vec2> bwd_samples(fwd_samples.size());
        for (size_t s = 0; s < fwd_samples.size(); ++s)
            bwd_samples[s] = -1.0 * fwd_samples[s];
        const uint64_t base = 0x9e3779b97f4a7c15ull ^ (e * 2);
        result.model.edges[e].fwd.mean_offsets =
            kmeans(fwd_samples, edge.num_types, base);
        result.model.edges[e].bwd.mean_offsets =
            kmeans(bwd_samples, edge.num_types, base + 1);
    }
    return result;
}

namespace {

struct EdgeTable {
    int lo = 0, hi = 0;    // joint ids, lo < hi
    std::vector<double> val;       // [s_lo * S + s_hi], max over type pairs
    std::vector<uint8_t> t_fwd;    // lexicographically first maximizing pair
    std::vector<uint8_t> t_bwd;
    std::vector<uint8_t> count;    // type pairs achieving the max
};

}  // namespace

BruteForceResult enumerate_exact(const SkeletonModel& model,
                                 const std::vector<ConfidenceMap>& maps, double budget) {
    const int n = model.joint_count();
    if (n < 1) throw std::invalid_argument("enumerate_exact: empty model");
    if (maps.size() != static_cast<size_t>(n))
        throw std::invalid_argument("enumerate_exact: one map per joint required");
    const int w = maps[0].width;
    const int h = maps[0].height;
    for (const auto& m : maps)
        if (m.width != w || m.height != h)
            throw std::invalid_argument("enumerate_exact: map dimensions differ");
    const long long wh = static_cast<long long>(w) * h;
    const long long S = wh * 3;

    double cost = 0.0;
    for (const EdgeSpec& edge : model.edges)
        cost += static_cast<double>(S) * S * edge.num_types * edge.num_types;
    cost += static_cast<double>(n + model.edges.size()) * std::pow(static_cast<double>(S), n);
    if (cost > budget)
        throw std::invalid_argument("enumerate_exact: instance exceeds the operation budget");

    auto state_cell = [&](long long s) {
        return Cell{static_cast<int>((s % wh) % w), static_cast<int>((s % wh) / w)};
    };
    auto state_occ = [&](long long s) { return static_cast<OcclusionState>(s / wh); };

    std::vector<std::vector<double>> unary(n, std::vector<double>(S));
    for (int j = 0; j < n; ++j)
        for (long long s = 0; s < S; ++s)
            unary[j][s] = scoring::unary_score(model, maps, j, state_cell(s), state_occ(s));

    std::vector<EdgeTable> tables(model.edges.size());
    for (size_t e = 0; e < model.edges.size(); ++e) {
        const EdgeSpec& edge = model.edges[e];
        EdgeTable& t = tables[e];
        t.lo = std::min(edge.i, edge.j);
        t.hi = std::max(edge.i, edge.j);
        t.val.resize(S * S);
        t.t_fwd.resize(S * S);
        t.t_bwd.resize(S * S);
        t.count.resize(S * S);
        for (long long sl = 0; sl < S; ++sl) {
            for (long long sh = 0; sh < S; ++sh) {
                const long long si = edge.i == t.lo ? sl : sh;
                const long long sj = edge.i == t.lo ? sh : sl;
                double best = -std::numeric_limits<double>::infinity();
                int bf = 0, bb = 0, cnt = 0;
                for (int tf = 0; tf < edge.num_types; ++tf) {
                    for (int tb = 0; tb < edge.num_types; ++tb) {
                        const double v =
                            scoring::pair_score(edge, state_cell(si), state_cell(sj), tf, tb,
                                                state_occ(si), state_occ(sj));
                        if (v > best) {
                            best = v;
                            bf = tf;
                            bb = tb;
                            cnt = 1;
                        } else if (v == best) {
                            ++cnt;
                        }
                    }
                }
                const size_t idx = static_cast<size_t>(sl) * S + sh;
                t.val[idx] = best;
                t.t_fwd[idx] = static_cast<uint8_t>(bf);
                t.t_bwd[idx] = static_cast<uint8_t>(bb);
                t.count[idx] = static_cast<uint8_t>(cnt);
            }
        }
    }

    // Edges grouped by their higher joint: fully determined once that joint's
    // state is chosen.
    std::vector<std::vector<int>> edges_at(n);
    for (size_t e = 0; e < model.edges.size(); ++e) edges_at[tables[e].hi].push_back(static_cast<int>(e));

    std::vector<long long> states(n, 0), best_states(n, 0);
    double best = -std::numeric_limits<double>::infinity();
    long long multiplicity = 0;

    // Depth-first over joint states in ascending joint order; first strict
    // improvement wins, so the reported argmax is the lexicographically first.
    auto recurse = [&](auto&& self, int d, double sum, long long cnt) -> void {
        if (d == n) {
            if (sum > best) {
                best = sum;
                best_states = states;
                multiplicity = cnt;
            } else if (sum == best) {
                multiplicity += cnt;
            }
            return;
        }
        for (long long s = 0; s < S; ++s) {
            states[d] = s;
            double next = sum + unary[d][s];
            long long c = cnt;
            for (int e : edges_at[d]) {
                const EdgeTable& t = tables[e];
                const size_t idx = static_cast<size_t>(states[t.lo]) * S + s;
                next += t.val[idx];
                c *= t.count[idx];
            }
            self(self, d + 1, next, c);
        }
    };
    recurse(recurse, 0, 0.0, 1);

    BruteForceResult result;
    result.multiplicity = multiplicity;
    result.pose.positions.resize(n);
    result.pose.occlusions.resize(n);
    for (int j = 0; j < n; ++j) {
        result.pose.positions[j] = state_cell(best_states[j]);
        result.pose.occlusions[j] = state_occ(best_states[j]);
    }
    result.pose.rel_types.resize(model.edges.size());
    for (size_t e = 0; e < model.edges.size(); ++e) {
        const EdgeTable& t = tables[e];
        const size_t idx = static_cast<size_t>(best_states[t.lo]) * S + best_states[t.hi];
        result.pose.rel_types[e] = {t.t_fwd[idx], t.t_bwd[idx]};
    }
    result.pose.score = scoring::total_score(model, maps, result.pose);
    result.score = result.pose.score;
    return result;
}

BruteForceResult brute_force_infer(const SkeletonModel& model,
                                   const std::vector<ConfidenceMap>& maps) {
    if (model.joint_count() > 4)
        throw std::invalid_argument("brute_force_infer: size cap exceeded (joints <= 4)");
    if (maps.empty() || maps[0].width > 8 || maps[0].height > 8)
        throw std::invalid_argument("brute_force_infer: size cap exceeded (grid <= 8x8)");
    for (const EdgeSpec& edge : model.edges)
        if (edge.num_types > 2)
            throw std::invalid_argument("brute_force_infer: size cap exceeded (types <= 2)");
    return enumerate_exact(model, maps, 1e18);
}

}  // namespace bgsim::synth
