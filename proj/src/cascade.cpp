#include "bgsim/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bgsim/scoring.hpp"

namespace bgsim::cascade {

using heatmap::ConfidenceMap;
using skeleton::EdgeKind;
using skeleton::EdgeSpec;
using skeleton::OcclusionState;
using skeleton::PoseConfiguration;
using skeleton::SkeletonModel;

std::vector<std::vector<int>> stage_plan(const SkeletonModel& model) {
    std::vector<std::vector<int>> plan(3);
    for (const skeleton::Joint& j : model.joints) plan[j.stage - 1].push_back(j.id);
    return plan;
}

StageBase select_base_point(const std::vector<ConfidenceMap>& maps,
                            const std::vector<int>& active_joints) {
    if (active_joints.empty())
        throw std::invalid_argument("select_base_point: no active joints");
    StageBase best;
    best.response = -std::numeric_limits<double>::infinity();
    std::vector<int> sorted = active_joints;
    std::sort(sorted.begin(), sorted.end());
    for (int j : sorted) {
        if (j < 0 || j >= static_cast<int>(maps.size()) || maps[j].values.empty())
            throw std::invalid_argument("select_base_point: missing map for joint " +
                                        std::to_string(j));
        const ConfidenceMap& map = maps[j];
        for (int y = 0; y < map.height; ++y)
            for (int x = 0; x < map.width; ++x)
                if (map.at(x, y) > best.response) {
                    best.joint = j;
                    best.position = {x, y};
                    best.response = map.at(x, y);
                }
    }
    return best;
}

namespace {

double map_max(const ConfidenceMap& map) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : map.values) m = std::max(m, v);
    return m;
}

// Unary plus incident pairwise contribution of one joint, everything else
// taken from `config`. The revision rule compares this locally.
double local_contribution(const SkeletonModel& model, const std::vector<ConfidenceMap>& maps,
                          const PoseConfiguration& config, int joint, Cell pos,
                          OcclusionState occ) {
    double total = scoring::unary_score(model, maps, joint, pos, occ);
    for (size_t e = 0; e < model.edges.size(); ++e) {
        const EdgeSpec& edge = model.edges[e];
        if (edge.i != joint && edge.j != joint) continue;
        const Cell pi = edge.i == joint ? pos : config.positions[edge.i];
        const Cell pj = edge.j == joint ? pos : config.positions[edge.j];
        const OcclusionState oi = edge.i == joint ? occ : config.occlusions[edge.i];
        const OcclusionState oj = edge.j == joint ? occ : config.occlusions[edge.j];
        total += scoring::pair_score(edge, pi, pj, config.rel_types[e].fwd,
                                     config.rel_types[e].bwd, oi, oj);
    }
    return total;
}

// Odd kernel size covering a (dx, dy) shift.
int shift_size(int dx, int dy) {
    const int r = std::max({std::abs(dx), std::abs(dy), 1});
    return 2 * r + 1;
}

// Zero the map outside a square window, pinning inference near `at`.
void window_map(ConfidenceMap& map, Cell at, int radius) {
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x)
            if (std::abs(x - at.x) > radius || std::abs(y - at.y) > radius)
                map.at(x, y) = 0.0;
}

}  // namespace

PersonResult run_stage(int stage_index, const SkeletonModel& model,
                       const std::vector<ConfidenceMap>& maps, PersonResult state,
                       const CascadeOptions& options, const StageBase* seed) {
    if (stage_index < 1 || stage_index > 3)
        throw std::invalid_argument("run_stage: stage_index must be 1..3");
    const int n = model.joint_count();
    if (maps.size() != static_cast<size_t>(n))
        throw std::invalid_argument("run_stage: one map per joint required");
    if (state.pose.positions.empty()) {
        state.pose.positions.assign(n, {0, 0});
        state.pose.occlusions.assign(n, OcclusionState::Visible);
        state.pose.rel_types.assign(model.edges.size(), {});
        state.assigned.assign(n, 0);
    }

    std::vector<int> active;
    for (const skeleton::Joint& j : model.joints)
        if (j.stage <= stage_index) active.push_back(j.id);

    // Boost previously hidden joints with confidence shifted from an assigned
    // visible neighbor along the first such edge (kinetic edges first).
    std::vector<ConfidenceMap> work = maps;
    for (int j : active) {
        if (!state.assigned[j] || state.pose.occlusions[j] != OcclusionState::OtherOccluded)
            continue;
        const EdgeSpec* donor_edge = nullptr;
        int donor = -1;
        for (int pass = 0; pass < 2 && donor < 0; ++pass) {
            const EdgeKind want = pass == 0 ? EdgeKind::Kinetic : EdgeKind::Contextual;
            for (const EdgeSpec& edge : model.edges) {
                if (edge.kind != want) continue;
                const int other = edge.i == j ? edge.j : edge.j == j ? edge.i : -1;
                if (other < 0 || !state.assigned[other]) continue;
                if (state.pose.occlusions[other] == OcclusionState::OtherOccluded) continue;
                donor = other;
                donor_edge = &edge;
                break;
            }
        }
        if (donor < 0) continue;
        const size_t e = donor_edge - model.edges.data();
        const bool donor_is_i = donor_edge->i == donor;
        const int t = donor_is_i ? state.pose.rel_types[e].fwd : state.pose.rel_types[e].bwd;
        const Vec2 r = donor_is_i ? donor_edge->fwd.mean_offsets[t]
                                  : donor_edge->bwd.mean_offsets[t];
        const int dx = static_cast<int>(std::lround(r.x));
        const int dy = static_cast<int>(std::lround(r.y));
        work[j] = heatmap::fuse_shifted(work[j], work[donor],
                                        heatmap::shift_kernel(dx, dy, shift_size(dx, dy)));
    }
    // Scores and the revision rule are judged on the boosted, unwindowed maps.
    const std::vector<ConfidenceMap> boosted = work;

    // Anchor the inference: joints fixed by earlier stages (or the stage-1
    // seed) only keep confidence near their committed cells, so a second
    // person elsewhere in the image cannot capture this person's stages.
    for (int j : active)
        if (state.assigned[j]) window_map(work[j], state.pose.positions[j], options.nms_radius);
    if (seed && !state.assigned[seed->joint])
        window_map(work[seed->joint], seed->position, options.nms_radius);

    // Base preference order: joints already placed, then fresh ones — the
    // later stages extend the person found so far rather than re-rooting.
    std::vector<int> detected_old, detected_new;
    for (int j : active) {
        if (map_max(work[j]) < options.detection_threshold) continue;
        (state.assigned[j] ? detected_old : detected_new).push_back(j);
    }
    if (detected_old.empty() && detected_new.empty())
        throw std::runtime_error("run_stage: no detectable joints");
    StageBase base;
    if (seed) {
        base = *seed;
    } else {
        base = select_base_point(work, detected_old.empty() ? detected_new : detected_old);
    }
    base.stage = stage_index;

    const skeleton::RestrictedModel restricted = skeleton::restrict(model, active);
    std::vector<ConfidenceMap> sub_maps;
    sub_maps.reserve(restricted.orig_ids.size());
    for (int id : restricted.orig_ids) sub_maps.push_back(work[id]);
    const int root = static_cast<int>(
        std::find(restricted.orig_ids.begin(), restricted.orig_ids.end(), base.joint) -
        restricted.orig_ids.begin());

    inference::InferOptions iopt;
    iopt.sigma = options.sigma;
    iopt.backend = options.backend;
    const inference::InferResult inferred = inference::infer(restricted.model, sub_maps, root, iopt);

    // Map the inferred sub-configuration back onto original ids.
    PoseConfiguration merged = state.pose;
    std::vector<char> was_assigned = state.assigned;
    for (size_t k = 0; k < restricted.orig_ids.size(); ++k) {
        const int orig = restricted.orig_ids[k];
        if (!was_assigned[orig]) {
            merged.positions[orig] = inferred.pose.positions[k];
            merged.occlusions[orig] = inferred.pose.occlusions[k];
            state.assigned[orig] = 1;
        }
    }
    // Edge types follow the new stage for every in-scope edge.
    std::vector<char> in_scope(n, 0);
    for (int id : restricted.orig_ids) in_scope[id] = 1;
    size_t sub_e = 0;
    for (size_t e = 0; e < model.edges.size(); ++e) {
        if (in_scope[model.edges[e].i] && in_scope[model.edges[e].j])
            merged.rel_types[e] = inferred.pose.rel_types[sub_e++];
    }
    // Strict local improvement check for joints fixed by earlier stages, each
    // against the merged configuration.
    for (size_t k = 0; k < restricted.orig_ids.size(); ++k) {
        const int orig = restricted.orig_ids[k];
        if (!was_assigned[orig]) continue;
        const double kept = local_contribution(model, boosted, merged, orig,
                                               state.pose.positions[orig],
                                               state.pose.occlusions[orig]);
        const double fresh = local_contribution(model, boosted, merged, orig,
                                                inferred.pose.positions[k],
                                                inferred.pose.occlusions[k]);
        if (fresh > kept) {
            merged.positions[orig] = inferred.pose.positions[k];
            merged.occlusions[orig] = inferred.pose.occlusions[k];
        } else {
            merged.positions[orig] = state.pose.positions[orig];
            merged.occlusions[orig] = state.pose.occlusions[orig];
        }
    }

    // Score the merged assignment under the restricted model (the full model
    // once stage 3 has run).
    PoseConfiguration sub;
    for (int id : restricted.orig_ids) {
        sub.positions.push_back(merged.positions[id]);
        sub.occlusions.push_back(merged.occlusions[id]);
    }
    sub_e = 0;
    for (size_t e = 0; e < model.edges.size(); ++e)
        if (in_scope[model.edges[e].i] && in_scope[model.edges[e].j])
            sub.rel_types.push_back(merged.rel_types[e]);
    std::vector<ConfidenceMap> score_maps;
    score_maps.reserve(restricted.orig_ids.size());
    for (int id : restricted.orig_ids) score_maps.push_back(boosted[id]);
    merged.score = scoring::total_score(restricted.model, score_maps, sub);

    state.pose = std::move(merged);
    state.per_stage_base.push_back(base);
    state.agreement = inferred.score.fused;
    return state;
}

PersonResult run_cascade(const SkeletonModel& model, const std::vector<ConfidenceMap>& maps,
                         const CascadeOptions& options, const StageBase* seed) {
    PersonResult state;
    for (int stage = 1; stage <= 3; ++stage)
        state = run_stage(stage, model, maps, std::move(state), options,
                          stage == 1 ? seed : nullptr);
    return state;
}

std::vector<PersonResult> assemble_persons(const SkeletonModel& model,
                                           const std::vector<ConfidenceMap>& maps,
                                           const CascadeOptions& options) {
    const std::vector<std::vector<int>> plan = stage_plan(model);
    std::vector<ConfidenceMap> work = maps;
    std::vector<PersonResult> results;
    // claimed[j] = positions already reported for joint j by accepted persons.
    std::vector<std::vector<Cell>> claimed(model.joint_count());

    auto mask_region = [&](int joint, Cell at) {
        ConfidenceMap& map = work[joint];
        for (int y = std::max(0, at.y - options.nms_radius);
             y <= std::min(map.height - 1, at.y + options.nms_radius); ++y)
            for (int x = std::max(0, at.x - options.nms_radius);
                 x <= std::min(map.width - 1, at.x + options.nms_radius); ++x)
                map.at(x, y) = 0.0;
    };

    // One candidate seed per surviving stage-1 peak, strongest first.
    std::vector<heatmap::Peak> seeds;
    for (int j : plan[0]) {
        const std::vector<heatmap::Peak> peaks =
            heatmap::find_peaks(maps[j], options.detection_threshold, options.nms_radius);
        seeds.insert(seeds.end(), peaks.begin(), peaks.end());
    }
    std::sort(seeds.begin(), seeds.end(), [](const heatmap::Peak& a, const heatmap::Peak& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.joint_id != b.joint_id) return a.joint_id < b.joint_id;
        return row_major_less(a.position, b.position);
    });

    for (const heatmap::Peak& peak : seeds) {
        if (static_cast<int>(results.size()) >= options.max_persons) break;
        // Earlier persons may have masked this peak away.
        if (work[peak.joint_id].at(peak.position.x, peak.position.y) <
            options.detection_threshold)
            continue;
        StageBase seed;
        seed.stage = 1;
        seed.joint = peak.joint_id;
        seed.position = peak.position;
        seed.response = work[peak.joint_id].at(peak.position.x, peak.position.y);

        PersonResult person;
        bool ok = true;
        try {
            person = run_cascade(model, work, options, &seed);
        } catch (const std::runtime_error&) {
            ok = false;
        }

        if (ok) {
            // A person that re-claims an earlier person's cells is a duplicate
            // detection; drop it but still mask, so its signal is consumed.
            for (int j = 0; j < model.joint_count() && ok; ++j)
                for (const Cell& c : claimed[j])
                    if (chebyshev(c, person.pose.positions[j]) <= options.nms_radius) {
                        ok = false;
                        break;
                    }
        }
        if (ok) {
            for (int j = 0; j < model.joint_count(); ++j)
                claimed[j].push_back(person.pose.positions[j]);
            results.push_back(person);
        }
        if (!person.pose.positions.empty())
            for (int j = 0; j < model.joint_count(); ++j)
                mask_region(j, person.pose.positions[j]);
        mask_region(seed.joint, seed.position);
    }
    std::stable_sort(results.begin(), results.end(),
                     [](const PersonResult& a, const PersonResult& b) {
                         return a.pose.score > b.pose.score;
                     });
    return results;
}

}  // namespace bgsim::cascade
