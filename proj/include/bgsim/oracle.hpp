#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bgsim/heatmap.hpp"
#include "bgsim/skeleton.hpp"
#include "bgsim/synth.hpp"

namespace bgsim::oracle {

// Random instances for exhaustive cross-checks. All parameters and map values
// are dyadic rationals (multiples of 1/256, offsets multiples of 1/4) with
// bounded magnitude, so every score below double precision's 53-bit window is
// computed exactly regardless of association order — dynamic programming,
// enumeration, and the separable fast path then agree bit for bit, not just
// within a tolerance.
struct InstanceSpec {
    int max_joints = 4;
    int max_dim = 8;          // per grid axis
    int max_types = 2;        // per edge
    bool contextual = false;  // add one loop-closing edge (needs >= 3 joints)
    double budget = 2e6;      // enumeration operation budget per instance
};

struct Instance {
    skeleton::SkeletonModel model;
    std::vector<heatmap::ConfidenceMap> maps;
};

Instance random_instance(synth::Rng& rng, const InstanceSpec& spec);

struct SuiteReport {
    int instances = 0;
    int score_mismatches = 0;
    int config_mismatches = 0;  // unique maximum but different configuration
    int unique_maxima = 0;
    std::string first_failure;  // empty when clean

    bool ok() const { return score_mismatches == 0 && config_mismatches == 0; }
};

// Tree-structured instances: the full inference pipeline (all three DP
// backends, round-robin) must reproduce the exhaustive maximum exactly, and
// the exact configuration whenever the maximum is unique.
SuiteReport run_tree_suite(uint64_t seed, int instances);

// Loop-closing instances: the DP root maximum and the backtracked assignment
// must match exhaustive enumeration of the unrolled model exactly, in both
// unrolling directions.
SuiteReport run_loopy_suite(uint64_t seed, int instances);

}  // namespace bgsim::oracle
