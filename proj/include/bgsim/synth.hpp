#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "bgsim/heatmap.hpp"
#include "bgsim/skeleton.hpp"

namespace bgsim::synth {

// Deterministic, portable randomness. The raw stream is std::mt19937_64
// (bit-exact everywhere by definition); the value transforms are fixed here
// instead of using std::*_distribution, whose outputs differ between standard
// libraries.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    // [0, 1), 53-bit resolution: (x >> 11) * 2^-53.
    double uniform01();
    double uniform(double lo, double hi);
    // Inclusive range via floor(u * n); the bias is < 2^-40 for n < 2^13.
    int uniform_int(int lo, int hi);
    // Box-Muller; the spare variate is cached, so draws come in pairs.
    double gaussian(double mean, double sigma);

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct SceneSpec {
    int width = 48;
    int height = 48;
    int n_persons = 1;
    double occlusion_rate = 0.0;      // per joint, hidden-by-other-object state
    double offset_noise_sigma = 0.0;  // cells, limb growth jitter
    double peak_sigma = 1.5;
    uint64_t seed = 0;

    // Rendering knobs; the defaults keep clean scenes trivially decodable.
    double min_separation = 4.0;          // between person roots, cells
    double amplitude = 1.0;               // visible peak height
    double suppressed_amplitude = 0.12;   // hidden-joint peak height
    double self_occlusion_rate = 0.0;     // per joint, given not hidden
    double displacement_fraction = 0.35;  // self-occluded peak shift toward parent
    double background_noise = 0.05;       // uniform per-cell floor amplitude
    double margin = 1.0;                  // root placement margin, cells
};

struct GroundTruthPerson {
    std::vector<Vec2> positions;  // true joint positions, never displaced
    std::vector<skeleton::OcclusionState> occlusions;
};

struct Scene {
    std::vector<GroundTruthPerson> gts;
    std::vector<heatmap::ConfidenceMap> maps;  // one per joint id
};

// Pure function of (model, spec): places person roots uniformly with minimum
// separation, grows skeletons along kinetic edges with the type-0 mean
// offsets plus Gaussian jitter, clips to the grid, samples occlusion states,
// and renders per-joint maps (element-wise max of peaks over persons on a
// uniform noise floor). Visible and self-occluded joints get full-height
// peaks (the latter displaced toward the parent); hidden joints get
// suppressed peaks at the true position.
Scene generate_scene(const skeleton::SkeletonModel& model, const SceneSpec& spec);

struct FitResult {
    skeleton::SkeletonModel model;
    std::vector<int> skipped_edges;  // fewer offset samples than types
};

// Re-estimates every edge direction's mean offsets from ground-truth relative
// positions: k-means into num_types clusters (seeded per edge, 50 iterations),
// cluster means written back as the offsets. Weights stay untouched; edges
// with fewer samples than types keep their prior offsets and are reported.
FitResult fit_offsets(const std::vector<Scene>& scenes,
                      const skeleton::SkeletonModel& model);

struct BruteForceResult {
    skeleton::PoseConfiguration pose;
    double score = 0.0;
    // Number of configurations achieving the maximum (1 = unique argmax).
    long long multiplicity = 0;
};

// Exhaustive maximization of scoring::total_score over every configuration,
// first-win ties (lexicographic by joint state in joint order, then by edge
// type pair in edge order). `budget` caps the estimated operation count.
BruteForceResult enumerate_exact(const skeleton::SkeletonModel& model,
                                 const std::vector<heatmap::ConfidenceMap>& maps,
                                 double budget);

// The public oracle: enumerate_exact behind hard size caps
// (joints <= 4, grid <= 8x8, types <= 2 per edge).
BruteForceResult brute_force_infer(const skeleton::SkeletonModel& model,
                                   const std::vector<heatmap::ConfidenceMap>& maps);

}  // namespace bgsim::synth
