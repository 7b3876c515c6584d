// Timing comparison of the message-passing backends (serial reference,
// OpenMP-parallel reference, separable fast path) and of the convolution
// kernels, on a synthetic scene at a configurable grid size.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "CLI11.hpp"

#include "bgsim/inference.hpp"
#include "bgsim/reference.hpp"
#include "bgsim/skeleton.hpp"
#include "bgsim/synth.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Backend timing comparison"};
    int size = 24;
    int repeat = 3;
    app.add_option("--size", size, "Grid side length");
    app.add_option("--repeat", repeat, "Repetitions per backend");
    CLI11_PARSE(app, argc, argv);

    const bgsim::skeleton::SkeletonModel model = bgsim::skeleton::default_model();
    bgsim::synth::SceneSpec spec;
    spec.width = size;
    spec.height = size;
    spec.seed = 7;
    const bgsim::synth::Scene scene = bgsim::synth::generate_scene(model, spec);
    const bgsim::inference::ComputationTree tree =
        bgsim::inference::unroll(model, 0, bgsim::inference::Direction::Forward);

    std::printf("grid %dx%d, %zu tree nodes, %d repetitions\n", size, size,
                tree.nodes.size(), repeat);

    const bgsim::inference::DpBackend backends[] = {
        bgsim::inference::DpBackend::Naive,
        bgsim::inference::DpBackend::NaiveParallel,
        bgsim::inference::DpBackend::Separable,
    };
    const char* names[] = {"naive (serial)", "naive (OpenMP)", "separable"};
    double root_max[3] = {0, 0, 0};
    for (int b = 0; b < 3; ++b) {
        const auto start = std::chrono::steady_clock::now();
        for (int r = 0; r < repeat; ++r) {
            const bgsim::inference::DPTables tables =
                bgsim::inference::dp_pass(tree, model, scene.maps, backends[b]);
            double m = tables.best[tree.root][0];
            for (double v : tables.best[tree.root]) m = std::max(m, v);
            root_max[b] = m;
        }
        std::printf("%-16s %8.3f s/pass (root max %.9f)\n", names[b],
                    seconds_since(start) / repeat, root_max[b]);
    }
    std::printf("max |separable - naive| root difference: %.3g\n",
                std::abs(root_max[2] - root_max[0]));

    const bgsim::heatmap::TransformKernel kernel = bgsim::heatmap::shift_kernel(2, -1);
    {
        const auto start = std::chrono::steady_clock::now();
        for (int r = 0; r < repeat; ++r)
            (void)bgsim::reference::convolve(scene.maps[0], kernel);
        std::printf("convolve (reference) %8.4f s/pass\n", seconds_since(start) / repeat);
    }
    {
        const auto start = std::chrono::steady_clock::now();
        for (int r = 0; r < repeat; ++r) (void)bgsim::heatmap::convolve(scene.maps[0], kernel);
        std::printf("convolve (OpenMP)    %8.4f s/pass\n", seconds_since(start) / repeat);
    }
    return 0;
}
