#include <string>

#include "CLI11.hpp"

#include "bgsim/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Occlusion-aware multi-person pose inference over confidence maps"};
    app.require_subcommand(1);

    bgsim::cli::RunConfig config;
    int synth_instances = 10;

    CLI::App* infer = app.add_subcommand("infer", "Run the cascade on a CMF file");
    infer->add_option("--model", config.model_path, "Skeleton model JSON (default: built-in)");
    infer->add_option("--input", config.input_path, "Input CMF file")->required();
    infer->add_option("--output", config.output_path, "Pose JSON output (default: stdout)");
    infer->add_option("--sigma", config.sigma, "Hypothesis retention fraction (0, 1]");
    infer->add_option("--nms-radius", config.nms_radius, "Peak separation radius, cells");
    infer->add_option("--max-persons", config.max_persons, "Assembly limit");
    infer->add_option("--overlay", config.overlay_path, "Write a PPM visualization");
    infer->callback([&] { config.command = "infer"; });

    CLI::App* eval = app.add_subcommand("eval", "Score predictions against ground truth");
    eval->add_option("--model", config.model_path, "Skeleton model JSON (default: built-in)");
    eval->add_option("--input", config.input_path, "Predictions JSON")->required();
    eval->add_option("--gt", config.gt_path, "Ground-truth JSON")->required();
    eval->add_option("--output", config.output_path, "Also write the report here");
    eval->add_flag("--json", config.json_output, "Machine-readable stdout");
    eval->callback([&] { config.command = "eval"; });

    CLI::App* synth = app.add_subcommand("synth", "Generate synthetic scenes");
    synth->add_option("--model", config.model_path, "Skeleton model JSON (default: built-in)");
    synth->add_option("--input", config.input_path, "Scene spec JSON (default spec otherwise)");
    synth->add_option("--output", config.output_path, "Output directory")->required();
    synth->add_option("--seed", config.seed, "Base seed; scene s uses seed + s");
    synth->add_option("--instances", synth_instances, "Number of scenes");
    synth->callback([&] {
        config.command = "synth";
        config.instances = synth_instances;
    });

    CLI::App* oracle = app.add_subcommand("oracle", "Exhaustive cross-check suites");
    oracle->add_option("--seed", config.seed, "Suite seed");
    oracle->add_option("--instances", config.instances, "Tree-suite instance count");
    oracle->callback([&] { config.command = "oracle"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? bgsim::cli::kExitOk : bgsim::cli::kExitUsage;
    }
    return bgsim::cli::run(config);
}
