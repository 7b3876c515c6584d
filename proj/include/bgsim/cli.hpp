#pragma once

#include <cstdint>
#include <string>

namespace bgsim::cli {

// Exit codes: 0 success, 1 suite/metric failure, 2 usage or input error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
    std::string command;       // infer | eval | synth | oracle
    std::string model_path;    // empty = built-in 15-joint model
    std::string input_path;    // infer: CMF; eval: predictions; synth: scene spec
    std::string gt_path;       // eval: ground truth
    std::string output_path;   // infer/eval: JSON; synth: directory
    std::string overlay_path;  // infer: portable pixmap visualization
    double sigma = 0.1;
    int nms_radius = 5;
    int max_persons = 8;
    uint64_t seed = 0;
    bool json_output = false;
    int instances = 500;  // oracle: suite size; synth: scene count
};

int cmd_infer(const RunConfig& config);
int cmd_eval(const RunConfig& config);
int cmd_synth(const RunConfig& config);
int cmd_oracle(const RunConfig& config);

// Dispatch on config.command.
int run(const RunConfig& config);

}  // namespace bgsim::cli
