#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fafilter::cmd {

// Exit codes shared by every subcommand.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;  // config / parse errors
constexpr int kExitIo = 3;      // filesystem and format errors
constexpr int kExitData = 4;    // data inadequacy (e.g. empty harvest)

struct SynthArgs {
    std::string profile;  // empty = built-in default profile
    std::string out_dir;
    int n_train = 10;
    int n_test_normal = 10;
    int n_test_abnormal = 10;
    std::uint64_t seed = 0;
    std::string format = "tensor-file";
};

struct FitArgs {
    std::string dataset;
    std::string knowledge;
    std::string config;  // optional
    std::string model_out;
    std::vector<std::string> overrides;  // section.key=value
    std::uint64_t seed = 0;
};

struct ApplyArgs {
    std::string dataset;
    std::string model;  // may be empty when identity is set
    std::string config;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    std::string format = "tensor-file";
    int jobs = 1;
    bool identity = false;  // force p_fa = 0 for every candidate
};

struct EvalArgs {
    std::string dataset;
    std::string filtered;  // apply's output directory
    std::string out_dir;
    std::string name = "detector";
};

int run_synth(const SynthArgs& args);
int run_fit(const FitArgs& args);
int run_apply(const ApplyArgs& args);
int run_eval(const EvalArgs& args);

}  // namespace fafilter::cmd
