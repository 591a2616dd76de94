#include <CLI11.hpp>

#include <cstdint>
#include <string>

#include "fafilter/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"fafilter - object-level false-alarm filtering for anomaly-detector score maps"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "global RNG seed")->capture_default_str();

    fafilter::cmd::SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth-data", "generate a synthetic benchmark dataset");
    synth_cmd->fallthrough();
    synth_cmd->add_option("--profile", synth.profile, "detector profile file (default: built-in)");
    synth_cmd->add_option("--out", synth.out_dir, "output dataset root")->required();
    synth_cmd->add_option("--train", synth.n_train, "training images")->capture_default_str();
    synth_cmd->add_option("--test-normal", synth.n_test_normal, "normal test images")
        ->capture_default_str();
    synth_cmd->add_option("--test-abnormal", synth.n_test_abnormal, "abnormal test images")
        ->capture_default_str();
    synth_cmd->add_option("--format", synth.format, "map format: tensor-file | png16")
        ->capture_default_str();

    fafilter::cmd::FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "harvest samples and train the false-alarm classifier");
    fit_cmd->fallthrough();
    fit_cmd->add_option("--dataset", fit.dataset, "dataset root")->required();
    fit_cmd->add_option("--knowledge", fit.knowledge, "fuzzy defect knowledge file")->required();
    fit_cmd->add_option("--config", fit.config, "run configuration file");
    fit_cmd->add_option("--model", fit.model_out, "output model path")->required();
    fit_cmd->add_option("--set", fit.overrides, "override a config key (section.key=value)");

    fafilter::cmd::ApplyArgs apply;
    auto* apply_cmd = app.add_subcommand("apply", "filter the test anomaly maps with a trained model");
    apply_cmd->fallthrough();
    apply_cmd->add_option("--dataset", apply.dataset, "dataset root")->required();
    apply_cmd->add_option("--model", apply.model, "trained model path");
    apply_cmd->add_option("--config", apply.config, "run configuration file")->required();
    apply_cmd->add_option("--out", apply.out_dir, "output directory")->required();
    apply_cmd->add_option("--format", apply.format, "output map format")->capture_default_str();
    apply_cmd->add_option("--jobs", apply.jobs, "parallel workers")->capture_default_str();
    apply_cmd->add_flag("--identity", apply.identity, "force p_fa = 0 (pass-through filter)");
    apply_cmd->add_option("--set", apply.overrides, "override a config key (section.key=value)");

    fafilter::cmd::EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "compare raw vs filtered metrics");
    eval_cmd->fallthrough();
    eval_cmd->add_option("--dataset", eval.dataset, "dataset root")->required();
    eval_cmd->add_option("--filtered", eval.filtered, "apply's output directory")->required();
    eval_cmd->add_option("--out", eval.out_dir, "report directory");
    eval_cmd->add_option("--name", eval.name, "model name for the report")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return fafilter::cmd::kExitConfig;
    }

    fit.seed = seed;
    apply.seed = seed;
    synth.seed = seed;

    if (synth_cmd->parsed()) return fafilter::cmd::run_synth(synth);
    if (fit_cmd->parsed()) return fafilter::cmd::run_fit(fit);
    if (apply_cmd->parsed()) return fafilter::cmd::run_apply(apply);
    if (eval_cmd->parsed()) return fafilter::cmd::run_eval(eval);
    return fafilter::cmd::kExitConfig;
}
