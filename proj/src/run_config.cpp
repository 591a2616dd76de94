#include "fafilter/run_config.hpp"

#include "fafilter/errors.hpp"
#include "fafilter/kvdoc.hpp"

namespace fafilter {

namespace {

[[noreturn]] void fail(const KvEntry& e, const std::string& msg) {
    if (e.line > 0) throw ConfigError("line " + std::to_string(e.line) + ": " + msg);
    throw ConfigError(msg);
}

void set_pipeline_key(RunConfig& cfg, const KvEntry& e) {
    PipelineConfig& p = cfg.pipeline;
    if (e.key == "features") {
        p.features = parse_feature_spec(kv_name_list(e), "line " + std::to_string(e.line));
    } else if (e.key == "tau") {
        p.tau = kv_double(e);
        if (p.tau < 0.0 || p.tau > 1.0) fail(e, "tau must lie in [0,1]");
    } else if (e.key == "tau_c") {
        const double v = kv_double(e);
        if (v < 0.0 || v > 1.0) fail(e, "tau_c must lie in [0,1]");
        cfg.tau_c = v;
    } else if (e.key == "harvest_q") {
        cfg.harvest_q = kv_double(e);
        if (cfg.harvest_q < 0.0 || cfg.harvest_q > 1.0) fail(e, "harvest_q must lie in [0,1]");
    } else if (e.key == "alpha_min") {
        p.alpha_min = kv_double(e);
        if (p.alpha_min < 0.0 || p.alpha_min >= 1.0) fail(e, "alpha_min must lie in [0,1)");
    } else if (e.key == "p_cut") {
        p.p_cut = kv_double(e);
        if (p.p_cut <= 0.0 || p.p_cut >= 1.0) fail(e, "p_cut must lie in (0,1)");
    } else if (e.key == "lambda") {
        p.lambda = kv_double(e);
        if (p.lambda < 0.0 || p.lambda > 1.0) fail(e, "lambda must lie in [0,1]");
    } else if (e.key == "min_area") {
        p.min_area = kv_int(e);
        if (p.min_area < 1) fail(e, "min_area must be at least 1");
    } else if (e.key == "connectivity") {
        p.connectivity = kv_int(e);
        if (p.connectivity != 4 && p.connectivity != 8) fail(e, "connectivity must be 4 or 8");
    } else {
        fail(e, "unknown key '" + e.key + "' in [pipeline]");
    }
}

void set_svm_key(RunConfig& cfg, const KvEntry& e) {
    TrainConfig& t = cfg.svm;
    if (e.key == "C") {
        t.penalty_c = kv_double(e);
        if (t.penalty_c <= 0.0) fail(e, "C must be positive");
    } else if (e.key == "sigma") {
        if (e.value == "median") {
            t.sigma = 0.0;
        } else {
            t.sigma = kv_double(e);
            if (t.sigma <= 0.0) fail(e, "sigma must be positive (or 'median')");
        }
    } else if (e.key == "tol") {
        t.tol = kv_double(e);
        if (t.tol <= 0.0) fail(e, "tol must be positive");
    } else if (e.key == "max_passes") {
        t.max_passes = kv_int(e);
        if (t.max_passes < 1) fail(e, "max_passes must be at least 1");
    } else if (e.key == "calibrate") {
        t.calibrate = kv_bool(e);
    } else {
        fail(e, "unknown key '" + e.key + "' in [svm]");
    }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    for (const auto& section : parse_kv_document(text)) {
        if (section.name == "pipeline") {
            for (const auto& e : section.entries) set_pipeline_key(cfg, e);
        } else if (section.name == "svm") {
            for (const auto& e : section.entries) set_svm_key(cfg, e);
        } else {
            throw ConfigError("line " + std::to_string(section.line) + ": unknown section '" +
                              section.name + "'");
        }
    }
    return cfg;
}

void apply_override(RunConfig& cfg, const std::string& spec) {
    const auto eq = spec.find('=');
    const auto dot = spec.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw ConfigError("override '" + spec + "' must look like section.key=value");
    const std::string section = spec.substr(0, dot);
    const KvEntry entry{0, spec.substr(dot + 1, eq - dot - 1), spec.substr(eq + 1)};
    if (entry.key.empty() || entry.value.empty())
        throw ConfigError("override '" + spec + "' must look like section.key=value");
    if (section == "pipeline")
        set_pipeline_key(cfg, entry);
    else if (section == "svm")
        set_svm_key(cfg, entry);
    else
        throw ConfigError("override '" + spec + "': unknown section '" + section + "'");
}

}  // namespace fafilter
