#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fafilter/pipeline.hpp"
#include "fafilter/svm.hpp"

namespace fafilter {

// All tunables of a run in one document: a [pipeline] section for the filter
// and an [svm] section for training. Both sections and every key are
// optional; the features key is required only where the pipeline is actually
// applied (fit takes features from the knowledge file instead).
struct RunConfig {
    PipelineConfig pipeline;             // pipeline.features empty = not set
    std::optional<double> tau_c;         // explicit candidate threshold
    double harvest_q = 0.99;             // quantile that derives tau_c
    TrainConfig svm;
};

RunConfig parse_run_config(const std::string& text);

// Applies one "section.key=value" override; unknown targets are rejected.
void apply_override(RunConfig& cfg, const std::string& spec);

}  // namespace fafilter
