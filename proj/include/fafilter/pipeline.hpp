#pragma once

#include <vector>

#include "fafilter/candidates.hpp"
#include "fafilter/svm.hpp"

namespace fafilter {

struct PipelineConfig {
    double tau = 0.5;     // segmentation threshold
    double tau_c = 0.0;   // candidate threshold (resolved before running)
    FeatureSpec features;
    double alpha_min = 0.05;  // suppression floor, in [0,1)
    double p_cut = 0.5;       // false-alarm cut, in (0,1)
    double lambda = 1.0;      // image descent strength, in [0,1]
    int min_area = 4;
    int connectivity = 8;
};

struct ScoredCandidate {
    Candidate candidate;
    double p_fa = 0.0;
};

struct FilteredResult {
    AnomalyMap filtered;
    BinaryMask mask;
    double raw_score = 0.0;
    double adjusted_score = 0.0;
    std::vector<ScoredCandidate> candidates;
};

// Multiplies each pixel of candidate i by m_i = 1 - p_fa_i * (1 - alpha_min);
// pixels outside all candidates are untouched. Pointwise contraction.
AnomalyMap suppress_pixels(const AnomalyMap& map, const std::vector<ScoredCandidate>& candidates,
                           double alpha_min);

// adjusted = raw * (1 - lambda * r_fa) where r_fa is the area fraction of
// candidates classified false alarm (p_fa >= p_cut); 0 with no candidates.
double adjust_image_score(double raw, const std::vector<ScoredCandidate>& candidates,
                          double p_cut, double lambda);

BinaryMask regenerate_mask(const AnomalyMap& filtered, double tau);

// Candidate extraction at tau_c -> per-candidate classification ->
// pixel suppression -> mask regeneration at tau -> image score descent.
// identity forces p_fa = 0 for every candidate (the model is not consulted).
FilteredResult run_pipeline(const AnomalyMap& map, double raw_score, const SvmModel& model,
                            const PipelineConfig& cfg, bool identity = false);

}  // namespace fafilter
