#include "fafilter/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "fafilter/errors.hpp"

namespace fafilter {

AnomalyMap suppress_pixels(const AnomalyMap& map, const std::vector<ScoredCandidate>& candidates,
                           double alpha_min) {
    if (!(alpha_min >= 0.0 && alpha_min < 1.0)) throw ConfigError("alpha_min must lie in [0,1)");
    AnomalyMap out = map;
    for (const ScoredCandidate& sc : candidates) {
        if (!(sc.p_fa >= 0.0 && sc.p_fa <= 1.0))
            throw DataError("candidate false-alarm probability outside [0,1]");
        const double m = 1.0 - sc.p_fa * (1.0 - alpha_min);
        for (const auto& [r, c] : sc.candidate.pixels) out.at(r, c) = out.at(r, c) * m;
    }
    return out;
}

double adjust_image_score(double raw, const std::vector<ScoredCandidate>& candidates, double p_cut,
                          double lambda) {
    double fa_area = 0.0;
    double total_area = 0.0;
    for (const ScoredCandidate& sc : candidates) {
        total_area += sc.candidate.area;
        if (sc.p_fa >= p_cut) fa_area += sc.candidate.area;
    }
    const double r_fa = total_area > 0.0 ? fa_area / total_area : 0.0;
    return raw * (1.0 - lambda * r_fa);
}

BinaryMask regenerate_mask(const AnomalyMap& filtered, double tau) {
    return threshold_map(filtered, tau);
}

FilteredResult run_pipeline(const AnomalyMap& map, double raw_score, const SvmModel& model,
                            const PipelineConfig& cfg, bool identity) {
    if (cfg.features.empty()) throw ConfigError("pipeline config has no feature spec");
    if (!(cfg.p_cut > 0.0 && cfg.p_cut < 1.0)) throw ConfigError("p_cut must lie in (0,1)");
    if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) throw ConfigError("lambda must lie in [0,1]");
    if (!identity && model.scaler.dims() != cfg.features.size())
        throw DataError("model dimension does not match the configured feature spec");

    FilteredResult result;
    result.raw_score = raw_score;

    const BinaryMask hot = threshold_map(map, cfg.tau_c);
    std::vector<Candidate> found = label_components(hot, cfg.connectivity);
    for (Candidate& c : found) {
        if (c.area < cfg.min_area) continue;
        ScoredCandidate sc;
        sc.p_fa = identity ? 0.0 : false_alarm_probability(model, extract_features(c, map, cfg.features));
        sc.candidate = std::move(c);
        result.candidates.push_back(std::move(sc));
    }

    result.filtered = suppress_pixels(map, result.candidates, cfg.alpha_min);
    result.mask = regenerate_mask(result.filtered, cfg.tau);
    result.adjusted_score = adjust_image_score(raw_score, result.candidates, cfg.p_cut, cfg.lambda);
    return result;
}

}  // namespace fafilter
