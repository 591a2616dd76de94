#include "fafilter/harvest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fafilter/errors.hpp"
#include "fafilter/rng.hpp"

namespace fafilter {

double compute_candidate_threshold(const std::vector<AnomalyMap>& train_maps, double q) {
    if (train_maps.empty()) throw DataError("candidate threshold needs at least one training map");
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile q must lie in [0,1]");
    std::vector<double> pooled;
    std::size_t total = 0;
    for (const AnomalyMap& m : train_maps) total += m.scores.size();
    pooled.reserve(total);
    for (const AnomalyMap& m : train_maps) pooled.insert(pooled.end(), m.scores.begin(), m.scores.end());
    if (pooled.empty()) throw DataError("training maps contain no pixels");
    std::sort(pooled.begin(), pooled.end());
    const double pos = q * static_cast<double>(pooled.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= pooled.size()) return pooled.back();
    const double frac = pos - static_cast<double>(lo);
    return pooled[lo] + frac * (pooled[lo + 1] - pooled[lo]);
}

SampleSet harvest_false_alarms(const std::vector<AnomalyMap>& train_maps, double tau_c,
                               const FeatureSpec& spec, int min_area, int connectivity) {
    SampleSet out;
    for (const AnomalyMap& map : train_maps) {
        const BinaryMask mask = threshold_map(map, tau_c);
        for (const Candidate& c : label_components(mask, connectivity)) {
            if (c.area < min_area) continue;
            out.push_back(Sample{extract_features(c, map, spec), kLabelFalseAlarm});
        }
    }
    return out;
}

SampleSet balance(const SampleSet& defects, const SampleSet& false_alarms, std::uint64_t seed) {
    if (defects.empty())
        throw DataError("no defect samples: the knowledge spec generated nothing to train on");
    if (false_alarms.empty())
        throw DataError(
            "no false-alarm samples harvested: lower the harvest quantile (tau_c) or relax "
            "min_area so the training maps yield candidates");
    const std::size_t target = std::min(defects.size(), false_alarms.size());
    Rng rng(seed);

    const auto pick = [&](const SampleSet& from) {
        std::vector<std::size_t> idx(from.size());
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        idx.resize(target);
        std::sort(idx.begin(), idx.end());
        SampleSet kept;
        kept.reserve(target);
        for (std::size_t i : idx) kept.push_back(from[i]);
        return kept;
    };

    SampleSet combined = pick(defects);
    const SampleSet fa = pick(false_alarms);
    combined.insert(combined.end(), fa.begin(), fa.end());
    rng.shuffle(combined);
    return combined;
}

}  // namespace fafilter
