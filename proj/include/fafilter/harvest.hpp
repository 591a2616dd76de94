#pragma once

#include <cstdint>
#include <vector>

#include "fafilter/knowledge.hpp"

namespace fafilter {

// q-quantile (linear interpolation) of all pixel scores pooled across the
// training maps. q must lie in [0,1]; at least one map is required.
double compute_candidate_threshold(const std::vector<AnomalyMap>& train_maps, double q);

// Thresholds each training map at tau_c, labels components, drops candidates
// smaller than min_area, and extracts features per spec. Every sample is
// labeled false alarm. Maps without high-response regions contribute nothing.
SampleSet harvest_false_alarms(const std::vector<AnomalyMap>& train_maps, double tau_c,
                               const FeatureSpec& spec, int min_area, int connectivity = 8);

// Equalizes class counts by seeded downsampling of the larger class (never
// duplicating), then shuffles deterministically. Errors if either class is
// empty: a one-class fit is not a usable filter.
SampleSet balance(const SampleSet& defects, const SampleSet& false_alarms, std::uint64_t seed);

}  // namespace fafilter
