#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fafilter/anomaly_map.hpp"

namespace fafilter {

// Object-level features measured on a candidate region. area is the pixel
// count, width/height/aspect come from the tight bounding box, cx/cy are the
// normalized bbox center in (0,1), mean/max are taken over the candidate's
// pixel scores.
enum class Feature {
    Area,
    Width,
    Height,
    Aspect,
    Cx,
    Cy,
    MeanScore,
    MaxScore,
};

using FeatureSpec = std::vector<Feature>;
using FeatureVector = std::vector<double>;

const char* feature_name(Feature f);
std::optional<Feature> feature_from_name(std::string_view name);

// Parses "area, aspect, cx" etc.; rejects unknown names, duplicates, and
// empty lists. `where` prefixes error messages ("knowledge line 3").
FeatureSpec parse_feature_spec(const std::vector<std::string>& names, const std::string& where);
std::string format_feature_spec(const FeatureSpec& spec);

// One connected component of above-threshold pixels.
struct Candidate {
    std::vector<std::pair<int, int>> pixels;  // (row, col), row-major sorted
    int min_row = 0, min_col = 0, max_row = 0, max_col = 0;
    int area = 0;
    int src_height = 0, src_width = 0;

    int bbox_width() const { return max_col - min_col + 1; }
    int bbox_height() const { return max_row - min_row + 1; }
};

// mask pixel true iff score >= tau; tau must lie in [0,1]
BinaryMask threshold_map(const AnomalyMap& map, double tau);

// Maximal connected components of true pixels, sorted by (min_row, min_col).
// connectivity is 4 or 8.
std::vector<Candidate> label_components(const BinaryMask& mask, int connectivity);

FeatureVector extract_features(const Candidate& c, const AnomalyMap& map, const FeatureSpec& spec);

}  // namespace fafilter
