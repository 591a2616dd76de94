#include "fafilter/candidates.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "fafilter/errors.hpp"

namespace fafilter {

void validate_map(const AnomalyMap& map) {
    if (map.height < 1 || map.width < 1) throw DataError("anomaly map dimensions must be positive");
    if (map.scores.size() != static_cast<std::size_t>(map.height) * map.width)
        throw DataError("anomaly map score count does not match its dimensions");
    for (double s : map.scores) {
        if (!std::isfinite(s)) throw DataError("anomaly map contains a non-finite score");
        if (s < 0.0 || s > 1.0) throw DataError("anomaly map score outside [0,1]");
    }
}

namespace {

constexpr std::array<std::pair<const char*, Feature>, 8> kFeatureNames = {{
    {"area", Feature::Area},
    {"width", Feature::Width},
    {"height", Feature::Height},
    {"aspect", Feature::Aspect},
    {"cx", Feature::Cx},
    {"cy", Feature::Cy},
    {"mean_score", Feature::MeanScore},
    {"max_score", Feature::MaxScore},
}};

}  // namespace

const char* feature_name(Feature f) {
    for (const auto& [name, feature] : kFeatureNames)
        if (feature == f) return name;
    return "?";
}

std::optional<Feature> feature_from_name(std::string_view name) {
    for (const auto& [n, feature] : kFeatureNames)
        if (name == n) return feature;
    return std::nullopt;
}

FeatureSpec parse_feature_spec(const std::vector<std::string>& names, const std::string& where) {
    if (names.empty()) throw ConfigError(where + ": feature list is empty");
    FeatureSpec spec;
    std::set<Feature> seen;
    for (const auto& name : names) {
        auto f = feature_from_name(name);
        if (!f) throw ConfigError(where + ": unknown feature name '" + name + "'");
        if (!seen.insert(*f).second) throw ConfigError(where + ": duplicate feature '" + name + "'");
        spec.push_back(*f);
    }
    return spec;
}

std::string format_feature_spec(const FeatureSpec& spec) {
    std::string out;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        if (i) out += ", ";
        out += feature_name(spec[i]);
    }
    return out;
}

BinaryMask threshold_map(const AnomalyMap& map, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("threshold tau must lie in [0,1]");
    BinaryMask mask = make_mask(map.height, map.width);
    for (std::size_t i = 0; i < map.scores.size(); ++i)
        mask.values[i] = map.scores[i] >= tau ? 1 : 0;
    return mask;
}

std::vector<Candidate> label_components(const BinaryMask& mask, int connectivity) {
    if (connectivity != 4 && connectivity != 8) throw ConfigError("connectivity must be 4 or 8");
    const int h = mask.height;
    const int w = mask.width;
    std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
    std::vector<Candidate> out;

    static constexpr int dr8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static constexpr int dc8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
    static constexpr int dr4[] = {-1, 0, 0, 1};
    static constexpr int dc4[] = {0, -1, 1, 0};
    const int* dr = connectivity == 8 ? dr8 : dr4;
    const int* dc = connectivity == 8 ? dc8 : dc4;
    const int ndirs = connectivity;

    std::vector<std::pair<int, int>> stack;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t idx = static_cast<std::size_t>(r) * w + c;
            if (mask.values[idx] == 0 || label[idx] >= 0) continue;
            const int id = static_cast<int>(out.size());
            Candidate cand;
            cand.src_height = h;
            cand.src_width = w;
            cand.min_row = cand.max_row = r;
            cand.min_col = cand.max_col = c;
            stack.clear();
            stack.emplace_back(r, c);
            label[idx] = id;
            while (!stack.empty()) {
                auto [pr, pc] = stack.back();
                stack.pop_back();
                cand.pixels.emplace_back(pr, pc);
                cand.min_row = std::min(cand.min_row, pr);
                cand.max_row = std::max(cand.max_row, pr);
                cand.min_col = std::min(cand.min_col, pc);
                cand.max_col = std::max(cand.max_col, pc);
                for (int d = 0; d < ndirs; ++d) {
                    const int nr = pr + dr[d];
                    const int nc = pc + dc[d];
                    if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                    const std::size_t nidx = static_cast<std::size_t>(nr) * w + nc;
                    if (mask.values[nidx] == 0 || label[nidx] >= 0) continue;
                    label[nidx] = id;
                    stack.emplace_back(nr, nc);
                }
            }
            std::sort(cand.pixels.begin(), cand.pixels.end());
            cand.area = static_cast<int>(cand.pixels.size());
            out.push_back(std::move(cand));
        }
    }
    // discovery is already raster-ordered; a stable sort on the bbox origin
    // keeps the documented order while preserving rasters as tie-break
    std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        if (a.min_row != b.min_row) return a.min_row < b.min_row;
        return a.min_col < b.min_col;
    });
    return out;
}

FeatureVector extract_features(const Candidate& c, const AnomalyMap& map, const FeatureSpec& spec) {
    if (spec.empty()) throw ConfigError("feature spec is empty");
    if (c.src_height != map.height || c.src_width != map.width)
        throw DataError("candidate was extracted from a map with different dimensions");
    double mean = 0.0;
    double maxv = 0.0;
    if (!c.pixels.empty()) {
        maxv = map.at(c.pixels.front().first, c.pixels.front().second);
        for (const auto& [r, col] : c.pixels) {
            const double s = map.at(r, col);
            mean += s;
            maxv = std::max(maxv, s);
        }
        mean /= static_cast<double>(c.pixels.size());
    }
    FeatureVector v;
    v.reserve(spec.size());
    for (Feature f : spec) {
        switch (f) {
            case Feature::Area: v.push_back(static_cast<double>(c.area)); break;
            case Feature::Width: v.push_back(static_cast<double>(c.bbox_width())); break;
            case Feature::Height: v.push_back(static_cast<double>(c.bbox_height())); break;
            case Feature::Aspect:
                v.push_back(static_cast<double>(c.bbox_width()) / static_cast<double>(c.bbox_height()));
                break;
            case Feature::Cx:
                v.push_back((c.min_col + c.max_col + 1) / (2.0 * c.src_width));
                break;
            case Feature::Cy:
                v.push_back((c.min_row + c.max_row + 1) / (2.0 * c.src_height));
                break;
            case Feature::MeanScore: v.push_back(mean); break;
            case Feature::MaxScore: v.push_back(maxv); break;
        }
    }
    return v;
}

}  // namespace fafilter
