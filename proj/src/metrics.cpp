#include "fafilter/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "fafilter/errors.hpp"

namespace fafilter {

namespace {

void check_two_classes(const std::vector<int>& labels) {
    bool pos = false, neg = false;
    for (int l : labels) (l ? pos : neg) = true;
    if (!pos || !neg) throw DataError("metric requires both classes to be present");
}

struct Counts {
    std::uint64_t positives = 0;
    std::uint64_t negatives = 0;
};

Counts count_classes(const std::vector<int>& labels) {
    Counts c;
    for (int l : labels) (l ? c.positives : c.negatives) += 1;
    return c;
}

}  // namespace

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
    check_two_classes(labels);

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // integer numerator 2*wins + ties keeps the result exactly equal to
    // pairwise counting after one shared division
    std::uint64_t wins2 = 0;
    std::uint64_t neg_below = 0;
    std::size_t i = 0;
    const Counts c = count_classes(labels);
    while (i < order.size()) {
        std::size_t j = i;
        std::uint64_t pos_here = 0;
        std::uint64_t neg_here = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? pos_here : neg_here) += 1;
            ++j;
        }
        wins2 += pos_here * (2 * neg_below + neg_here);  // full wins below, half within the tie
        neg_below += neg_here;
        i = j;
    }
    const std::uint64_t den = 2 * c.positives * c.negatives;
    return static_cast<double>(wins2) / static_cast<double>(den);
}

double f1_at_threshold(const std::vector<double>& scores, const std::vector<int>& labels, double t) {
    if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
    check_two_classes(labels);
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= t;
        if (pred && labels[i]) ++tp;
        else if (pred) ++fp;
        else if (labels[i]) ++fn;
    }
    const std::uint64_t den = 2 * tp + fp + fn;
    return den == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(den);
}

BestF1 best_f1(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
    check_two_classes(labels);

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    const Counts c = count_classes(labels);
    // group by distinct score, descending; predicting everything >= u_j positive
    struct Group {
        double value;
        std::uint64_t tp;
        std::uint64_t fp;
    };
    std::vector<Group> groups;
    {
        std::uint64_t tp = 0, fp = 0;
        std::size_t i = 0;
        while (i < order.size()) {
            const double value = scores[order[i]];
            std::size_t j = i;
            while (j < order.size() && scores[order[j]] == value) {
                (labels[order[j]] ? tp : fp) += 1;
                ++j;
            }
            groups.push_back(Group{value, tp, fp});
            i = j;
        }
    }
    // F1 kept as an exact fraction so ties resolve to the smallest threshold
    std::uint64_t best_num = 0, best_den = 1;
    double best_threshold = 0.0;
    bool have_best = false;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const std::uint64_t fn = c.positives - groups[g].tp;
        const std::uint64_t den = 2 * groups[g].tp + groups[g].fp + fn;
        const std::uint64_t num = 2 * groups[g].tp;
        // smallest threshold realizing this prediction set: the midpoint to
        // the next lower distinct score, or the score itself at the bottom
        const double threshold = g + 1 < groups.size()
                                     ? 0.5 * (groups[g].value + groups[g + 1].value)
                                     : groups[g].value;
        const auto cmp = static_cast<unsigned __int128>(num) * best_den;
        const auto best_cmp = static_cast<unsigned __int128>(best_num) * den;
        if (!have_best || cmp > best_cmp || (cmp == best_cmp && threshold < best_threshold)) {
            best_num = num;
            best_den = den;
            best_threshold = threshold;
            have_best = true;
        }
    }
    BestF1 best;
    best.f1 = static_cast<double>(best_num) / static_cast<double>(best_den);
    best.threshold = best_threshold;
    return best;
}

MetricPair image_metrics(const std::vector<double>& scores, const std::vector<int>& labels) {
    return MetricPair{auroc(scores, labels), best_f1(scores, labels).f1};
}

MetricPair pixel_metrics(const std::vector<const AnomalyMap*>& maps,
                         const std::vector<const BinaryMask*>& ground_truth) {
    if (maps.size() != ground_truth.size()) throw DataError("maps and ground-truth lists differ in length");
    std::vector<double> scores;
    std::vector<int> labels;
    std::size_t total = 0;
    for (const AnomalyMap* m : maps) total += m->scores.size();
    scores.reserve(total);
    labels.reserve(total);
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const AnomalyMap& m = *maps[i];
        const BinaryMask* gt = ground_truth[i];
        if (gt && (gt->height != m.height || gt->width != m.width))
            throw DataError("ground-truth mask dimensions do not match the map");
        for (std::size_t p = 0; p < m.scores.size(); ++p) {
            scores.push_back(m.scores[p]);
            labels.push_back(gt && gt->values[p] ? 1 : 0);
        }
    }
    return MetricPair{auroc(scores, labels), best_f1(scores, labels).f1};
}

namespace {

constexpr int kBins = 64;

std::vector<double> histogram_density(const std::vector<double>& values) {
    std::vector<double> density(kBins, 0.0);
    for (double v : values) {
        int bin = static_cast<int>(v * kBins);
        bin = std::min(kBins - 1, std::max(0, bin));
        density[static_cast<std::size_t>(bin)] += 1.0;
    }
    const double bin_width = 1.0 / kBins;
    const double n = static_cast<double>(values.size());
    for (double& d : density) d /= n * bin_width;
    return density;
}

void svg_polyline(std::string& out, const std::vector<double>& density, double max_density,
                  const char* color) {
    out += "  <polyline fill=\"none\" stroke=\"";
    out += color;
    out += "\" stroke-width=\"1.5\" points=\"";
    char buf[64];
    for (int b = 0; b < kBins; ++b) {
        const double x = 60.0 + (static_cast<double>(b) + 0.5) / kBins * 520.0;
        const double y = 360.0 - density[static_cast<std::size_t>(b)] / max_density * 320.0;
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x, y);
        out += buf;
    }
    out += "\"/>\n";
}

}  // namespace

void score_report(const std::vector<double>& train_scores,
                  const std::vector<std::pair<std::string, std::vector<double>>>& test_by_class,
                  const std::filesystem::path& csv_path, const std::filesystem::path& svg_path) {
    std::vector<std::pair<std::string, std::vector<double>>> series;
    if (!train_scores.empty())
        series.emplace_back("train", histogram_density(train_scores));
    else
        std::fprintf(stderr, "warning: score report: empty class 'train' omitted\n");
    for (const auto& [name, values] : test_by_class) {
        if (values.empty()) {
            std::fprintf(stderr, "warning: score report: empty class '%s' omitted\n", name.c_str());
            continue;
        }
        series.emplace_back(name, histogram_density(values));
    }

    {
        std::ofstream csv(csv_path);
        if (!csv) throw IoError("cannot write '" + csv_path.string() + "'");
        csv << "series,bin_lo,bin_hi,density\n";
        char buf[160];
        for (const auto& [name, density] : series)
            for (int b = 0; b < kBins; ++b) {
                std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.9f\n", name.c_str(),
                              static_cast<double>(b) / kBins, static_cast<double>(b + 1) / kBins,
                              density[static_cast<std::size_t>(b)]);
                csv << buf;
            }
    }

    double max_density = 1e-9;
    for (const auto& [name, density] : series)
        for (double d : density) max_density = std::max(max_density, d);

    static constexpr const char* kColors[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44", "#aa3377"};
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
           "viewBox=\"0 0 640 400\">\n";
    svg += "  <rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    svg += "  <line x1=\"60\" y1=\"360\" x2=\"580\" y2=\"360\" stroke=\"black\"/>\n";
    svg += "  <line x1=\"60\" y1=\"40\" x2=\"60\" y2=\"360\" stroke=\"black\"/>\n";
    svg += "  <text x=\"60\" y=\"378\" font-size=\"12\">0</text>\n";
    svg += "  <text x=\"572\" y=\"378\" font-size=\"12\">1</text>\n";
    svg += "  <text x=\"300\" y=\"394\" font-size=\"12\">prediction score</text>\n";
    svg += "  <text x=\"8\" y=\"200\" font-size=\"12\" transform=\"rotate(-90 14 200)\">density</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % 5];
        svg_polyline(svg, series[s].second, max_density, color);
        char label[160];
        std::snprintf(label, sizeof(label),
                      "  <text x=\"470\" y=\"%zu\" font-size=\"12\" fill=\"%s\">%s</text>\n",
                      52 + s * 16, color, series[s].first.c_str());
        svg += label;
    }
    svg += "</svg>\n";

    std::ofstream out(svg_path);
    if (!out) throw IoError("cannot write '" + svg_path.string() + "'");
    out << svg;
}

}  // namespace fafilter
