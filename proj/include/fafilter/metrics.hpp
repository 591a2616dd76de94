#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fafilter/anomaly_map.hpp"

namespace fafilter {

// Mann-Whitney statistic: fraction of (positive, negative) pairs ordered
// correctly, ties counted 0.5. Equals the trapezoidal ROC area. Both classes
// must be present. The final division is num/den of exact integers, so the
// result matches pairwise counting bit for bit.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

// positive = anomalous, prediction = score >= t; F1 = 0 when degenerate
double f1_at_threshold(const std::vector<double>& scores, const std::vector<int>& labels, double t);

struct BestF1 {
    double f1 = 0.0;
    double threshold = 0.0;
};

// Scans the distinct scores and the midpoints between consecutive distinct
// scores; ties resolve to the smallest threshold.
BestF1 best_f1(const std::vector<double>& scores, const std::vector<int>& labels);

struct MetricPair {
    double auroc = 0.0;
    double f1 = 0.0;
};

MetricPair image_metrics(const std::vector<double>& scores, const std::vector<int>& labels);

// Pools every pixel across the test set; maps without a ground-truth mask
// contribute all-negative pixels.
MetricPair pixel_metrics(const std::vector<const AnomalyMap*>& maps,
                         const std::vector<const BinaryMask*>& ground_truth);

// Histogram densities over 64 bins of [0,1] (CSV: series,bin_lo,bin_hi,density)
// plus a self-contained SVG overlay of the per-class score distributions.
// Empty series are omitted with a warning on stderr.
void score_report(const std::vector<double>& train_scores,
                  const std::vector<std::pair<std::string, std::vector<double>>>& test_by_class,
                  const std::filesystem::path& csv_path, const std::filesystem::path& svg_path);

}  // namespace fafilter
