#pragma once

#include <cstdint>
#include <vector>

#include "fafilter/knowledge.hpp"

namespace fafilter {

// Per-dimension z-score statistics. Zero-variance dimensions get std = 1 so
// they pass through as zeros.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;

    std::size_t dims() const { return mean.size(); }
    FeatureVector apply(const FeatureVector& v) const;
};

Scaler fit_scaler(const SampleSet& samples);

// K(a,b) = exp(-|a-b|^2 / (2 sigma^2))
double rbf_kernel(const FeatureVector& a, const FeatureVector& b, double sigma);

// Soft-margin RBF SVM in dual form. Support vectors live in scaled space;
// coefficients store alpha_n * y_n. The sigmoid calibration maps decision
// values to false-alarm probabilities: p = 1 / (1 + exp(A f + B)).
struct SvmModel {
    std::vector<FeatureVector> support_vectors;
    std::vector<double> alpha_y;
    double bias = 0.0;
    double sigma = 1.0;
    double penalty_c = 1.0;
    double platt_a = -1.0;
    double platt_b = 0.0;
    Scaler scaler;
};

struct TrainConfig {
    double penalty_c = 1.0;
    double sigma = 0.0;  // <= 0 selects the median heuristic
    double tol = 1e-3;   // KKT slack
    int max_passes = 10;
    bool calibrate = true;
};

// Sequential minimal optimization on the standard soft-margin dual. On
// return every training point satisfies the tol-relaxed KKT conditions.
// Requires both labels present and >= 2 samples with finite features.
SvmModel train_svm(const SampleSet& samples, const TrainConfig& cfg, std::uint64_t seed);

// f(o) = sum_n alpha_n y_n K(sv_n, scale(o)) + b
double decision_value(const SvmModel& model, const FeatureVector& features);

// Fits (A, B) by damped Newton on the cross-entropy of p against the labels
// (false alarm -> 1). Falls back to A=-1, B=0 if 100 iterations do not
// converge. Requires both classes.
void fit_platt(SvmModel& model, const SampleSet& samples);

double false_alarm_probability(const SvmModel& model, const FeatureVector& features);

// sigma = median pairwise distance among at most 1000 subsampled points of
// the scaled sample matrix; falls back to 1 when the median vanishes.
double median_heuristic_sigma(const std::vector<FeatureVector>& scaled, std::uint64_t seed);

}  // namespace fafilter
