#include "fafilter/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "fafilter/errors.hpp"
#include "fafilter/rng.hpp"

namespace fafilter {

FeatureVector Scaler::apply(const FeatureVector& v) const {
    if (v.size() != mean.size()) throw DataError("feature vector dimension does not match the scaler");
    FeatureVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean[i]) / stddev[i];
    return out;
}

Scaler fit_scaler(const SampleSet& samples) {
    if (samples.size() < 2) throw DataError("scaler needs at least 2 samples");
    const std::size_t d = samples.front().features.size();
    Scaler s;
    s.mean.assign(d, 0.0);
    s.stddev.assign(d, 0.0);
    for (const Sample& sample : samples) {
        if (sample.features.size() != d) throw DataError("inconsistent feature dimensions");
        for (std::size_t i = 0; i < d; ++i) s.mean[i] += sample.features[i];
    }
    const double n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < d; ++i) s.mean[i] /= n;
    for (const Sample& sample : samples)
        for (std::size_t i = 0; i < d; ++i) {
            const double delta = sample.features[i] - s.mean[i];
            s.stddev[i] += delta * delta;
        }
    for (std::size_t i = 0; i < d; ++i) {
        s.stddev[i] = std::sqrt(s.stddev[i] / n);  // population std
        if (s.stddev[i] <= 0.0) s.stddev[i] = 1.0;  // constant dimension passes through as 0
    }
    return s;
}

double rbf_kernel(const FeatureVector& a, const FeatureVector& b, double sigma) {
    if (a.size() != b.size()) throw DataError("kernel arguments have different dimensions");
    if (!(sigma > 0.0)) throw ConfigError("kernel width sigma must be positive");
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::exp(-sq / (2.0 * sigma * sigma));
}

double median_heuristic_sigma(const std::vector<FeatureVector>& scaled, std::uint64_t seed) {
    std::vector<std::size_t> idx(scaled.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (idx.size() > 1000) {
        Rng rng(seed);
        rng.shuffle(idx);
        idx.resize(1000);
        std::sort(idx.begin(), idx.end());
    }
    std::vector<double> dist;
    dist.reserve(idx.size() * (idx.size() - 1) / 2);
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = i + 1; j < idx.size(); ++j) {
            double sq = 0.0;
            const FeatureVector& a = scaled[idx[i]];
            const FeatureVector& b = scaled[idx[j]];
            for (std::size_t k = 0; k < a.size(); ++k) {
                const double d = a[k] - b[k];
                sq += d * d;
            }
            dist.push_back(std::sqrt(sq));
        }
    if (dist.empty()) return 1.0;
    std::sort(dist.begin(), dist.end());
    const std::size_t m = dist.size();
    const double median = (m % 2 == 1) ? dist[m / 2] : 0.5 * (dist[m / 2 - 1] + dist[m / 2]);
    return median > 1e-12 ? median : 1.0;
}

namespace {

// Platt-style SMO working state over the precomputed Gram matrix.
class SmoSolver {
public:
    SmoSolver(const std::vector<FeatureVector>& x, const std::vector<double>& y, double c,
              double sigma, double tol, int max_passes, std::uint64_t seed)
        : y_(y), c_(c), tol_(tol), max_passes_(max_passes), rng_(seed),
          n_(x.size()), alpha_(x.size(), 0.0), errors_(x.size(), 0.0) {
        gram_.resize(n_ * n_);
        for (std::size_t i = 0; i < n_; ++i) {
            gram_[i * n_ + i] = 1.0;
            for (std::size_t j = i + 1; j < n_; ++j) {
                const double k = rbf_kernel(x[i], x[j], sigma);
                gram_[i * n_ + j] = k;
                gram_[j * n_ + i] = k;
            }
        }
        for (std::size_t i = 0; i < n_; ++i) errors_[i] = -y_[i];  // f == 0 initially
    }

    void solve() {
        // A pure bias offset cannot be fixed by pair updates (they preserve
        // it), so recompute the bias from the final alphas before judging
        // KKT; retries also flush error-cache drift near the tolerance.
        for (int attempt = 0; attempt < 8; ++attempt) {
            main_loop();
            recompute_bias();
            refresh_errors();
            if (violation_count() == 0) return;
        }
        throw DataError("SMO failed to reach the KKT tolerance");
    }

    const std::vector<double>& alpha() const { return alpha_; }
    double bias() const { return bias_; }

private:
    double kernel(std::size_t i, std::size_t j) const { return gram_[i * n_ + j]; }

    bool at_lower(double a) const { return a <= 1e-12; }
    bool at_upper(double a) const { return a >= c_ - 1e-12; }
    bool non_bound(std::size_t i) const { return !at_lower(alpha_[i]) && !at_upper(alpha_[i]); }

    void main_loop() {
        bool examine_all = true;
        int idle_sweeps = 0;
        long safety = 0;
        while (idle_sweeps < max_passes_) {
            int changed = 0;
            for (std::size_t i = 0; i < n_; ++i)
                if (examine_all || non_bound(i)) changed += examine(i);
            if (examine_all) {
                if (changed == 0) return;  // full sweep clean: KKT holds everywhere
                examine_all = false;
            } else if (changed == 0) {
                examine_all = true;
            }
            idle_sweeps = changed == 0 ? idle_sweeps + 1 : 0;
            if (++safety > 200000) throw DataError("SMO exceeded its sweep budget");
        }
    }

    int examine(std::size_t i2) {
        const double y2 = y_[i2];
        const double a2 = alpha_[i2];
        const double e2 = errors_[i2];
        const double r2 = e2 * y2;
        const bool violates = (r2 < -tol_ && a2 < c_ - 1e-12) || (r2 > tol_ && a2 > 1e-12);
        if (!violates) return 0;

        // best |E1 - E2| over non-bound points
        std::size_t best = n_;
        double best_gap = -1.0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (!non_bound(i)) continue;
            const double gap = std::fabs(errors_[i] - e2);
            if (gap > best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        if (best < n_ && take_step(best, i2)) return 1;

        const std::size_t start = static_cast<std::size_t>(rng_.below(n_));
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t i1 = (start + k) % n_;
            if (non_bound(i1) && take_step(i1, i2)) return 1;
        }
        const std::size_t start2 = static_cast<std::size_t>(rng_.below(n_));
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t i1 = (start2 + k) % n_;
            if (take_step(i1, i2)) return 1;
        }
        return 0;
    }

    bool take_step(std::size_t i1, std::size_t i2) {
        if (i1 == i2) return false;
        const double a1 = alpha_[i1];
        const double a2 = alpha_[i2];
        const double y1 = y_[i1];
        const double y2 = y_[i2];
        const double e1 = errors_[i1];
        const double e2 = errors_[i2];
        const double s = y1 * y2;

        double lo, hi;
        if (s < 0.0) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(c_, c_ + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - c_);
            hi = std::min(c_, a1 + a2);
        }
        if (lo >= hi) return false;

        const double k11 = kernel(i1, i1);
        const double k12 = kernel(i1, i2);
        const double k22 = kernel(i2, i2);
        const double eta = k11 + k22 - 2.0 * k12;

        double a2_new;
        if (eta > 0.0) {
            a2_new = a2 + y2 * (e1 - e2) / eta;
            a2_new = std::min(hi, std::max(lo, a2_new));
        } else {
            // objective at the segment ends; with f = sum + bias the linear
            // coefficient of alpha_1 works out to y1(E1 - bias) - a1 K11 - s a2 K12
            const double f1 = y1 * (e1 - bias_) - a1 * k11 - s * a2 * k12;
            const double f2 = y2 * (e2 - bias_) - s * a1 * k12 - a2 * k22;
            const double l1 = a1 + s * (a2 - lo);
            const double h1 = a1 + s * (a2 - hi);
            const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                                  s * lo * l1 * k12;
            const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                                  s * hi * h1 * k12;
            if (obj_lo < obj_hi - 1e-14)
                a2_new = lo;
            else if (obj_lo > obj_hi + 1e-14)
                a2_new = hi;
            else
                return false;
        }
        if (std::fabs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12)) return false;

        const double a1_new = a1 + s * (a2 - a2_new);
        const double d1 = y1 * (a1_new - a1);
        const double d2 = y2 * (a2_new - a2);

        const double b1 = bias_ - e1 - d1 * k11 - d2 * k12;
        const double b2 = bias_ - e2 - d1 * k12 - d2 * k22;
        double new_bias;
        if (a1_new > 1e-12 && a1_new < c_ - 1e-12)
            new_bias = b1;
        else if (a2_new > 1e-12 && a2_new < c_ - 1e-12)
            new_bias = b2;
        else
            new_bias = 0.5 * (b1 + b2);
        const double delta_b = new_bias - bias_;

        alpha_[i1] = a1_new;
        alpha_[i2] = a2_new;
        bias_ = new_bias;
        for (std::size_t i = 0; i < n_; ++i)
            errors_[i] += d1 * kernel(i1, i) + d2 * kernel(i2, i) + delta_b;
        return true;
    }

    void refresh_errors() {
        for (std::size_t i = 0; i < n_; ++i) {
            double f = bias_;
            for (std::size_t j = 0; j < n_; ++j)
                if (alpha_[j] > 0.0) f += alpha_[j] * y_[j] * kernel(j, i);
            errors_[i] = f - y_[i];
        }
    }

    void recompute_bias() {
        std::vector<double> g(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                if (alpha_[j] > 0.0) g[i] += alpha_[j] * y_[j] * kernel(j, i);
        double sum = 0.0;
        std::size_t free_count = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (!non_bound(i)) continue;
            sum += y_[i] - g[i];
            ++free_count;
        }
        if (free_count > 0) {
            bias_ = sum / static_cast<double>(free_count);
            return;
        }
        // all alphas at bounds: any bias inside the KKT interval works
        double lo = -1e300, hi = 1e300;
        for (std::size_t i = 0; i < n_; ++i) {
            const bool lower = at_lower(alpha_[i]);
            if (y_[i] > 0.0) {
                if (lower) lo = std::max(lo, 1.0 - g[i]);
                else hi = std::min(hi, 1.0 - g[i]);
            } else {
                if (lower) hi = std::min(hi, -1.0 - g[i]);
                else lo = std::max(lo, -1.0 - g[i]);
            }
        }
        if (lo <= hi) bias_ = 0.5 * (lo + hi);
    }

    std::size_t violation_count() const {
        std::size_t count = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double r = errors_[i] * y_[i];
            if ((r < -tol_ && alpha_[i] < c_ - 1e-12) || (r > tol_ && alpha_[i] > 1e-12)) ++count;
        }
        return count;
    }

    const std::vector<double>& y_;
    double c_;
    double tol_;
    int max_passes_;
    Rng rng_;
    std::size_t n_;
    std::vector<double> alpha_;
    std::vector<double> errors_;
    std::vector<double> gram_;
    double bias_ = 0.0;
};

double stable_sigmoid(double z) {
    // 1 / (1 + exp(z)) without overflow
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

SvmModel train_svm(const SampleSet& samples, const TrainConfig& cfg, std::uint64_t seed) {
    if (samples.size() < 2) throw DataError("training needs at least 2 samples");
    if (!(cfg.penalty_c > 0.0)) throw ConfigError("penalty C must be positive");
    if (!(cfg.tol > 0.0)) throw ConfigError("KKT tolerance must be positive");
    bool has_pos = false;
    bool has_neg = false;
    for (const Sample& s : samples) {
        if (s.label == kLabelFalseAlarm) has_pos = true;
        else if (s.label == kLabelDefect) has_neg = true;
        else throw DataError("sample label must be +1 (false alarm) or -1 (defect)");
        for (double v : s.features)
            if (!std::isfinite(v)) throw DataError("sample contains a non-finite feature");
    }
    if (!has_pos || !has_neg) throw DataError("training requires both classes");

    SvmModel model;
    model.scaler = fit_scaler(samples);
    model.penalty_c = cfg.penalty_c;

    std::vector<FeatureVector> x;
    std::vector<double> y;
    x.reserve(samples.size());
    y.reserve(samples.size());
    for (const Sample& s : samples) {
        x.push_back(model.scaler.apply(s.features));
        y.push_back(static_cast<double>(s.label));
    }

    model.sigma = cfg.sigma > 0.0 ? cfg.sigma : median_heuristic_sigma(x, mix_seed(seed, 0x5197));

    SmoSolver solver(x, y, cfg.penalty_c, model.sigma, cfg.tol, cfg.max_passes, mix_seed(seed, 0x5310));
    solver.solve();

    const auto& alpha = solver.alpha();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (alpha[i] <= 1e-12) continue;
        model.support_vectors.push_back(x[i]);
        model.alpha_y.push_back(alpha[i] * y[i]);
    }
    model.bias = solver.bias();

    if (cfg.calibrate) fit_platt(model, samples);
    return model;
}

double decision_value(const SvmModel& model, const FeatureVector& features) {
    const FeatureVector scaled = model.scaler.apply(features);
    double f = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
        f += model.alpha_y[i] * rbf_kernel(model.support_vectors[i], scaled, model.sigma);
    return f;
}

void fit_platt(SvmModel& model, const SampleSet& samples) {
    bool has_pos = false;
    bool has_neg = false;
    std::vector<double> deci(samples.size());
    std::vector<double> target(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        deci[i] = decision_value(model, samples[i].features);
        target[i] = samples[i].label == kLabelFalseAlarm ? 1.0 : 0.0;
        (samples[i].label == kLabelFalseAlarm ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) throw DataError("calibration requires both classes");

    // damped Newton on the cross-entropy of p = 1/(1+exp(A f + B))
    const auto objective = [&](double a, double b) {
        double obj = 0.0;
        for (std::size_t i = 0; i < deci.size(); ++i) {
            const double z = a * deci[i] + b;
            // -t log p - (1-t) log(1-p), evaluated without overflow
            if (z >= 0.0)
                obj += target[i] * z + std::log1p(std::exp(-z));
            else
                obj += (target[i] - 1.0) * z + std::log1p(std::exp(z));
        }
        return obj;
    };

    double a = 0.0, b = 0.0;
    double fval = objective(a, b);
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
        double ga = 0.0, gb = 0.0, haa = 1e-12, hab = 0.0, hbb = 1e-12;
        for (std::size_t i = 0; i < deci.size(); ++i) {
            const double p = stable_sigmoid(a * deci[i] + b);
            const double d = target[i] - p;  // dF/dz
            ga += d * deci[i];
            gb += d;
            const double w = p * (1.0 - p);
            haa += w * deci[i] * deci[i];
            hab += w * deci[i];
            hbb += w;
        }
        if (std::fabs(ga) < 1e-5 && std::fabs(gb) < 1e-5) {
            converged = true;
            break;
        }
        const double det = haa * hbb - hab * hab;
        double da = -(hbb * ga - hab * gb) / det;
        double db = -(haa * gb - hab * ga) / det;
        double step = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 30; ++halving) {
            const double trial = objective(a + step * da, b + step * db);
            if (trial < fval + 1e-12) {
                a += step * da;
                b += step * db;
                fval = trial;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }
    if (!converged) {
        std::fprintf(stderr, "warning: sigmoid calibration did not converge; using A=-1, B=0\n");
        model.platt_a = -1.0;
        model.platt_b = 0.0;
        return;
    }
    model.platt_a = a;
    model.platt_b = b;
}

double false_alarm_probability(const SvmModel& model, const FeatureVector& features) {
    const double f = decision_value(model, features);
    return stable_sigmoid(model.platt_a * f + model.platt_b);
}

}  // namespace fafilter
