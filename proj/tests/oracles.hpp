#pragma once

// Test-only reference implementations. Everything here is written against
// the math directly and shares no code with the library paths it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "fafilter/anomaly_map.hpp"

namespace oracle {

inline double rbf(const std::vector<double>& a, const std::vector<double>& b, double sigma) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
    return std::exp(-sq / (2.0 * sigma * sigma));
}

// population z-score, constant dimensions pass through
inline std::vector<std::vector<double>> zscore(const std::vector<std::vector<double>>& x) {
    const std::size_t n = x.size();
    const std::size_t d = x.front().size();
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
    for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j) sd[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
    for (std::size_t j = 0; j < d; ++j) {
        sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
        if (sd[j] <= 0.0) sd[j] = 1.0;
    }
    std::vector<std::vector<double>> out(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i][j] = (x[i][j] - mean[j]) / sd[j];
    return out;
}

struct QpSolution {
    bool ok = false;
    std::vector<double> alpha;
    double bias = 0.0;
    double objective = 0.0;  // dual: sum(alpha) - 0.5 a' Q a

    double decision(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                    double sigma, const std::vector<double>& probe) const {
        double f = bias;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (alpha[i] > 0.0) f += alpha[i] * y[i] * rbf(x[i], probe, sigma);
        return f;
    }
};

// Gaussian elimination with partial pivoting; false on near-singularity.
inline bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                         std::vector<double>& out) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) < 1e-10) return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
            b[r] -= factor * b[col];
        }
    }
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = b[i] / a[i][i];
    return true;
}

// Exact dense solve of the soft-margin dual
//   max  sum(alpha) - 0.5 sum_ij alpha_i alpha_j y_i y_j K_ij
//   s.t. 0 <= alpha <= C,  sum_i alpha_i y_i = 0
// by enumerating every {lower, upper, free} assignment (3^n configurations)
// and solving the stationarity system on the free set. Feasible only for the
// tiny problems the test corpus uses.
inline QpSolution solve_dual_qp(const std::vector<std::vector<double>>& x,
                                const std::vector<double>& y, double c, double sigma) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) k[i][j] = rbf(x[i], x[j], sigma);

    const auto objective = [&](const std::vector<double>& alpha) {
        double lin = 0.0, quad = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            lin += alpha[i];
            for (std::size_t j = 0; j < n; ++j)
                quad += alpha[i] * alpha[j] * y[i] * y[j] * k[i][j];
        }
        return lin - 0.5 * quad;
    };

    QpSolution best;
    std::size_t configs = 1;
    for (std::size_t i = 0; i < n; ++i) configs *= 3;

    for (std::size_t code = 0; code < configs; ++code) {
        std::vector<int> state(n);  // 0 = at 0, 1 = at C, 2 = free
        std::size_t rem = code;
        for (std::size_t i = 0; i < n; ++i) {
            state[i] = static_cast<int>(rem % 3);
            rem /= 3;
        }
        std::vector<std::size_t> free_set;
        for (std::size_t i = 0; i < n; ++i)
            if (state[i] == 2) free_set.push_back(i);

        std::vector<double> alpha(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            if (state[i] == 1) alpha[i] = c;

        double bias = 0.0;
        if (!free_set.empty()) {
            // rows: y_j K_ij alpha_j + b = y_i - C sum_{upper} y_j K_ij, then the
            // equality constraint
            const std::size_t m = free_set.size();
            std::vector<std::vector<double>> a(m + 1, std::vector<double>(m + 1, 0.0));
            std::vector<double> rhs(m + 1, 0.0);
            for (std::size_t r = 0; r < m; ++r) {
                const std::size_t i = free_set[r];
                for (std::size_t csel = 0; csel < m; ++csel) {
                    const std::size_t j = free_set[csel];
                    a[r][csel] = y[j] * k[i][j];
                }
                a[r][m] = 1.0;
                double fixed = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    if (state[j] == 1) fixed += y[j] * k[i][j];
                rhs[r] = y[i] - c * fixed;
            }
            double fixed_sum = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (state[j] == 1) fixed_sum += y[j];
            for (std::size_t csel = 0; csel < m; ++csel) a[m][csel] = y[free_set[csel]];
            rhs[m] = -c * fixed_sum;

            std::vector<double> solution;
            if (!solve_linear(a, rhs, solution)) continue;
            bool feasible = true;
            for (std::size_t r = 0; r < m; ++r) {
                if (solution[r] < -1e-9 || solution[r] > c + 1e-9) {
                    feasible = false;
                    break;
                }
                alpha[free_set[r]] = std::min(c, std::max(0.0, solution[r]));
            }
            if (!feasible) continue;
            bias = solution[m];
        } else {
            double balance = 0.0;
            for (std::size_t j = 0; j < n; ++j) balance += alpha[j] * y[j];
            if (std::fabs(balance) > 1e-9) continue;
            // bias only constrained by the inequality KKT conditions
            double lo = -1e18, hi = 1e18;
            for (std::size_t i = 0; i < n; ++i) {
                double g = 0.0;
                for (std::size_t j = 0; j < n; ++j) g += alpha[j] * y[j] * k[i][j];
                // at 0: y(g + b) >= 1; at C: y(g + b) <= 1
                if (state[i] == 0) {
                    if (y[i] > 0.0) lo = std::max(lo, 1.0 - g);
                    else hi = std::min(hi, -1.0 - g);
                } else {
                    if (y[i] > 0.0) hi = std::min(hi, 1.0 - g);
                    else lo = std::max(lo, -1.0 - g);
                }
            }
            if (lo > hi + 1e-9) continue;
            bias = 0.5 * (std::max(lo, -1e18) + std::min(hi, 1e18));
        }

        // remaining KKT inequalities
        bool kkt = true;
        for (std::size_t i = 0; i < n && kkt; ++i) {
            double f = bias;
            for (std::size_t j = 0; j < n; ++j) f += alpha[j] * y[j] * k[i][j];
            const double margin = y[i] * f;
            if (state[i] == 0 && margin < 1.0 - 1e-7) kkt = false;
            if (state[i] == 1 && margin > 1.0 + 1e-7) kkt = false;
        }
        if (!kkt) continue;

        const double obj = objective(alpha);
        if (!best.ok || obj > best.objective) {
            best.ok = true;
            best.alpha = alpha;
            best.bias = bias;
            best.objective = obj;
        }
    }
    return best;
}

// cyclic Jacobi eigenvalues of a symmetric matrix
inline std::vector<double> symmetric_eigenvalues(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a[p][q]) < 1e-18) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a[i][p];
                    const double aiq = a[i][q];
                    a[i][p] = cs * aip - sn * aiq;
                    a[i][q] = sn * aip + cs * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a[p][i];
                    const double aqi = a[q][i];
                    a[p][i] = cs * api - sn * aqi;
                    a[q][i] = sn * api + cs * aqi;
                }
            }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
    return eig;
}

// queue flood fill; components as row-major sorted pixel lists, sorted by
// first pixel
inline std::vector<std::vector<std::pair<int, int>>> flood_components(const fafilter::BinaryMask& mask,
                                                                      int connectivity) {
    const int h = mask.height;
    const int w = mask.width;
    std::vector<char> seen(static_cast<std::size_t>(h) * w, 0);
    std::vector<std::vector<std::pair<int, int>>> out;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const std::size_t idx = static_cast<std::size_t>(r) * w + c;
            if (!mask.values[idx] || seen[idx]) continue;
            std::vector<std::pair<int, int>> comp;
            std::vector<std::pair<int, int>> queue{{r, c}};
            seen[idx] = 1;
            while (!queue.empty()) {
                auto [pr, pc] = queue.back();
                queue.pop_back();
                comp.emplace_back(pr, pc);
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        if (connectivity == 4 && dr != 0 && dc != 0) continue;
                        const int nr = pr + dr;
                        const int nc = pc + dc;
                        if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                        const std::size_t nidx = static_cast<std::size_t>(nr) * w + nc;
                        if (!mask.values[nidx] || seen[nidx]) continue;
                        seen[nidx] = 1;
                        queue.emplace_back(nr, nc);
                    }
            }
            std::sort(comp.begin(), comp.end());
            out.push_back(std::move(comp));
        }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

// O(n^2) pairwise AUROC with 0.5 ties; the division mirrors the library's
// num/den form so results must agree exactly
inline double pairwise_auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::uint64_t wins2 = 0;
    std::uint64_t positives = 0, negatives = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        ++positives;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            if (scores[i] > scores[j]) wins2 += 2;
            else if (scores[i] == scores[j]) wins2 += 1;
        }
    }
    for (int l : labels) negatives += (l == 0);
    return static_cast<double>(wins2) / static_cast<double>(2 * positives * negatives);
}

}  // namespace oracle
