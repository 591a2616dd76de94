#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace fafilter {

// Row-major grid of per-pixel prediction scores in [0,1].
struct AnomalyMap {
    int height = 0;
    int width = 0;
    std::vector<double> scores;

    double at(int r, int c) const { return scores[static_cast<std::size_t>(r) * width + c]; }
    double& at(int r, int c) { return scores[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return scores.size(); }
};

// One byte per pixel; nonzero = predicted anomalous.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;

    bool at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c] != 0; }
    void set(int r, int c, bool v) { values[static_cast<std::size_t>(r) * width + c] = v ? 1 : 0; }
    std::size_t true_count() const {
        std::size_t n = 0;
        for (auto v : values) n += (v != 0);
        return n;
    }
};

inline BinaryMask make_mask(int height, int width) {
    return BinaryMask{height, width, std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width, 0)};
}

// Throws DataError unless dimensions are positive, the score count matches,
// and every score is finite and in [0,1].
void validate_map(const AnomalyMap& map);

}  // namespace fafilter
