#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fafilter/anomaly_io.hpp"
#include "fafilter/knowledge.hpp"

namespace fafilter {

struct BetaParams {
    double a = 1.0;
    double b = 1.0;
};

// Blob bounding boxes: axis lengths in pixels, center in normalized (cx, cy).
struct BlobGeometry {
    Interval width;
    Interval height;
    Box region;
};

// Synthetic detector output model: anomaly-free background plus hot nuisance
// blobs on every image (the detector's own false alarms) and hot defect
// blobs on abnormal images only.
struct DetectorProfile {
    int height = 128;
    int width = 128;
    BetaParams background{1.2, 30.0};
    double nuisance_poisson_mean = 5.0;
    BlobGeometry nuisance{{8.0, 12.0}, {8.0, 12.0}, {0.06, 0.06, 0.94, 0.94}};
    BetaParams nuisance_score{9.0, 2.0};
    int defect_count = 1;
    BlobGeometry defect{{26.0, 38.0}, {26.0, 38.0}, {0.25, 0.25, 0.75, 0.75}};
    BetaParams defect_score{9.0, 2.0};
};

DetectorProfile default_profile();
DetectorProfile parse_profile(const std::string& text);

// Beta parameters positive, geometry always placeable inside the grid, and
// nuisance vs defect separable in at least one of width/height/region axes.
void validate_profile(const DetectorProfile& profile);

struct SimImage {
    AnomalyMap map;
    BinaryMask ground_truth;  // defect-blob pixels only
    double image_score = 0.0; // max pixel score
};

SimImage simulate_image(const DetectorProfile& profile, bool abnormal, std::uint64_t seed);

// Materializes an MVTec-style tree: train/good, test/good, test/defect,
// ground_truth/defect, plus image_scores.csv (path,score,label). Per-image
// seeds are mix_seed(seed, running index), so generation order is immaterial.
DatasetIndex simulate_dataset(const DetectorProfile& profile, int n_train, int n_test_normal,
                              int n_test_abnormal, std::uint64_t seed,
                              const std::filesystem::path& root,
                              MapFormat format = MapFormat::TensorFile);

}  // namespace fafilter
