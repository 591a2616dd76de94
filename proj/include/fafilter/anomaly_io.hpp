#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fafilter/anomaly_map.hpp"
#include "fafilter/svm.hpp"

namespace fafilter {

// tensor-file: NPY v1.0 restricted to 2-D little-endian float32/float64
// C-order arrays. png16: 16-bit grayscale PNG, score = pixel / 65535.
enum class MapFormat {
    TensorFile,
    Png16,
};

MapFormat map_format_from_name(const std::string& name);  // "tensor-file" | "png16"
const char* map_format_name(MapFormat format);
const char* map_format_extension(MapFormat format);  // ".npy" | ".png"

AnomalyMap load_anomaly_map(const std::filesystem::path& path, MapFormat format);
void save_anomaly_map(const AnomalyMap& map, const std::filesystem::path& path, MapFormat format);

// dispatches on extension: .npy -> tensor-file, .png -> png16
AnomalyMap load_anomaly_map_auto(const std::filesystem::path& path);

// 8-bit grayscale PNG; pixel > 127 reads as anomalous, true writes as 255.
BinaryMask load_mask_png(const std::filesystem::path& path);
void save_mask_png(const BinaryMask& mask, const std::filesystem::path& path);

struct TestEntry {
    std::filesystem::path map;
    std::string category;
    bool abnormal = false;
    std::optional<std::filesystem::path> mask;  // present for every abnormal entry
};

struct DatasetIndex {
    std::filesystem::path root;
    std::vector<std::filesystem::path> train_good;
    std::vector<TestEntry> test;
};

// MVTec-style tree: train/good/* are anomaly-free; test/good/* are normal;
// test/<category>/* are abnormal and must have a mask under
// ground_truth/<category>/ named <stem>_mask.png or <stem>.png.
// Entries are sorted lexicographically by path.
DatasetIndex scan_dataset(const std::filesystem::path& root);

// Text model format, version tag "fafilter-model v1"; floats carry 17
// significant digits so decision values round-trip within 1e-12.
void save_model(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_model(const std::filesystem::path& path);

}  // namespace fafilter
