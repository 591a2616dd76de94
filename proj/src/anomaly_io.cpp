#include "fafilter/anomaly_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fafilter/errors.hpp"

namespace fs = std::filesystem;

namespace fafilter {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ensure_parent_dir(const fs::path& path) {
    const fs::path parent = path.parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory '" + parent.string() + "': " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

// ---- tensor-file (NPY v1.0, 2-D <f4/<f8 C-order) ----

void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint32_t get_u32_le(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

AnomalyMap load_npy(const fs::path& path) {
    const std::string bytes = read_file(path);
    const auto fail = [&](const std::string& msg) -> void {
        throw IoError("'" + path.string() + "': " + msg);
    };
    static constexpr char kMagic[] = "\x93NUMPY";
    if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 6) != 0)
        fail("not a tensor file (bad magic)");
    const unsigned char major = static_cast<unsigned char>(bytes[6]);
    const unsigned char minor = static_cast<unsigned char>(bytes[7]);
    if (major != 1 || minor != 0) fail("unsupported tensor-file version");
    const std::size_t header_len = static_cast<unsigned char>(bytes[8]) |
                                   (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
    if (bytes.size() < 10 + header_len) fail("truncated header");
    const std::string header = bytes.substr(10, header_len);

    const auto find_value = [&](const std::string& key) -> std::string {
        const std::string pattern = "'" + key + "':";
        auto pos = header.find(pattern);
        if (pos == std::string::npos) fail("header missing '" + key + "'");
        pos += pattern.size();
        while (pos < header.size() && header[pos] == ' ') ++pos;
        return header.substr(pos);
    };

    std::string descr = find_value("descr");
    if (descr.size() < 5 || descr[0] != '\'') fail("malformed descr");
    descr = descr.substr(1, descr.find('\'', 1) - 1);
    std::size_t item_size = 0;
    if (descr == "<f8")
        item_size = 8;
    else if (descr == "<f4")
        item_size = 4;
    else
        fail("unsupported dtype '" + descr + "' (expect <f4 or <f8)");

    const std::string order = find_value("fortran_order");
    if (order.rfind("False", 0) != 0) {
        if (order.rfind("True", 0) == 0) fail("fortran-order arrays are not supported");
        fail("malformed fortran_order");
    }

    std::string shape = find_value("shape");
    if (shape.empty() || shape[0] != '(') fail("malformed shape");
    const auto close = shape.find(')');
    if (close == std::string::npos) fail("malformed shape");
    shape = shape.substr(1, close - 1);
    std::vector<long long> dims;
    std::istringstream dim_stream(shape);
    std::string token;
    while (std::getline(dim_stream, token, ',')) {
        token.erase(std::remove(token.begin(), token.end(), ' '), token.end());
        if (token.empty()) continue;
        try {
            dims.push_back(std::stoll(token));
        } catch (const std::exception&) {
            fail("malformed shape dimension '" + token + "'");
        }
    }
    if (dims.size() != 2) fail("expected a 2-D array, got " + std::to_string(dims.size()) + " dims");
    if (dims[0] < 1 || dims[1] < 1) fail("dimensions must be positive");

    AnomalyMap map;
    map.height = static_cast<int>(dims[0]);
    map.width = static_cast<int>(dims[1]);
    const std::size_t count = static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]);
    const std::size_t data_offset = 10 + header_len;
    if (bytes.size() != data_offset + count * item_size)
        fail("payload size does not match the declared shape");

    map.scores.resize(count);
    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + data_offset;
    for (std::size_t i = 0; i < count; ++i) {
        double v;
        if (item_size == 8) {
            v = std::bit_cast<double>(get_u64_le(p + i * 8));
        } else {
            v = static_cast<double>(std::bit_cast<float>(get_u32_le(p + i * 4)));
        }
        if (!std::isfinite(v)) fail("score at index " + std::to_string(i) + " is not finite");
        if (v < 0.0 || v > 1.0) fail("score at index " + std::to_string(i) + " outside [0,1]");
        map.scores[i] = v;
    }
    return map;
}

void save_npy(const AnomalyMap& map, const fs::path& path) {
    std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (" +
                       std::to_string(map.height) + ", " + std::to_string(map.width) + "), }";
    std::size_t total = 10 + dict.size() + 1;
    const std::size_t padded = (total + 63) / 64 * 64;
    dict.append(padded - total, ' ');
    dict.push_back('\n');

    std::string bytes;
    bytes.reserve(padded + map.scores.size() * 8);
    bytes.append("\x93NUMPY", 6);
    bytes.push_back('\x01');
    bytes.push_back('\x00');
    const std::size_t header_len = dict.size();
    bytes.push_back(static_cast<char>(header_len & 0xff));
    bytes.push_back(static_cast<char>((header_len >> 8) & 0xff));
    bytes += dict;
    for (double s : map.scores) put_u64_le(bytes, std::bit_cast<std::uint64_t>(s));
    write_file(path, bytes);
}

// ---- PNG (16-bit grayscale maps, 8-bit grayscale masks) ----

struct PngReader {
    FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;

    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriter {
    FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;

    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

// Reads a grayscale PNG of the required bit depth into a packed big-endian
// sample buffer (1 or 2 bytes per pixel).
void read_gray_png(const fs::path& path, int required_depth, int& height, int& width,
                   std::vector<unsigned char>& samples) {
    PngReader r;
    r.fp = std::fopen(path.string().c_str(), "rb");
    if (!r.fp) throw IoError("cannot open '" + path.string() + "'");
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (r.png) r.info = png_create_info_struct(r.png);
    if (!r.png || !r.info) throw IoError("libpng initialization failed");

    if (setjmp(png_jmpbuf(r.png))) throw IoError("malformed PNG '" + path.string() + "'");

    png_init_io(r.png, r.fp);
    png_read_info(r.png, r.info);
    const png_uint_32 w = png_get_image_width(r.png, r.info);
    const png_uint_32 h = png_get_image_height(r.png, r.info);
    const int depth = png_get_bit_depth(r.png, r.info);
    const int color = png_get_color_type(r.png, r.info);
    if (color != PNG_COLOR_TYPE_GRAY)
        throw IoError("'" + path.string() + "': expected a grayscale PNG");
    if (depth != required_depth)
        throw IoError("'" + path.string() + "': expected " + std::to_string(required_depth) +
                      "-bit grayscale, got " + std::to_string(depth) + "-bit");
    if (w < 1 || h < 1) throw IoError("'" + path.string() + "': empty image");

    const int passes = png_set_interlace_handling(r.png);
    png_read_update_info(r.png, r.info);
    const std::size_t rowbytes = png_get_rowbytes(r.png, r.info);
    samples.assign(rowbytes * h, 0);
    for (int pass = 0; pass < passes; ++pass)
        for (png_uint_32 y = 0; y < h; ++y)
            png_read_row(r.png, samples.data() + y * rowbytes, nullptr);
    png_read_end(r.png, nullptr);

    height = static_cast<int>(h);
    width = static_cast<int>(w);
}

void write_gray_png(const fs::path& path, int height, int width, int depth,
                    const std::vector<unsigned char>& samples) {
    ensure_parent_dir(path);
    PngWriter w;
    w.fp = std::fopen(path.string().c_str(), "wb");
    if (!w.fp) throw IoError("cannot write '" + path.string() + "'");
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (w.png) w.info = png_create_info_struct(w.png);
    if (!w.png || !w.info) throw IoError("libpng initialization failed");

    if (setjmp(png_jmpbuf(w.png))) throw IoError("PNG write failed for '" + path.string() + "'");

    png_init_io(w.png, w.fp);
    // fixed filter and compression settings keep output byte-stable
    png_set_filter(w.png, 0, PNG_FILTER_NONE);
    png_set_compression_level(w.png, 6);
    png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    const std::size_t rowbytes = static_cast<std::size_t>(width) * (depth / 8);
    for (int y = 0; y < height; ++y)
        png_write_row(w.png, const_cast<png_bytep>(samples.data() + static_cast<std::size_t>(y) * rowbytes));
    png_write_end(w.png, w.info);
}

AnomalyMap load_png16(const fs::path& path) {
    int h = 0, w = 0;
    std::vector<unsigned char> samples;
    read_gray_png(path, 16, h, w, samples);
    AnomalyMap map;
    map.height = h;
    map.width = w;
    map.scores.resize(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < map.scores.size(); ++i) {
        const unsigned v = (static_cast<unsigned>(samples[2 * i]) << 8) | samples[2 * i + 1];
        map.scores[i] = static_cast<double>(v) / 65535.0;
    }
    return map;
}

void save_png16(const AnomalyMap& map, const fs::path& path) {
    std::vector<unsigned char> samples(map.scores.size() * 2);
    for (std::size_t i = 0; i < map.scores.size(); ++i) {
        const unsigned v = static_cast<unsigned>(std::lround(map.scores[i] * 65535.0));
        samples[2 * i] = static_cast<unsigned char>((v >> 8) & 0xff);
        samples[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
    }
    write_gray_png(path, map.height, map.width, 16, samples);
}

bool has_map_extension(const fs::path& p) {
    const std::string ext = p.extension().string();
    return ext == ".npy" || ext == ".png";
}

}  // namespace

MapFormat map_format_from_name(const std::string& name) {
    if (name == "tensor-file") return MapFormat::TensorFile;
    if (name == "png16") return MapFormat::Png16;
    throw ConfigError("unknown map format '" + name + "' (expect tensor-file or png16)");
}

const char* map_format_name(MapFormat format) {
    return format == MapFormat::TensorFile ? "tensor-file" : "png16";
}

const char* map_format_extension(MapFormat format) {
    return format == MapFormat::TensorFile ? ".npy" : ".png";
}

AnomalyMap load_anomaly_map(const fs::path& path, MapFormat format) {
    AnomalyMap map = format == MapFormat::TensorFile ? load_npy(path) : load_png16(path);
    validate_map(map);
    return map;
}

void save_anomaly_map(const AnomalyMap& map, const fs::path& path, MapFormat format) {
    validate_map(map);
    if (format == MapFormat::TensorFile)
        save_npy(map, path);
    else
        save_png16(map, path);
}

AnomalyMap load_anomaly_map_auto(const fs::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".npy") return load_anomaly_map(path, MapFormat::TensorFile);
    if (ext == ".png") return load_anomaly_map(path, MapFormat::Png16);
    throw IoError("cannot infer map format from extension of '" + path.string() + "'");
}

BinaryMask load_mask_png(const fs::path& path) {
    int h = 0, w = 0;
    std::vector<unsigned char> samples;
    read_gray_png(path, 8, h, w, samples);
    BinaryMask mask = make_mask(h, w);
    for (std::size_t i = 0; i < mask.values.size(); ++i) mask.values[i] = samples[i] > 127 ? 1 : 0;
    return mask;
}

void save_mask_png(const BinaryMask& mask, const fs::path& path) {
    std::vector<unsigned char> samples(mask.values.size());
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = mask.values[i] ? 255 : 0;
    write_gray_png(path, mask.height, mask.width, 8, samples);
}

DatasetIndex scan_dataset(const fs::path& root) {
    DatasetIndex index;
    index.root = root;

    const fs::path train_good = root / "train" / "good";
    if (!fs::is_directory(train_good))
        throw IoError("dataset '" + root.string() + "' has no train/good directory");
    for (const auto& entry : fs::directory_iterator(train_good))
        if (entry.is_regular_file() && has_map_extension(entry.path()))
            index.train_good.push_back(entry.path());
    std::sort(index.train_good.begin(), index.train_good.end(),
              [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });

    const fs::path test_dir = root / "test";
    if (fs::is_directory(test_dir)) {
        std::vector<fs::path> categories;
        for (const auto& entry : fs::directory_iterator(test_dir))
            if (entry.is_directory()) categories.push_back(entry.path());
        std::sort(categories.begin(), categories.end(),
                  [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
        for (const auto& cat_dir : categories) {
            const std::string category = cat_dir.filename().string();
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(cat_dir))
                if (entry.is_regular_file() && has_map_extension(entry.path()))
                    files.push_back(entry.path());
            std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
                return a.generic_string() < b.generic_string();
            });
            for (const auto& file : files) {
                TestEntry te;
                te.map = file;
                te.category = category;
                te.abnormal = category != "good";
                if (te.abnormal) {
                    const std::string stem = file.stem().string();
                    const fs::path gt_dir = root / "ground_truth" / category;
                    const fs::path with_suffix = gt_dir / (stem + "_mask.png");
                    const fs::path plain = gt_dir / (stem + ".png");
                    if (fs::is_regular_file(with_suffix))
                        te.mask = with_suffix;
                    else if (fs::is_regular_file(plain))
                        te.mask = plain;
                    else
                        throw IoError("no ground-truth mask for abnormal test image '" +
                                      file.string() + "'");
                }
                index.test.push_back(std::move(te));
            }
        }
    }
    return index;
}

void save_model(const SvmModel& model, const fs::path& path) {
    const std::size_t d = model.scaler.dims();
    std::string out = "fafilter-model v1\n";
    out += "kernel rbf sigma=" + fmt_double(model.sigma) + " C=" + fmt_double(model.penalty_c) + "\n";
    out += "platt A=" + fmt_double(model.platt_a) + " B=" + fmt_double(model.platt_b) + "\n";
    out += "scale d=" + std::to_string(d) + "\n";
    for (std::size_t i = 0; i < d; ++i)
        out += "mean=" + fmt_double(model.scaler.mean[i]) + " std=" + fmt_double(model.scaler.stddev[i]) + "\n";
    out += "sv n=" + std::to_string(model.support_vectors.size()) + "\n";
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
        out += "alpha_y=" + fmt_double(model.alpha_y[i]);
        for (double v : model.support_vectors[i]) out += " " + fmt_double(v);
        out += "\n";
    }
    out += "bias=" + fmt_double(model.bias) + "\n";
    write_file(path, out);
}

namespace {

struct ModelParser {
    std::istringstream in;
    const fs::path& path;
    int line_no = 0;

    ModelParser(const std::string& text, const fs::path& p) : in(text), path(p) {}

    [[noreturn]] void fail(const std::string& msg) {
        throw IoError("model '" + path.string() + "' line " + std::to_string(line_no) + ": " + msg);
    }

    std::string next_line() {
        std::string line;
        if (!std::getline(in, line)) fail("truncated model file");
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

    double parse_double(const std::string& token) {
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size() || token.empty()) fail("malformed number '" + token + "'");
        return v;
    }

    // splits on single spaces
    std::vector<std::string> tokens(const std::string& line) {
        std::vector<std::string> out;
        std::istringstream ts(line);
        std::string t;
        while (ts >> t) out.push_back(t);
        return out;
    }

    double field(const std::string& token, const std::string& name) {
        const std::string prefix = name + "=";
        if (token.rfind(prefix, 0) != 0) fail("expected '" + name + "=<value>', got '" + token + "'");
        return parse_double(token.substr(prefix.size()));
    }
};

}  // namespace

SvmModel load_model(const fs::path& path) {
    ModelParser p(read_file(path), path);

    const std::string version = p.next_line();
    if (version != "fafilter-model v1")
        throw IoError("model '" + path.string() + "': version mismatch (got '" + version + "')");

    SvmModel model;
    {
        const auto t = p.tokens(p.next_line());
        if (t.size() != 4 || t[0] != "kernel" || t[1] != "rbf") p.fail("expected 'kernel rbf sigma=<f> C=<f>'");
        model.sigma = p.field(t[2], "sigma");
        model.penalty_c = p.field(t[3], "C");
        if (model.sigma <= 0.0) p.fail("sigma must be positive");
    }
    {
        const auto t = p.tokens(p.next_line());
        if (t.size() != 3 || t[0] != "platt") p.fail("expected 'platt A=<f> B=<f>'");
        model.platt_a = p.field(t[1], "A");
        model.platt_b = p.field(t[2], "B");
    }
    std::size_t dims = 0;
    {
        const auto t = p.tokens(p.next_line());
        if (t.size() != 2 || t[0] != "scale") p.fail("expected 'scale d=<int>'");
        const double d = p.field(t[1], "d");
        if (d < 1 || d != std::floor(d)) p.fail("scale dimension must be a positive integer");
        dims = static_cast<std::size_t>(d);
    }
    for (std::size_t i = 0; i < dims; ++i) {
        const auto t = p.tokens(p.next_line());
        if (t.size() != 2) p.fail("expected 'mean=<f> std=<f>'");
        model.scaler.mean.push_back(p.field(t[0], "mean"));
        const double sd = p.field(t[1], "std");
        if (sd <= 0.0) p.fail("std must be positive");
        model.scaler.stddev.push_back(sd);
    }
    std::size_t n_sv = 0;
    {
        const auto t = p.tokens(p.next_line());
        if (t.size() != 2 || t[0] != "sv") p.fail("expected 'sv n=<int>'");
        const double n = p.field(t[1], "n");
        if (n < 0 || n != std::floor(n)) p.fail("support-vector count must be a non-negative integer");
        n_sv = static_cast<std::size_t>(n);
    }
    for (std::size_t i = 0; i < n_sv; ++i) {
        const auto t = p.tokens(p.next_line());
        if (t.size() != 1 + dims)
            p.fail("support vector has " + std::to_string(t.size()) + " fields, expected " +
                   std::to_string(1 + dims));
        model.alpha_y.push_back(p.field(t[0], "alpha_y"));
        FeatureVector sv;
        for (std::size_t j = 1; j < t.size(); ++j) sv.push_back(p.parse_double(t[j]));
        model.support_vectors.push_back(std::move(sv));
    }
    {
        const auto t = p.tokens(p.next_line());
        if (t.size() != 1) p.fail("expected 'bias=<f>'");
        model.bias = p.field(t[0], "bias");
    }
    return model;
}

}  // namespace fafilter
