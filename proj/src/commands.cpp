#include "fafilter/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "fafilter/anomaly_io.hpp"
#include "fafilter/errors.hpp"
#include "fafilter/harvest.hpp"
#include "fafilter/knowledge.hpp"
#include "fafilter/metrics.hpp"
#include "fafilter/pipeline.hpp"
#include "fafilter/rng.hpp"
#include "fafilter/run_config.hpp"
#include "fafilter/simulator.hpp"

namespace fs = std::filesystem;

namespace fafilter::cmd {

namespace {

int guard(const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

RunConfig load_run_config(const std::string& config_path, const std::vector<std::string>& overrides) {
    RunConfig cfg;
    if (!config_path.empty()) cfg = parse_run_config(read_text_file(config_path));
    for (const std::string& o : overrides) apply_override(cfg, o);
    return cfg;
}

std::string rel_to(const fs::path& path, const fs::path& root) {
    return fs::relative(path, root).generic_string();
}

std::vector<AnomalyMap> load_train_maps(const DatasetIndex& index) {
    if (index.train_good.empty())
        throw DataError("dataset '" + index.root.string() + "' has no training maps");
    std::vector<AnomalyMap> maps;
    maps.reserve(index.train_good.size());
    for (const auto& path : index.train_good) maps.push_back(load_anomaly_map_auto(path));
    return maps;
}

double resolve_tau_c(const RunConfig& cfg, const std::vector<AnomalyMap>& train_maps) {
    if (cfg.tau_c) return *cfg.tau_c;
    const double tau_c = compute_candidate_threshold(train_maps, cfg.harvest_q);
    // a zero quantile means the training maps have no high-response pixels at
    // all; thresholding at 0 would turn whole images into candidates
    if (tau_c <= 0.0)
        throw DataError(
            "training maps yield a candidate threshold of 0 (no high-response pixels); lower "
            "harvest_q only if the maps genuinely contain responses");
    return tau_c;
}

// image_scores.csv / scores.csv rows keyed by dataset-relative path
std::map<std::string, std::vector<std::string>> read_csv_by_path(const fs::path& path) {
    std::map<std::string, std::vector<std::string>> rows;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.empty()) continue;
        rows[fields[0]] = fields;
    }
    return rows;
}

double parse_csv_double(const std::string& s, const fs::path& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty())
        throw IoError("malformed number '" + s + "' in '" + where.string() + "'");
    return v;
}

// raw per-image scores: the sidecar when present, max pixel otherwise
class RawScoreLookup {
public:
    RawScoreLookup(const fs::path& root) : root_(root) {
        const fs::path sidecar = root / "image_scores.csv";
        if (fs::is_regular_file(sidecar)) {
            sidecar_path_ = sidecar;
            rows_ = read_csv_by_path(sidecar);
        }
    }

    double score_for(const fs::path& map_path, const AnomalyMap& map) const {
        if (!rows_.empty()) {
            const auto it = rows_.find(rel_to(map_path, root_));
            if (it != rows_.end() && it->second.size() >= 2) {
                const double score = parse_csv_double(it->second[1], sidecar_path_);
                if (!(score >= 0.0 && score <= 1.0))
                    throw IoError("image score outside [0,1] in '" + sidecar_path_.string() + "'");
                return score;
            }
        }
        return *std::max_element(map.scores.begin(), map.scores.end());
    }

private:
    fs::path root_;
    fs::path sidecar_path_;
    std::map<std::string, std::vector<std::string>> rows_;
};

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const int n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
        threads.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string fmt_metric(const std::optional<double>& v) {
    if (!v) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return buf;
}

}  // namespace

int run_synth(const SynthArgs& args) {
    return guard([&]() {
        DetectorProfile profile =
            args.profile.empty() ? default_profile() : parse_profile(read_text_file(args.profile));
        validate_profile(profile);
        const MapFormat format = map_format_from_name(args.format);
        const DatasetIndex index = simulate_dataset(profile, args.n_train, args.n_test_normal,
                                                    args.n_test_abnormal, args.seed,
                                                    fs::path(args.out_dir), format);
        std::printf("wrote %zu train / %zu test images under %s\n", index.train_good.size(),
                    index.test.size(), args.out_dir.c_str());
    });
}

int run_fit(const FitArgs& args) {
    return guard([&]() {
        const DatasetIndex index = scan_dataset(args.dataset);
        const RunConfig cfg = load_run_config(args.config, args.overrides);
        const KnowledgeSpec knowledge = parse_knowledge(read_text_file(args.knowledge));
        if (!cfg.pipeline.features.empty() && cfg.pipeline.features != knowledge.features)
            throw ConfigError(
                "the config's feature list differs from the knowledge file's; remove one or make "
                "them identical");

        const std::vector<AnomalyMap> train_maps = load_train_maps(index);
        const double tau_c = resolve_tau_c(cfg, train_maps);
        const SampleSet false_alarms =
            harvest_false_alarms(train_maps, tau_c, knowledge.features, cfg.pipeline.min_area,
                                 cfg.pipeline.connectivity);

        SampleSet defects =
            generate_defect_samples(knowledge, knowledge.sample_count, mix_seed(args.seed, 1));
        defects = augment(defects, knowledge, mix_seed(args.seed, 2));
        const SampleSet training = balance(defects, false_alarms, mix_seed(args.seed, 3));

        SvmModel model = train_svm(training, cfg.svm, mix_seed(args.seed, 4));
        save_model(model, args.model_out);

        std::printf("tau_c = %.6f (q = %.4f)\n", tau_c, cfg.harvest_q);
        std::printf("false-alarm samples harvested: %zu\n", false_alarms.size());
        std::printf("defect samples generated: %zu\n", defects.size());
        std::printf("balanced training set: %zu\n", training.size());
        std::printf("sigma = %.6f\n", model.sigma);
        std::printf("support vectors: %zu\n", model.support_vectors.size());
        std::printf("model written to %s\n", args.model_out.c_str());
    });
}

int run_apply(const ApplyArgs& args) {
    return guard([&]() {
        const DatasetIndex index = scan_dataset(args.dataset);
        const RunConfig cfg = load_run_config(args.config, args.overrides);
        if (cfg.pipeline.features.empty())
            throw ConfigError("apply needs a config with a [pipeline] features key");

        SvmModel model;
        if (!args.identity) {
            if (args.model.empty()) throw ConfigError("apply needs --model (or --identity)");
            model = load_model(args.model);
            if (model.scaler.dims() != cfg.pipeline.features.size())
                throw ConfigError("model dimension (" + std::to_string(model.scaler.dims()) +
                                  ") does not match the config's feature list (" +
                                  std::to_string(cfg.pipeline.features.size()) + ")");
        }

        PipelineConfig pipeline = cfg.pipeline;
        if (cfg.tau_c) {
            pipeline.tau_c = *cfg.tau_c;
        } else {
            const std::vector<AnomalyMap> train_maps = load_train_maps(index);
            pipeline.tau_c = resolve_tau_c(cfg, train_maps);
        }

        const MapFormat out_format = map_format_from_name(args.format);
        const RawScoreLookup raw_scores(index.root);
        const fs::path out_root(args.out_dir);

        struct Row {
            std::string path;
            double raw;
            double adjusted;
            std::size_t n_candidates;
            double fa_area_ratio;
        };
        std::vector<Row> rows(index.test.size());

        parallel_for(index.test.size(), args.jobs, [&](std::size_t i) {
            const TestEntry& entry = index.test[i];
            const AnomalyMap map = load_anomaly_map_auto(entry.map);
            const double raw = raw_scores.score_for(entry.map, map);
            const FilteredResult result = run_pipeline(map, raw, model, pipeline, args.identity);

            const std::string rel = rel_to(entry.map, index.root);
            fs::path filtered_rel(rel);
            filtered_rel.replace_extension(map_format_extension(out_format));
            save_anomaly_map(result.filtered, out_root / "filtered" / filtered_rel, out_format);
            fs::path mask_rel(rel);
            mask_rel.replace_extension(".png");
            save_mask_png(result.mask, out_root / "masks" / mask_rel);

            double fa_area = 0.0, total_area = 0.0;
            for (const ScoredCandidate& sc : result.candidates) {
                total_area += sc.candidate.area;
                if (sc.p_fa >= pipeline.p_cut) fa_area += sc.candidate.area;
            }
            rows[i] = Row{rel, raw, result.adjusted_score, result.candidates.size(),
                          total_area > 0.0 ? fa_area / total_area : 0.0};
        });

        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.path < b.path; });
        std::error_code ec;
        fs::create_directories(out_root, ec);
        std::ofstream csv(out_root / "scores.csv");
        if (!csv) throw IoError("cannot write '" + (out_root / "scores.csv").string() + "'");
        csv << "path,raw,adjusted,n_candidates,fa_area_ratio\n";
        char buf[512];
        for (const Row& r : rows) {
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%zu,%.17g\n", r.path.c_str(), r.raw,
                          r.adjusted, r.n_candidates, r.fa_area_ratio);
            csv << buf;
        }
        std::printf("filtered %zu test images into %s\n", index.test.size(), args.out_dir.c_str());
    });
}

int run_eval(const EvalArgs& args) {
    return guard([&]() {
        const DatasetIndex index = scan_dataset(args.dataset);
        if (index.test.empty()) throw DataError("dataset has no test images to evaluate");
        const fs::path filtered_root(args.filtered);
        const fs::path scores_csv = filtered_root / "scores.csv";
        if (!fs::is_regular_file(scores_csv))
            throw IoError("'" + scores_csv.string() + "' not found; run apply first");
        const auto adjusted_rows = read_csv_by_path(scores_csv);
        const RawScoreLookup raw_lookup(index.root);

        std::vector<AnomalyMap> raw_maps(index.test.size());
        std::vector<AnomalyMap> filtered_maps(index.test.size());
        std::vector<BinaryMask> gt_masks(index.test.size());
        std::vector<double> raw_scores(index.test.size());
        std::vector<double> adjusted_scores(index.test.size());
        std::vector<int> labels(index.test.size());

        for (std::size_t i = 0; i < index.test.size(); ++i) {
            const TestEntry& entry = index.test[i];
            raw_maps[i] = load_anomaly_map_auto(entry.map);
            labels[i] = entry.abnormal ? 1 : 0;
            raw_scores[i] = raw_lookup.score_for(entry.map, raw_maps[i]);
            if (entry.mask) gt_masks[i] = load_mask_png(*entry.mask);

            const std::string rel = rel_to(entry.map, index.root);
            fs::path filtered_path = filtered_root / "filtered" / rel;
            if (!fs::is_regular_file(filtered_path)) {
                fs::path alt = filtered_path;
                alt.replace_extension(filtered_path.extension() == ".npy" ? ".png" : ".npy");
                if (!fs::is_regular_file(alt))
                    throw IoError("no filtered map for '" + rel + "' under '" +
                                  filtered_root.string() + "'");
                filtered_path = alt;
            }
            filtered_maps[i] = load_anomaly_map_auto(filtered_path);

            const auto it = adjusted_rows.find(rel);
            if (it == adjusted_rows.end() || it->second.size() < 3)
                throw IoError("'" + scores_csv.string() + "' has no adjusted score for '" + rel + "'");
            adjusted_scores[i] = parse_csv_double(it->second[2], scores_csv);
        }

        const auto try_metrics = [](const std::function<MetricPair()>& fn)
            -> std::pair<std::optional<double>, std::optional<double>> {
            try {
                const MetricPair m = fn();
                return {m.auroc, m.f1};
            } catch (const DataError&) {
                return {std::nullopt, std::nullopt};
            }
        };

        const auto [img_auroc_raw, img_f1_raw] =
            try_metrics([&] { return image_metrics(raw_scores, labels); });
        const auto [img_auroc_f, img_f1_f] =
            try_metrics([&] { return image_metrics(adjusted_scores, labels); });

        std::vector<const AnomalyMap*> raw_ptrs, filtered_ptrs;
        std::vector<const BinaryMask*> gt_ptrs;
        for (std::size_t i = 0; i < index.test.size(); ++i) {
            raw_ptrs.push_back(&raw_maps[i]);
            filtered_ptrs.push_back(&filtered_maps[i]);
            gt_ptrs.push_back(index.test[i].mask ? &gt_masks[i] : nullptr);
        }
        const auto [px_auroc_raw, px_f1_raw] =
            try_metrics([&] { return pixel_metrics(raw_ptrs, gt_ptrs); });
        const auto [px_auroc_f, px_f1_f] =
            try_metrics([&] { return pixel_metrics(filtered_ptrs, gt_ptrs); });

        std::printf("%-8s %-8s %12s %12s\n", "level", "metric", "raw", "filtered");
        std::printf("%-8s %-8s %12s %12s\n", "image", "auroc", fmt_metric(img_auroc_raw).c_str(),
                    fmt_metric(img_auroc_f).c_str());
        std::printf("%-8s %-8s %12s %12s\n", "image", "f1", fmt_metric(img_f1_raw).c_str(),
                    fmt_metric(img_f1_f).c_str());
        std::printf("%-8s %-8s %12s %12s\n", "pixel", "auroc", fmt_metric(px_auroc_raw).c_str(),
                    fmt_metric(px_auroc_f).c_str());
        std::printf("%-8s %-8s %12s %12s\n", "pixel", "f1", fmt_metric(px_f1_raw).c_str(),
                    fmt_metric(px_f1_f).c_str());

        if (!args.out_dir.empty()) {
            const fs::path out_root(args.out_dir);
            std::error_code ec;
            fs::create_directories(out_root, ec);
            if (ec) throw IoError("cannot create '" + out_root.string() + "'");
            std::ofstream report(out_root / "report.csv");
            if (!report) throw IoError("cannot write report.csv");
            report << "level,model,metric,raw,filtered\n";
            const auto row = [&](const char* level, const char* metric,
                                 const std::optional<double>& raw, const std::optional<double>& f) {
                report << level << "," << args.name << "," << metric << "," << fmt_metric(raw) << ","
                       << fmt_metric(f) << "\n";
            };
            row("image", "auroc", img_auroc_raw, img_auroc_f);
            row("image", "f1", img_f1_raw, img_f1_f);
            row("pixel", "auroc", px_auroc_raw, px_auroc_f);
            row("pixel", "f1", px_f1_raw, px_f1_f);

            // Fig-2-style view of the score distributions
            std::vector<double> train_pixels;
            for (const auto& path : index.train_good) {
                const AnomalyMap m = load_anomaly_map_auto(path);
                train_pixels.insert(train_pixels.end(), m.scores.begin(), m.scores.end());
            }
            std::vector<double> normal_pixels, abnormal_pixels;
            for (std::size_t i = 0; i < index.test.size(); ++i) {
                const AnomalyMap& m = raw_maps[i];
                if (!index.test[i].mask) {
                    normal_pixels.insert(normal_pixels.end(), m.scores.begin(), m.scores.end());
                } else {
                    const BinaryMask& gt = gt_masks[i];
                    for (std::size_t p = 0; p < m.scores.size(); ++p)
                        (gt.values[p] ? abnormal_pixels : normal_pixels).push_back(m.scores[p]);
                }
            }
            score_report(train_pixels,
                         {{"normal", std::move(normal_pixels)}, {"abnormal", std::move(abnormal_pixels)}},
                         out_root / "score_hist.csv", out_root / "score_dist.svg");
        }
    });
}

}  // namespace fafilter::cmd
