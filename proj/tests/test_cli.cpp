#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <string>

#include "fafilter/anomaly_io.hpp"
#include "fafilter/commands.hpp"
#include "test_util.hpp"

using namespace fafilter;

namespace {

// built binary, injected by ctest; cases are skipped when absent
const char* cli_path() { return std::getenv("FAFILTER_BIN"); }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli exit codes and workflow") {
    if (!cli_path()) {
        MESSAGE("FAFILTER_BIN not set; skipping CLI cases");
        return;
    }
    testutil::TempDir dir("cli");
    const std::string root = dir.path.string();
    const std::string data = root + "/data";

    REQUIRE(run_cli("synth-data --out " + data + " --train 6 --test-normal 3 --test-abnormal 3 --seed 3") == 0);

    SUBCASE("fit rejects a knowledge file with an inverted range") {
        testutil::write_text(dir.path / "bad.txt", "[defect]\nfeatures = area\narea = 18..10\n");
        CHECK(run_cli("fit --dataset " + data + " --knowledge " + root + "/bad.txt --model " +
                      root + "/m.txt") == cmd::kExitConfig);
    }
    SUBCASE("fit on flat maps exits with the data-inadequacy code") {
        const std::string flat = root + "/flat";
        for (int i = 0; i < 3; ++i) {
            AnomalyMap m;
            m.height = 8;
            m.width = 8;
            m.scores.assign(64, 0.0);
            save_anomaly_map(m, dir.path / "flat" / "train" / "good" / (std::to_string(i) + ".npy"),
                             MapFormat::TensorFile);
        }
        testutil::write_text(dir.path / "k.txt", "[defect]\nfeatures = area\narea = 10..20\n");
        CHECK(run_cli("fit --dataset " + flat + " --knowledge " + root + "/k.txt --model " + root +
                      "/m.txt") == cmd::kExitData);
    }
    SUBCASE("eval without apply output is an I/O error") {
        CHECK(run_cli("eval --dataset " + data + " --filtered " + root + "/nothing") == cmd::kExitIo);
    }
    SUBCASE("missing ground truth is an I/O error") {
        std::filesystem::remove(dir.path / "data" / "ground_truth" / "defect" / "000_mask.png");
        CHECK(run_cli("eval --dataset " + data + " --filtered " + root + "/nothing") == cmd::kExitIo);
    }
    SUBCASE("full workflow, identity equivalence, and parallel apply") {
        const std::string knowledge = "/root/proj/configs/knowledge.txt";
        const std::string config = "/root/proj/configs/pipeline.txt";
        REQUIRE(run_cli("fit --dataset " + data + " --knowledge " + knowledge + " --config " +
                        config + " --model " + root + "/m.txt --seed 3") == 0);
        REQUIRE(run_cli("apply --dataset " + data + " --model " + root + "/m.txt --config " +
                        config + " --out " + root + "/out --seed 3") == 0);
        REQUIRE(run_cli("eval --dataset " + data + " --filtered " + root + "/out --out " + root +
                        "/report") == 0);
        CHECK(std::filesystem::is_regular_file(dir.path / "report" / "report.csv"));
        CHECK(std::filesystem::is_regular_file(dir.path / "report" / "score_dist.svg"));

        // adjusted <= raw on every row
        const std::string csv = testutil::read_text(dir.path / "out" / "scores.csv");
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        int rows = 0;
        while (std::getline(in, line)) {
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            const auto c3 = line.find(',', c2 + 1);
            const double raw = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
            const double adjusted = std::stod(line.substr(c2 + 1, c3 - c2 - 1));
            CHECK(adjusted <= raw);
            ++rows;
        }
        CHECK(rows == 6);

        // identity apply reproduces the input maps exactly
        REQUIRE(run_cli("apply --dataset " + data + " --config " + config + " --out " + root +
                        "/out_id --identity") == 0);
        const DatasetIndex idx = scan_dataset(dir.path / "data");
        for (const TestEntry& e : idx.test) {
            const AnomalyMap original = load_anomaly_map_auto(e.map);
            const auto rel = std::filesystem::relative(e.map, idx.root);
            const AnomalyMap filtered = load_anomaly_map_auto(dir.path / "out_id" / "filtered" / rel);
            CHECK(filtered.scores == original.scores);
        }

        // a parallel apply writes byte-identical outputs
        REQUIRE(run_cli("apply --dataset " + data + " --model " + root + "/m.txt --config " +
                        config + " --out " + root + "/out_j4 --jobs 4 --seed 3") == 0);
        CHECK(testutil::trees_identical(dir.path / "out", dir.path / "out_j4"));
    }
    SUBCASE("config overrides work and bad overrides are config errors") {
        const std::string config = "/root/proj/configs/pipeline.txt";
        CHECK(run_cli("apply --dataset " + data + " --config " + config +
                      " --out " + root + "/o1 --identity --set pipeline.tau=0.9") == 0);
        CHECK(run_cli("apply --dataset " + data + " --config " + config +
                      " --out " + root + "/o2 --identity --set pipeline.tau=1.5") == cmd::kExitConfig);
        CHECK(run_cli("apply --dataset " + data + " --config " + config +
                      " --out " + root + "/o3 --identity --set nosuch.key=1") == cmd::kExitConfig);
    }
    SUBCASE("a dataset without the score sidecar falls back to max-pixel image scores") {
        const std::string config = "/root/proj/configs/pipeline.txt";
        std::filesystem::remove(dir.path / "data" / "image_scores.csv");
        REQUIRE(run_cli("apply --dataset " + data + " --config " + config + " --out " + root +
                        "/out_nosidecar --identity") == 0);
        const std::string csv = testutil::read_text(dir.path / "out_nosidecar" / "scores.csv");
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        REQUIRE(std::getline(in, line));
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const double raw = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        const DatasetIndex idx = scan_dataset(dir.path / "data");
        const AnomalyMap m = load_anomaly_map_auto(idx.test[0].map);
        CHECK(raw == *std::max_element(m.scores.begin(), m.scores.end()));
        REQUIRE(run_cli("eval --dataset " + data + " --filtered " + root + "/out_nosidecar") == 0);
    }
    SUBCASE("eval resolves filtered maps written in the other format") {
        const std::string config = "/root/proj/configs/pipeline.txt";
        REQUIRE(run_cli("apply --dataset " + data + " --config " + config + " --out " + root +
                        "/out_png --identity --format png16") == 0);
        CHECK(run_cli("eval --dataset " + data + " --filtered " + root + "/out_png") == 0);
    }
    SUBCASE("single-class pools are reported as NA, not a crash") {
        const std::string config = "/root/proj/configs/pipeline.txt";
        const std::string normal_only = root + "/normals";
        REQUIRE(run_cli("synth-data --out " + normal_only +
                        " --train 4 --test-normal 3 --test-abnormal 0 --seed 2") == 0);
        REQUIRE(run_cli("apply --dataset " + normal_only + " --config " + config + " --out " +
                        normal_only + "_out --identity") == 0);
        REQUIRE(run_cli("eval --dataset " + normal_only + " --filtered " + normal_only + "_out --out " +
                        normal_only + "_report") == 0);
        const std::string report = testutil::read_text(dir.path / "normals_report" / "report.csv");
        CHECK(report.find("NA") != std::string::npos);
    }
    SUBCASE("unsatisfiable profile geometry is a config error") {
        testutil::write_text(dir.path / "huge.txt",
                             "[defect]\nwidth = 300..400\nheight = 300..400\n");
        CHECK(run_cli("synth-data --profile " + root + "/huge.txt --out " + root + "/x") ==
              cmd::kExitConfig);
    }
}
