#include <doctest.h>

#include <algorithm>

#include "fafilter/errors.hpp"
#include "fafilter/harvest.hpp"
#include "fafilter/metrics.hpp"
#include "fafilter/simulator.hpp"
#include "test_util.hpp"

using namespace fafilter;

TEST_CASE("simulate_image") {
    const DetectorProfile profile = default_profile();

    SUBCASE("deterministic in the seed") {
        const SimImage a = simulate_image(profile, true, 42);
        const SimImage b = simulate_image(profile, true, 42);
        CHECK(a.map.scores == b.map.scores);
        CHECK(a.ground_truth.values == b.ground_truth.values);
        CHECK(a.image_score == b.image_score);
        const SimImage c = simulate_image(profile, true, 43);
        CHECK(a.map.scores != c.map.scores);
    }
    SUBCASE("normal image with no nuisance blobs is pure background") {
        DetectorProfile calm = profile;
        calm.nuisance_poisson_mean = 0.0;
        const SimImage img = simulate_image(calm, false, 7);
        CHECK(img.ground_truth.true_count() == 0);
        // background Beta stays far below the blob range
        const double maxv = *std::max_element(img.map.scores.begin(), img.map.scores.end());
        CHECK(maxv < 0.6);
        CHECK(img.image_score == maxv);
    }
    SUBCASE("abnormal image marks exactly the defect pixels") {
        DetectorProfile calm = profile;
        calm.nuisance_poisson_mean = 0.0;
        const SimImage img = simulate_image(calm, true, 9);
        const std::size_t gt = img.ground_truth.true_count();
        CHECK(gt > 300);   // smallest defect ellipse
        CHECK(gt < 1200);  // largest
        for (int r = 0; r < img.map.height; ++r)
            for (int c = 0; c < img.map.width; ++c)
                if (img.ground_truth.at(r, c)) {
                    CHECK(r / static_cast<double>(img.map.height) > 0.1);
                    CHECK(c / static_cast<double>(img.map.width) > 0.1);
                }
        CHECK(simulate_image(calm, false, 9).ground_truth.true_count() == 0);
    }
    SUBCASE("scores remain valid maps") {
        const SimImage img = simulate_image(profile, true, 1);
        validate_map(img.map);
    }
}

TEST_CASE("intersecting-regime pixel AUROC lands in the expected band") {
    // nuisance scores are as hot as defect scores, so the raw pixel AUROC
    // must be good but imperfect; the exact value is the regression baseline
    const DetectorProfile profile = default_profile();
    std::vector<SimImage> images;
    for (int i = 0; i < 25; ++i) images.push_back(simulate_image(profile, false, 1000 + i));
    for (int i = 0; i < 25; ++i) images.push_back(simulate_image(profile, true, 2000 + i));
    std::vector<const AnomalyMap*> maps;
    std::vector<const BinaryMask*> gts;
    for (const SimImage& img : images) {
        maps.push_back(&img.map);
        gts.push_back(img.ground_truth.true_count() > 0 ? &img.ground_truth : nullptr);
    }
    const MetricPair m = pixel_metrics(maps, gts);
    CHECK(m.auroc > 0.7);
    CHECK(m.auroc < 0.999);
    // frozen regression value for this seed set
    CHECK(m.auroc == doctest::Approx(0.98873).epsilon(5e-4));
}

TEST_CASE("profile validation") {
    SUBCASE("geometry that cannot fit is rejected") {
        DetectorProfile p = default_profile();
        p.defect.width = Interval{100.0, 140.0};
        CHECK_THROWS_AS(validate_profile(p), ConfigError);
    }
    SUBCASE("inseparable geometries are rejected") {
        DetectorProfile p = default_profile();
        p.nuisance.width = p.defect.width;
        p.nuisance.height = p.defect.height;
        p.nuisance.region = p.defect.region;
        CHECK_THROWS_AS(validate_profile(p), ConfigError);
    }
    SUBCASE("beta parameters must be positive") {
        DetectorProfile p = default_profile();
        p.background.a = 0.0;
        CHECK_THROWS_AS(validate_profile(p), ConfigError);
    }
    SUBCASE("the default profile is valid") {
        CHECK_NOTHROW(validate_profile(default_profile()));
    }
}

TEST_CASE("parse_profile round trips the documented keys") {
    const char* text =
        "[grid]\n"
        "height = 64\n"
        "width = 96\n"
        "[background]\n"
        "beta = 1.5, 20\n"
        "[nuisance]\n"
        "poisson_mean = 2.5\n"
        "width = 6..10\n"
        "height = 6..10\n"
        "region = (0.1,0.1)..(0.9,0.9)\n"
        "beta = 8, 2\n"
        "[defect]\n"
        "count = 1\n"
        "width = 20..28\n"
        "height = 20..28\n"
        "region = (0.3,0.3)..(0.7,0.7)\n"
        "beta = 8, 2\n";
    const DetectorProfile p = parse_profile(text);
    CHECK(p.height == 64);
    CHECK(p.width == 96);
    CHECK(p.background.b == 20.0);
    CHECK(p.nuisance_poisson_mean == 2.5);
    CHECK(p.nuisance.width.lo == 6.0);
    CHECK(p.defect.region.x0 == 0.3);

    CHECK_THROWS_AS(parse_profile("[grid]\nheight = 64\nwidth = 64\n[oops]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_profile("[nuisance]\nwidth = 10..6\n"), ConfigError);
}

TEST_CASE("simulate_dataset") {
    const DetectorProfile profile = default_profile();

    SUBCASE("counts and layout") {
        testutil::TempDir dir("sim");
        const DatasetIndex idx = simulate_dataset(profile, 10, 2, 3, 5, dir.path);
        CHECK(idx.train_good.size() == 10);
        CHECK(idx.test.size() == 5);
        int abnormal = 0;
        for (const TestEntry& e : idx.test) abnormal += e.abnormal;
        CHECK(abnormal == 3);
        CHECK(std::filesystem::is_regular_file(dir.path / "image_scores.csv"));
        CHECK(std::filesystem::is_regular_file(dir.path / "ground_truth" / "defect" / "000_mask.png"));
    }
    SUBCASE("identical seeds give byte-identical trees") {
        testutil::TempDir a("sim_a");
        testutil::TempDir b("sim_b");
        simulate_dataset(profile, 4, 2, 2, 77, a.path);
        simulate_dataset(profile, 4, 2, 2, 77, b.path);
        CHECK(testutil::trees_identical(a.path, b.path));
        testutil::TempDir c("sim_c");
        simulate_dataset(profile, 4, 2, 2, 78, c.path);
        CHECK(!testutil::trees_identical(a.path, c.path));
    }
    SUBCASE("the default profile harvests a non-empty false-alarm set") {
        testutil::TempDir dir("sim_harvest");
        const DatasetIndex idx = simulate_dataset(profile, 10, 0, 0, 7, dir.path);
        std::vector<AnomalyMap> train;
        for (const auto& p : idx.train_good) train.push_back(load_anomaly_map_auto(p));
        for (double q : {0.95, 0.99}) {
            const double tau_c = compute_candidate_threshold(train, q);
            const SampleSet fa =
                harvest_false_alarms(train, tau_c, {Feature::Area, Feature::Aspect}, 4);
            CHECK(!fa.empty());
        }
    }
    SUBCASE("png16 dataset variant loads back") {
        testutil::TempDir dir("sim_png");
        const DatasetIndex idx = simulate_dataset(profile, 1, 1, 1, 3, dir.path, MapFormat::Png16);
        CHECK(idx.train_good[0].extension() == ".png");
        const AnomalyMap m = load_anomaly_map_auto(idx.train_good[0]);
        CHECK(m.height == profile.height);
    }
}
