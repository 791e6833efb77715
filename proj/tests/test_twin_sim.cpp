#include "chromatwin/errors.hpp"
#include "chromatwin/twin_sim.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace chromatwin;

TEST_CASE("noise-free twin follows Beer-Lambert") {
    OracleConfig cfg;
    cfg.noise = false;
    FrugalTwin twin(cfg);
    CHECK(twin.measure({0, 0, 0, 0}) == ColorRGB{200, 200, 200});
    const auto c = twin.measure({2, 0, 1, 0});
    // red 0.01/0.20/0.20, blue 0.25/0.10/0.01 per drop on R/G/B.
    CHECK(c.r == doctest::Approx(200.0 * std::exp(-(2 * 0.01 + 0.25))));
    CHECK(c.g == doctest::Approx(200.0 * std::exp(-(2 * 0.20 + 0.10))));
    CHECK(c.b == doctest::Approx(200.0 * std::exp(-(2 * 0.20 + 0.01))));
    CHECK_THROWS_AS(twin.measure({-1, 0, 0, 0}), ValidationError);
}

TEST_CASE("no recipe in the space exceeds the base color") {
    OracleConfig cfg;
    cfg.noise = false;
    FrugalTwin twin(cfg);
    const DesignSpace space;
    double mx = 0;
    for (std::size_t i = 0; i < space.size(); i += 7) {
        const auto c = twin.expected(space.at(i));
        mx = std::max({mx, c.r, c.g, c.b});
    }
    CHECK(mx <= 200.0);
}

TEST_CASE("seeded noise is reproducible and clamped") {
    OracleConfig cfg;
    cfg.seed = 17;
    FrugalTwin a(cfg), b(cfg);
    for (int i = 0; i < 10; ++i) CHECK(a.measure({1, 2, 3, 4}) == b.measure({1, 2, 3, 4}));
    cfg.seed = 18;
    CHECK_FALSE(simulate_color({1, 2, 3, 4}, cfg) == simulate_color({1, 2, 3, 4}, OracleConfig{}));
    cfg.base = {255, 255, 255};
    cfg.noise_sigma = {50, 50, 50};
    FrugalTwin loud(cfg);
    for (int i = 0; i < 100; ++i) {
        const auto c = loud.measure({0, 0, 0, 0});
        for (int ch = 0; ch < 3; ++ch) CHECK((c[ch] >= 0.0 && c[ch] <= 255.0));
    }
    OracleConfig bad;
    bad.noise_sigma[0] = -1;
    CHECK_THROWS_AS(FrugalTwin{bad}, ValidationError);
}

TEST_CASE("default targets are the four team colors") {
    const auto& t = default_targets();
    CHECK(t[0].target == TargetColor(255, 213, 32));
    CHECK(t[1].target == TargetColor(253, 90, 30));
    CHECK(t[2].target == TargetColor(134, 0, 56));
    CHECK(t[3].target == TargetColor(0, 142, 151));
    CHECK(t[0].agent == "Scientist 1");
}

TEST_CASE("solo campaign bookkeeping") {
    OracleConfig cfg;
    const auto res = run_solo_campaign(TargetColor(0, 142, 151), 3, cfg, {false, HyperPolicy::fixed_defaults()});
    REQUIRE(res.steps.size() == 10);
    for (int i = 0; i < 7; ++i) CHECK(res.steps[static_cast<std::size_t>(i)].iteration == 0);
    CHECK(res.steps[7].training_size == 7);
    CHECK(res.steps[9].training_size == 9);
    const auto series = res.best_error_series();
    REQUIRE(series.size() == 4);
    for (std::size_t i = 1; i < series.size(); ++i) CHECK(series[i] <= series[i - 1]);
    CHECK(res.final_best_error() == series.back());
    CHECK(color_error(res.steps[0].measured, res.target) == doctest::Approx(res.steps[0].error));
}

TEST_CASE("collaborative campaign shares one store") {
    OracleConfig cfg;
    std::array<TargetColor, 4> targets{default_targets()[0].target, default_targets()[1].target,
                                       default_targets()[2].target, default_targets()[3].target};
    Store store = Store::in_memory();
    const auto res = run_collaborative_campaign(targets, 2, cfg, store, {false, HyperPolicy::fixed_defaults()});
    CHECK(store.size() == 7 + 4 * 2);
    CHECK(res[0].steps[7].training_size == 7);
    CHECK(res[1].steps[7].training_size == 8);
    CHECK(res[0].steps[8].training_size == 11);
    CHECK_THROWS_AS(run_collaborative_campaign(targets, 1, cfg, store), ValidationError);

    const auto solo = run_solo_campaign(targets[0], 2, cfg, {false, HyperPolicy::fixed_defaults()});
    const auto cmp = compare_campaigns(solo, res[0]);
    CHECK(cmp.rows.size() == 2);
    CHECK(cmp.final_delta == doctest::Approx(res[0].final_best_error() - solo.final_best_error()));
    CHECK_THROWS_AS(compare_campaigns(solo, res[1]), ValidationError);

    std::ostringstream csv;
    write_campaign_csv(csv, {solo});
    std::string header;
    std::getline(std::istringstream(csv.str()) >> std::ws, header);
    CHECK(header == "iteration,agent,target_r,target_g,target_b,red,yellow,blue,green,r,g,b,error,best_error");
    std::ostringstream table;
    write_comparison_table(table, {cmp});
    CHECK(table.str().find("final delta") != std::string::npos);
}
