#pragma once

#include "chromatwin/acquisition.hpp"
#include "chromatwin/color.hpp"
#include "chromatwin/recipe_space.hpp"
#include "chromatwin/store.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace chromatwin {

// Per-drop absorbance of one dye on each of the R, G, B channels.
struct DyeProfile {
    std::array<double, kChannelCount> absorbance{};
};

struct OracleConfig {
    std::array<DyeProfile, kDyeCount> dyes = default_dyes();
    ColorRGB base{200.0, 200.0, 200.0};
    std::array<double, kChannelCount> noise_sigma{4.0, 3.0, 2.0};
    std::uint64_t seed = 0;
    bool noise = true;

    void validate() const;
    static std::array<DyeProfile, kDyeCount> default_dyes();
};

// Beer-Lambert attenuation of the base color plus seeded Gaussian
// measurement noise. Each call to measure() draws fresh noise.
class FrugalTwin {
public:
    explicit FrugalTwin(OracleConfig config);

    ColorRGB measure(const Recipe& r);
    ColorRGB expected(const Recipe& r) const;

    const OracleConfig& config() const { return config_; }

private:
    OracleConfig config_;
    std::mt19937_64 rng_;
};

// First measurement a fresh twin with this configuration would report.
ColorRGB simulate_color(const Recipe& r, const OracleConfig& config);

// Euclidean RGB distance.
double color_error(const ColorRGB& c, const TargetColor& t);

struct CampaignStep {
    int iteration = 0;  // 0 for the seed measurements
    Recipe recipe;
    ColorRGB measured;
    double error = 0.0;
    double best_error = 0.0;
    std::size_t training_size = 0;  // records the suggestion was trained on; 0 for seeds
};

struct CampaignResult {
    std::string agent;
    TargetColor target{0, 0, 0};
    std::vector<CampaignStep> steps;

    double final_best_error() const;
    // Best-so-far error after each iteration; element 0 is the seed phase.
    std::vector<double> best_error_series() const;
};

struct CampaignPolicy {
    bool execute_exploration = false;
    HyperPolicy hyper{};
    int max_drops = kDefaultMaxDrops;
};

struct NamedTarget {
    std::string agent;
    std::string label;
    TargetColor target;
};

// Scientist 1..4 with the Fever Yellow, Giants Orange, Cavaliers Red and
// Dolphins Blue targets.
const std::array<NamedTarget, 4>& default_targets();

CampaignResult run_solo_campaign(const TargetColor& t, int iterations, const OracleConfig& oracle,
                                 const CampaignPolicy& policy = {}, std::string agent = "solo");

// Agents take turns on one shared dataset; every suggestion trains on all
// shared records.
std::array<CampaignResult, 4> run_collaborative_campaign(const std::array<TargetColor, 4>& targets,
                                                         int iterations, const OracleConfig& oracle,
                                                         const CampaignPolicy& policy = {});

// Same, recording into a caller-supplied empty store.
std::array<CampaignResult, 4> run_collaborative_campaign(const std::array<TargetColor, 4>& targets,
                                                         int iterations, const OracleConfig& oracle,
                                                         Store& store, const CampaignPolicy& policy = {});

struct ComparisonRow {
    int iteration = 0;
    double solo_best = 0.0;
    double collab_best = 0.0;
};

struct CampaignComparison {
    TargetColor target{0, 0, 0};
    std::vector<ComparisonRow> rows;
    double final_delta = 0.0;  // collaborative minus solo, at the last shared iteration
};

CampaignComparison compare_campaigns(const CampaignResult& solo, const CampaignResult& collab);

void write_campaign_csv(std::ostream& out, const std::vector<CampaignResult>& results);
void write_comparison_table(std::ostream& out, const std::vector<CampaignComparison>& rows);

} // namespace chromatwin
