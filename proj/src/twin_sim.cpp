#include "chromatwin/twin_sim.hpp"

#include "chromatwin/errors.hpp"
#include "chromatwin/store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace chromatwin {

std::array<DyeProfile, kDyeCount> OracleConfig::default_dyes() {
    return {{
        {{0.01, 0.20, 0.20}},  // red
        {{0.01, 0.03, 0.25}},  // yellow
        {{0.25, 0.10, 0.01}},  // blue
        {{0.20, 0.02, 0.15}},  // green
    }};
}

void OracleConfig::validate() const {
    std::vector<std::string> bad;
    for (const auto& d : dyes)
        for (double a : d.absorbance)
            if (!(a >= 0.0) || !std::isfinite(a)) {
                bad.emplace_back("absorbance");
                break;
            }
    for (int ch = 0; ch < kChannelCount; ++ch) {
        if (!(base[ch] > 0.0 && base[ch] <= 255.0)) bad.emplace_back("base");
        if (!(noise_sigma[static_cast<std::size_t>(ch)] >= 0.0)) bad.emplace_back("noise_sigma");
    }
    if (!bad.empty()) throw ValidationError("invalid oracle configuration", bad);
}

FrugalTwin::FrugalTwin(OracleConfig config) : config_(std::move(config)), rng_(config_.seed) {
    config_.validate();
}

ColorRGB FrugalTwin::expected(const Recipe& r) const {
    const auto drops = r.drops();
    ColorRGB out;
    for (int ch = 0; ch < kChannelCount; ++ch) {
        double optical_depth = 0.0;
        for (int d = 0; d < kDyeCount; ++d)
            optical_depth += config_.dyes[static_cast<std::size_t>(d)].absorbance[static_cast<std::size_t>(ch)] * drops[d];
        out[ch] = config_.base[ch] * std::exp(-optical_depth);
    }
    return out;
}

ColorRGB FrugalTwin::measure(const Recipe& r) {
    for (int d : r.drops())
        if (d < 0) throw ValidationError("drop counts must be non-negative", {"recipe"});
    ColorRGB out = expected(r);
    if (config_.noise) {
        for (int ch = 0; ch < kChannelCount; ++ch) {
            std::normal_distribution<double> noise(0.0, config_.noise_sigma[static_cast<std::size_t>(ch)]);
            out[ch] += noise(rng_);
        }
    }
    for (int ch = 0; ch < kChannelCount; ++ch) out[ch] = std::clamp(out[ch], 0.0, 255.0);
    return out;
}

ColorRGB simulate_color(const Recipe& r, const OracleConfig& config) {
    return FrugalTwin(config).measure(r);
}

double color_error(const ColorRGB& c, const TargetColor& t) {
    return std::sqrt(squared_distance(c, t.rgb()));
}

double CampaignResult::final_best_error() const {
    return steps.empty() ? std::numeric_limits<double>::infinity() : steps.back().best_error;
}

std::vector<double> CampaignResult::best_error_series() const {
    std::vector<double> out;
    for (const auto& s : steps) {
        if (s.iteration == 0) {
            if (out.empty()) out.push_back(s.best_error);
            else out[0] = s.best_error;
        } else {
            out.push_back(s.best_error);
        }
    }
    return out;
}

const std::array<NamedTarget, 4>& default_targets() {
    static const std::array<NamedTarget, 4> targets{{
        {"Scientist 1", "Fever Yellow", TargetColor(255, 213, 32)},
        {"Scientist 2", "Giants Orange", TargetColor(253, 90, 30)},
        {"Scientist 3", "Cavaliers Red", TargetColor(134, 0, 56)},
        {"Scientist 4", "Dolphins Blue", TargetColor(0, 142, 151)},
    }};
    return targets;
}

namespace {

// Campaign stores use a logical clock so whole runs are reproducible.
Store campaign_store(int max_drops) {
    auto tick = std::make_shared<std::int64_t>(0);
    return Store::in_memory([tick] { return (*tick)++; }, max_drops);
}

void record_step(CampaignResult& result, int iteration, const Recipe& recipe, const ColorRGB& measured,
                 std::size_t training_size) {
    CampaignStep step;
    step.iteration = iteration;
    step.recipe = recipe;
    step.measured = measured;
    step.error = color_error(measured, result.target);
    step.best_error = result.steps.empty() ? step.error : std::min(step.error, result.steps.back().best_error);
    step.training_size = training_size;
    result.steps.push_back(step);
}

void seed_store(Store& store, FrugalTwin& twin, const std::string& contributor,
                std::vector<std::pair<Recipe, ColorRGB>>& measured) {
    for (const auto& r : seed_recipes()) {
        const ColorRGB c = twin.measure(r);
        store.submit({r, c, contributor, "frugal-twin", RecordSource::Simulated, std::nullopt, "seed"});
        measured.emplace_back(r, c);
    }
}

Recipe run_iteration(Store& store, FrugalTwin& twin, const TargetColor& target,
                     const CampaignPolicy& policy, const std::string& agent, ColorRGB& measured,
                     std::size_t& training_size) {
    const auto observations = to_observations(store.query());
    const auto s = suggest(observations, target, store.space(), policy.hyper);
    const Recipe chosen = policy.execute_exploration ? s.exploration.recipe : s.optimal.recipe;
    measured = twin.measure(chosen);
    training_size = s.training_size;
    store.submit({chosen, measured, agent, "frugal-twin", RecordSource::Simulated, std::nullopt, agent});
    return chosen;
}

} // namespace

CampaignResult run_solo_campaign(const TargetColor& t, int iterations, const OracleConfig& oracle,
                                 const CampaignPolicy& policy, std::string agent) {
    if (iterations < 0) throw ValidationError("iterations must be >= 0", {"iterations"});
    Store store = campaign_store(policy.max_drops);
    FrugalTwin twin(oracle);
    CampaignResult result{std::move(agent), t, {}};

    std::vector<std::pair<Recipe, ColorRGB>> seeds;
    seed_store(store, twin, result.agent, seeds);
    for (const auto& [r, c] : seeds) record_step(result, 0, r, c, 0);

    for (int it = 1; it <= iterations; ++it) {
        ColorRGB measured;
        std::size_t n = 0;
        const Recipe r = run_iteration(store, twin, t, policy, result.agent, measured, n);
        record_step(result, it, r, measured, n);
    }
    return result;
}

std::array<CampaignResult, 4> run_collaborative_campaign(const std::array<TargetColor, 4>& targets,
                                                         int iterations, const OracleConfig& oracle,
                                                         const CampaignPolicy& policy) {
    Store store = campaign_store(policy.max_drops);
    return run_collaborative_campaign(targets, iterations, oracle, store, policy);
}

std::array<CampaignResult, 4> run_collaborative_campaign(const std::array<TargetColor, 4>& targets,
                                                         int iterations, const OracleConfig& oracle,
                                                         Store& store, const CampaignPolicy& policy) {
    if (iterations < 0) throw ValidationError("iterations must be >= 0", {"iterations"});
    if (store.size() != 0) throw ValidationError("collaborative campaigns start from an empty store", {"store"});
    FrugalTwin twin(oracle);

    std::array<CampaignResult, 4> results{{
        {default_targets()[0].agent, targets[0], {}},
        {default_targets()[1].agent, targets[1], {}},
        {default_targets()[2].agent, targets[2], {}},
        {default_targets()[3].agent, targets[3], {}},
    }};

    std::vector<std::pair<Recipe, ColorRGB>> seeds;
    seed_store(store, twin, "shared", seeds);
    for (auto& res : results)
        for (const auto& [r, c] : seeds) record_step(res, 0, r, c, 0);

    for (int it = 1; it <= iterations; ++it) {
        for (auto& res : results) {
            ColorRGB measured;
            std::size_t n = 0;
            const Recipe r = run_iteration(store, twin, res.target, policy, res.agent, measured, n);
            record_step(res, it, r, measured, n);
        }
    }
    return results;
}

CampaignComparison compare_campaigns(const CampaignResult& solo, const CampaignResult& collab) {
    if (!(solo.target == collab.target))
        throw ValidationError("campaigns being compared must share a target", {"target"});
    const auto a = solo.best_error_series();
    const auto b = collab.best_error_series();
    CampaignComparison out{solo.target, {}, 0.0};
    const std::size_t shared = std::min(a.size(), b.size());
    for (std::size_t i = 1; i < shared; ++i) out.rows.push_back({static_cast<int>(i), a[i], b[i]});
    if (shared > 0) out.final_delta = b[shared - 1] - a[shared - 1];
    return out;
}

namespace {

std::string num(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

} // namespace

void write_campaign_csv(std::ostream& out, const std::vector<CampaignResult>& results) {
    out << "iteration,agent,target_r,target_g,target_b,red,yellow,blue,green,r,g,b,error,best_error\n";
    for (const auto& res : results) {
        for (const auto& s : res.steps) {
            out << s.iteration << ',' << res.agent << ',' << num(res.target[0]) << ',' << num(res.target[1])
                << ',' << num(res.target[2]) << ',' << s.recipe.red << ',' << s.recipe.yellow << ','
                << s.recipe.blue << ',' << s.recipe.green << ',' << num(s.measured.r) << ','
                << num(s.measured.g) << ',' << num(s.measured.b) << ',' << num(s.error) << ','
                << num(s.best_error) << '\n';
        }
    }
}

void write_comparison_table(std::ostream& out, const std::vector<CampaignComparison>& rows) {
    char line[160];
    for (const auto& c : rows) {
        std::snprintf(line, sizeof line, "target (%g, %g, %g)\n", c.target[0], c.target[1], c.target[2]);
        out << line;
        out << "  iter    solo_best  collab_best\n";
        for (const auto& r : c.rows) {
            std::snprintf(line, sizeof line, "  %4d  %11.3f  %11.3f\n", r.iteration, r.solo_best, r.collab_best);
            out << line;
        }
        std::snprintf(line, sizeof line, "  final delta (collab - solo): %.3f\n", c.final_delta);
        out << line;
    }
}

} // namespace chromatwin
