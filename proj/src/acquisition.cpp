#include "chromatwin/acquisition.hpp"

#include "chromatwin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

namespace chromatwin {

namespace {

TrainedChannelModel fit_channel(const std::vector<FeatureVector>& features,
                                const std::vector<double>& targets, const HyperPolicy& policy,
                                const FitOptions& options) {
    const KernelParams params =
        policy.mode == HyperPolicy::Mode::Fixed
            ? policy.fixed
            : select_hyperparameters(features, targets, policy.grid, options);
    return TrainedChannelModel::fit(features, targets, params, options);
}

} // namespace

ColorModel ColorModel::fit(std::span<const Observation> observations, const DesignSpace& space,
                           const HyperPolicy& policy, const FitOptions& options) {
    if (observations.empty())
        throw EmptyDatasetError("no training records; measure the seed recipes first");
    std::vector<FeatureVector> features;
    std::array<std::vector<double>, kChannelCount> targets;
    features.reserve(observations.size());
    for (const auto& o : observations) {
        features.push_back(encode(o.recipe, space));
        if (!o.measured.is_finite()) throw ValidationError("non-finite measured color", {"measured"});
        for (int ch = 0; ch < kChannelCount; ++ch) targets[ch].push_back(o.measured[ch]);
    }
    return ColorModel({fit_channel(features, targets[0], policy, options),
                       fit_channel(features, targets[1], policy, options),
                       fit_channel(features, targets[2], policy, options)},
                      space);
}

ColorPrediction ColorModel::predict(const Recipe& r) const {
    const FeatureVector x = encode(r, space_);
    ColorPrediction out;
    for (int ch = 0; ch < kChannelCount; ++ch) {
        const auto p = channels_[static_cast<std::size_t>(ch)].predict(x);
        out.mean[ch] = p.mean;
        out.stddev[static_cast<std::size_t>(ch)] = p.stddev;
    }
    return out;
}

ColorPrediction predict_color(const ColorModel& model, const Recipe& r) {
    return model.predict(r);
}

ErrorMoments error_moments(const ColorPrediction& p, const TargetColor& t) {
    double mean = 0.0;
    double var = 0.0;
    for (int ch = 0; ch < kChannelCount; ++ch) {
        const double d = p.mean[ch] - t[ch];
        const double s2 = p.stddev[static_cast<std::size_t>(ch)] * p.stddev[static_cast<std::size_t>(ch)];
        mean += d * d + s2;
        var += 4.0 * s2 * d * d + 2.0 * s2 * s2;
    }
    return {mean, std::sqrt(var)};
}

double squared_mean_error(const ColorPrediction& p, const TargetColor& t) {
    return squared_distance(p.mean, t.rgb());
}

double expected_improvement(double z, double s) {
    if (!(s >= 0.0)) throw ValidationError("expected improvement needs s >= 0", {"s"});
    if (s == 0.0) return std::max(z, 0.0);
    const double u = z / s;
    const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    const double cdf = 0.5 * std::erfc(-u / std::numbers::sqrt2);
    return std::max(s * pdf + z * cdf, 0.0);
}

ColorPrediction ColorGridPosterior::at(std::size_t index) const {
    ColorPrediction p;
    for (int ch = 0; ch < kChannelCount; ++ch) {
        const auto c = static_cast<std::size_t>(ch);
        p.mean[ch] = mean[c][index];
        p.stddev[c] = stddev[c].empty() ? 0.0 : stddev[c][index];
    }
    return p;
}

ColorGridPosterior predict_color_grid(const ColorModel& model, bool with_stddev) {
    ColorGridPosterior out;
    for (int ch = 0; ch < kChannelCount; ++ch) {
        const auto c = static_cast<std::size_t>(ch);
        const auto& m = model.channel(ch);
        // Channels sharing kernel parameters share the factor, hence the variance.
        int shared = -1;
        for (int prev = 0; prev < ch && with_stddev; ++prev) {
            const auto& pm = model.channel(prev);
            if (pm.params() == m.params() && pm.jitter() == m.jitter()) {
                shared = prev;
                break;
            }
        }
        auto grid = predict_grid(m, model.space(), with_stddev && shared < 0);
        out.mean[c] = std::move(grid.mean);
        if (with_stddev)
            out.stddev[c] = shared < 0 ? std::move(grid.stddev) : out.stddev[static_cast<std::size_t>(shared)];
    }
    return out;
}

ScoredRecipe scan_argmin(const DesignSpace& space, const std::function<double(std::size_t)>& score) {
    ScoredRecipe best;
    std::size_t best_index = 0;
    double best_score = 0.0;
    const std::size_t total = space.size();
    for (std::size_t i = 0; i < total; ++i) {
        const double s = score(i);
        if (i == 0 || s < best_score) {
            best_score = s;
            best_index = i;
        }
        ++best.candidates_evaluated;
    }
    best.recipe = space.at(best_index);
    best.score = best_score;
    return best;
}

ScoredRecipe scan_argmax(const DesignSpace& space, const std::function<double(std::size_t)>& score) {
    auto out = scan_argmin(space, [&](std::size_t i) { return -score(i); });
    out.score = -out.score;
    return out;
}

ScoredRecipe optimal_recipe(const ColorModel& model, const TargetColor& t) {
    return optimal_recipe(model, predict_color_grid(model, false), t);
}

ScoredRecipe optimal_recipe(const ColorModel& model, const ColorGridPosterior& grid,
                            const TargetColor& t) {
    const auto& space = model.space();
    auto best = scan_argmin(space, [&](std::size_t i) {
        double s = 0.0;
        for (int ch = 0; ch < kChannelCount; ++ch) {
            const double d = grid.mean[static_cast<std::size_t>(ch)][i] - t[ch];
            s += d * d;
        }
        return s;
    });
    best.predicted = grid.at(space.index_of(best.recipe));
    return best;
}

std::size_t best_observation(std::span<const Observation> observations, const TargetColor& t) {
    if (observations.empty())
        throw EmptyDatasetError("no records to pick an incumbent from; measure the seed recipes first");
    std::size_t best = 0;
    double best_err = squared_distance(observations[0].measured, t.rgb());
    for (std::size_t i = 1; i < observations.size(); ++i) {
        const double e = squared_distance(observations[i].measured, t.rgb());
        if (e < best_err) {
            best_err = e;
            best = i;
        }
    }
    return best;
}

ScoredRecipe exploration_recipe(const ColorModel& model, const TargetColor& t,
                                std::span<const Observation> observations) {
    // Validate before paying for the variance scan.
    best_observation(observations, t);
    return exploration_recipe(model, predict_color_grid(model, true), t, observations);
}

ScoredRecipe exploration_recipe(const ColorModel& model, const ColorGridPosterior& grid,
                                const TargetColor& t, std::span<const Observation> observations) {
    const auto& space = model.space();
    const Recipe incumbent = observations[best_observation(observations, t)].recipe;
    const double best_mean = error_moments(model.predict(incumbent), t).mean;

    auto best = scan_argmax(space, [&](std::size_t i) {
        const auto m = error_moments(grid.at(i), t);
        return expected_improvement(best_mean - m.mean, m.stddev);
    });
    best.predicted = grid.at(space.index_of(best.recipe));
    return best;
}

SuggestionPair suggest(std::span<const Observation> observations, const TargetColor& t,
                       const DesignSpace& space, const HyperPolicy& policy) {
    const auto model = ColorModel::fit(observations, space, policy);
    const auto grid = predict_color_grid(model, true);

    SuggestionPair out;
    out.optimal = optimal_recipe(model, grid, t);
    out.exploration = exploration_recipe(model, grid, t, observations);
    out.training_size = observations.size();
    for (int ch = 0; ch < kChannelCount; ++ch)
        out.params[static_cast<std::size_t>(ch)] = model.channel(ch).params();

    std::unordered_set<Recipe> tested;
    for (const auto& o : observations) tested.insert(o.recipe);
    out.optimal.already_tested = tested.contains(out.optimal.recipe);
    out.exploration.already_tested = tested.contains(out.exploration.recipe);
    return out;
}

} // namespace chromatwin
