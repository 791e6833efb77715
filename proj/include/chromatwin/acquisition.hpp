#pragma once

#include "chromatwin/color.hpp"
#include "chromatwin/gpr.hpp"
#include "chromatwin/recipe_space.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace chromatwin {

// One measured experiment as seen by the model: a recipe and its color.
struct Observation {
    Recipe recipe;
    ColorRGB measured;
};

struct ColorPrediction {
    ColorRGB mean;
    std::array<double, kChannelCount> stddev{};
};

// Moments of D = sum over channels of (M_ch - t_ch)^2 with independent
// Gaussian channels.
struct ErrorMoments {
    double mean = 0.0;
    double stddev = 0.0;
};

// How kernel hyperparameters are chosen on each fit. By default every
// channel picks the grid element with the highest marginal likelihood;
// Fixed uses `fixed` for all three channels.
struct HyperPolicy {
    enum class Mode { Fixed, MarginalLikelihood };

    Mode mode = Mode::MarginalLikelihood;
    KernelParams fixed{};
    std::vector<KernelParams> grid = default_hyperparameter_grid();

    static HyperPolicy fixed_defaults() { return {Mode::Fixed, {}, {}}; }
    static HyperPolicy marginal_likelihood() { return {Mode::MarginalLikelihood, {}, default_hyperparameter_grid()}; }
};

// Three independent channel GPs trained on one shared design.
class ColorModel {
public:
    static ColorModel fit(std::span<const Observation> observations, const DesignSpace& space,
                          const HyperPolicy& policy = {}, const FitOptions& options = {});

    ColorPrediction predict(const Recipe& r) const;

    const TrainedChannelModel& channel(int ch) const { return channels_[static_cast<std::size_t>(ch)]; }
    const DesignSpace& space() const { return space_; }
    std::size_t training_size() const { return channels_[0].size(); }

private:
    ColorModel(std::array<TrainedChannelModel, kChannelCount> channels, DesignSpace space)
        : channels_(std::move(channels)), space_(space) {}

    std::array<TrainedChannelModel, kChannelCount> channels_;
    DesignSpace space_;
};

ColorPrediction predict_color(const ColorModel& model, const Recipe& r);

ErrorMoments error_moments(const ColorPrediction& p, const TargetColor& t);
double squared_mean_error(const ColorPrediction& p, const TargetColor& t);

// s * pdf(z/s) + z * cdf(z/s) for s > 0, max(z, 0) for s == 0, where z is
// the improvement over the incumbent. Throws ValidationError for s < 0.
double expected_improvement(double z, double s);

// Per-channel posterior over a whole design space in enumeration order.
struct ColorGridPosterior {
    std::array<std::vector<double>, kChannelCount> mean;
    std::array<std::vector<double>, kChannelCount> stddev;  // empty unless requested

    ColorPrediction at(std::size_t index) const;
};

ColorGridPosterior predict_color_grid(const ColorModel& model, bool with_stddev);

struct ScoredRecipe {
    Recipe recipe;
    ColorPrediction predicted;
    double score = 0.0;
    bool already_tested = false;
    std::size_t candidates_evaluated = 0;
};

// Lexicographically-first minimizer / maximizer of `score` over the space.
ScoredRecipe scan_argmin(const DesignSpace& space, const std::function<double(std::size_t)>& score);
ScoredRecipe scan_argmax(const DesignSpace& space, const std::function<double(std::size_t)>& score);

// Recipe whose predicted mean color is closest to the target.
ScoredRecipe optimal_recipe(const ColorModel& model, const TargetColor& t);
ScoredRecipe optimal_recipe(const ColorModel& model, const ColorGridPosterior& grid,
                            const TargetColor& t);

// Expected-improvement maximizer over the squared-error objective. The
// incumbent is the observation with the lowest observed error.
ScoredRecipe exploration_recipe(const ColorModel& model, const TargetColor& t,
                                std::span<const Observation> observations);
ScoredRecipe exploration_recipe(const ColorModel& model, const ColorGridPosterior& grid,
                                const TargetColor& t, std::span<const Observation> observations);

// Index of the observation closest to the target (earliest on ties).
std::size_t best_observation(std::span<const Observation> observations, const TargetColor& t);

struct SuggestionPair {
    ScoredRecipe optimal;
    ScoredRecipe exploration;
    std::size_t training_size = 0;
    std::array<KernelParams, kChannelCount> params{};
};

// Retrains the three channel models on `observations` and scans the space.
SuggestionPair suggest(std::span<const Observation> observations, const TargetColor& t,
                       const DesignSpace& space, const HyperPolicy& policy = {});

} // namespace chromatwin
