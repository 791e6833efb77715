#pragma once

#include "chromatwin/recipe_space.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace chromatwin {

// Squared-exponential kernel hyperparameters. Variances are in squared
// output units; the length scale is in normalized feature units.
struct KernelParams {
    double signal_variance = 100.0 * 100.0;
    double length_scale = 0.25;
    double noise_variance = 7.0 * 7.0;

    void validate() const;
    bool operator==(const KernelParams&) const = default;
};

double kernel(const FeatureVector& a, const FeatureVector& b, const KernelParams& p);

struct ChannelPrediction {
    double mean = 0.0;
    double stddev = 0.0;
};

struct FitOptions {
    // Subtract the training mean before fitting so the posterior reverts
    // to the data mean rather than to zero far from the data.
    bool center_targets = true;
    int max_jitter_retries = 3;
};

// Exact GP posterior for one output channel. Immutable once fitted.
class TrainedChannelModel {
public:
    static TrainedChannelModel fit(std::vector<FeatureVector> features, std::vector<double> targets,
                                   const KernelParams& params, const FitOptions& options = {});

    ChannelPrediction predict(const FeatureVector& x) const;

    // log p(y | X) of the (centered) targets under the fitted kernel.
    double log_marginal_likelihood() const;

    std::size_t size() const { return features_.size(); }
    const std::vector<FeatureVector>& features() const { return features_; }
    const std::vector<double>& targets() const { return targets_; }
    const KernelParams& params() const { return params_; }
    double target_offset() const { return offset_; }
    // Diagonal jitter added on top of the noise variance (0 unless a retry was needed).
    double jitter() const { return jitter_; }
    const Eigen::MatrixXd& factor() const { return factor_; }
    const Eigen::VectorXd& weights() const { return weights_; }

private:
    TrainedChannelModel() = default;

    std::vector<FeatureVector> features_;
    std::vector<double> targets_;
    KernelParams params_;
    double offset_ = 0.0;
    double jitter_ = 0.0;
    Eigen::MatrixXd factor_;   // lower Cholesky factor of K + (noise + jitter) I
    Eigen::VectorXd weights_;  // (K + (noise + jitter) I)^-1 (y - offset)
};

// Grid element with the highest log marginal likelihood; ties keep the
// earliest element. Throws ValidationError on an empty grid.
KernelParams select_hyperparameters(const std::vector<FeatureVector>& features,
                                    const std::vector<double>& targets,
                                    std::span<const KernelParams> grid,
                                    const FitOptions& options = {});

std::vector<KernelParams> default_hyperparameter_grid();

// Posterior over every recipe of a design space, in enumeration order.
// The model's features must have been encoded against the same space.
struct GridPosterior {
    std::vector<double> mean;
    std::vector<double> stddev;  // empty unless requested
};

GridPosterior predict_grid(const TrainedChannelModel& model, const DesignSpace& space,
                           bool with_stddev);

} // namespace chromatwin
