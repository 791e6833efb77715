#include "chromatwin/gpr.hpp"

#include "chromatwin/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <numeric>

namespace chromatwin {

void KernelParams::validate() const {
    std::vector<std::string> bad;
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) bad.emplace_back("signal_variance");
    if (!(length_scale > 0.0) || !std::isfinite(length_scale)) bad.emplace_back("length_scale");
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) bad.emplace_back("noise_variance");
    if (!bad.empty()) throw ValidationError("invalid kernel parameters", bad);
}

double kernel(const FeatureVector& a, const FeatureVector& b, const KernelParams& p) {
    double sq = 0.0;
    for (int d = 0; d < kDyeCount; ++d) {
        const double diff = a[d] - b[d];
        sq += diff * diff;
    }
    return p.signal_variance * std::exp(-sq / (2.0 * p.length_scale * p.length_scale));
}

TrainedChannelModel TrainedChannelModel::fit(std::vector<FeatureVector> features,
                                             std::vector<double> targets, const KernelParams& params,
                                             const FitOptions& options) {
    params.validate();
    if (features.empty()) throw EmptyDatasetError("cannot fit a GP to an empty dataset");
    if (features.size() != targets.size())
        throw ValidationError("feature and target counts differ", {"targets"});
    for (double y : targets)
        if (!std::isfinite(y)) throw ValidationError("non-finite training target", {"targets"});

    const auto n = static_cast<Eigen::Index>(features.size());
    TrainedChannelModel m;
    m.params_ = params;
    m.offset_ = options.center_targets
                    ? std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n)
                    : 0.0;

    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double k = kernel(features[i], features[j], params);
            gram(i, j) = k;
            gram(j, i) = k;
        }
    }
    gram.diagonal().array() += params.noise_variance;

    double jitter = 0.0;
    double step = 1e-8 * params.signal_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    for (int attempt = 0; llt.info() != Eigen::Success; ++attempt) {
        if (attempt >= options.max_jitter_retries)
            throw FactorizationError("covariance matrix is not positive definite after jitter retries");
        gram.diagonal().array() += step;
        jitter += step;
        step *= 10.0;
        llt.compute(gram);
    }

    Eigen::VectorXd centered(n);
    for (Eigen::Index i = 0; i < n; ++i) centered[i] = targets[i] - m.offset_;

    m.jitter_ = jitter;
    m.factor_ = llt.matrixL();
    m.weights_ = llt.solve(centered);
    m.features_ = std::move(features);
    m.targets_ = std::move(targets);
    return m;
}

ChannelPrediction TrainedChannelModel::predict(const FeatureVector& x) const {
    const auto n = static_cast<Eigen::Index>(features_.size());
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = kernel(x, features_[i], params_);

    const double mean = offset_ + k.dot(weights_);
    factor_.triangularView<Eigen::Lower>().solveInPlace(k);
    const double var = params_.signal_variance - k.squaredNorm();
    return {mean, std::sqrt(std::max(var, 0.0))};
}

double TrainedChannelModel::log_marginal_likelihood() const {
    const auto n = static_cast<double>(features_.size());
    double fit_term = 0.0;
    for (std::size_t i = 0; i < targets_.size(); ++i)
        fit_term += (targets_[i] - offset_) * weights_[static_cast<Eigen::Index>(i)];
    const double log_det_half = factor_.diagonal().array().log().sum();
    return -0.5 * fit_term - log_det_half - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

KernelParams select_hyperparameters(const std::vector<FeatureVector>& features,
                                    const std::vector<double>& targets,
                                    std::span<const KernelParams> grid, const FitOptions& options) {
    if (grid.empty()) throw ValidationError("hyperparameter grid is empty", {"grid"});
    const KernelParams* best = nullptr;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (const auto& p : grid) {
        double lml;
        try {
            lml = TrainedChannelModel::fit(features, targets, p, options).log_marginal_likelihood();
        } catch (const FactorizationError&) {
            continue;
        }
        if (best == nullptr || lml > best_lml) {
            best = &p;
            best_lml = lml;
        }
    }
    if (best == nullptr) throw FactorizationError("no hyperparameter candidate could be factorized");
    return *best;
}

std::vector<KernelParams> default_hyperparameter_grid() {
    std::vector<KernelParams> grid;
    for (double sf : {50.0, 100.0, 150.0})
        for (double ls : {0.1, 0.15, 0.25, 0.4, 0.6, 1.0})
            for (double sn : {1.0, 3.0, 7.0}) grid.push_back({sf * sf, ls, sn * sn});
    return grid;
}

GridPosterior predict_grid(const TrainedChannelModel& model, const DesignSpace& space,
                           bool with_stddev) {
    const auto n = static_cast<Eigen::Index>(model.size());
    const int levels = space.levels();
    const double scale = space.max_drops() > 0 ? static_cast<double>(space.max_drops()) : 1.0;
    const auto& p = model.params();
    const double inv_two_l2 = 1.0 / (2.0 * p.length_scale * p.length_scale);

    // The RBF kernel factorizes over dimensions: one table per dye of
    // exp(-(v/max - x_i)^2 / 2l^2) for every level v and training row i.
    std::array<Eigen::MatrixXd, kDyeCount> factors;
    for (int d = 0; d < kDyeCount; ++d) {
        factors[d].resize(n, levels);
        for (int v = 0; v < levels; ++v) {
            const double f = v / scale;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double diff = f - model.features()[i][d];
                factors[d](i, v) = std::exp(-diff * diff * inv_two_l2);
            }
        }
    }

    GridPosterior out;
    out.mean.resize(space.size());
    if (with_stddev) out.stddev.resize(space.size());

    const Eigen::Index block = static_cast<Eigen::Index>(levels) * levels;
    Eigen::MatrixXd cross(n, block);
    Eigen::VectorXd outer(n);
    std::size_t base = 0;
    for (int r = 0; r < levels; ++r) {
        for (int y = 0; y < levels; ++y) {
            outer = p.signal_variance *
                    factors[0].col(r).cwiseProduct(factors[1].col(y));
            for (int b = 0; b < levels; ++b) {
                const Eigen::VectorXd inner = outer.cwiseProduct(factors[2].col(b));
                for (int g = 0; g < levels; ++g)
                    cross.col(b * levels + g) = inner.cwiseProduct(factors[3].col(g));
            }
            const Eigen::VectorXd means = cross.transpose() * model.weights();
            for (Eigen::Index c = 0; c < block; ++c)
                out.mean[base + static_cast<std::size_t>(c)] = model.target_offset() + means[c];
            if (with_stddev) {
                model.factor().triangularView<Eigen::Lower>().solveInPlace(cross);
                const Eigen::VectorXd explained = cross.colwise().squaredNorm();
                for (Eigen::Index c = 0; c < block; ++c) {
                    const double var = p.signal_variance - explained[c];
                    out.stddev[base + static_cast<std::size_t>(c)] = std::sqrt(std::max(var, 0.0));
                }
            }
            base += static_cast<std::size_t>(block);
        }
    }
    return out;
}

} // namespace chromatwin
