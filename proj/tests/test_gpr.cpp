#include "chromatwin/errors.hpp"
#include "chromatwin/gpr.hpp"

#include "oracles/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace chromatwin;

namespace {

std::vector<FeatureVector> random_features(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<FeatureVector> x(n);
    for (auto& f : x)
        for (auto& v : f) v = u(rng);
    return x;
}

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

} // namespace

TEST_CASE("kernel matches the squared-exponential form") {
    const KernelParams p{4.0, 0.5, 0.1};
    CHECK(kernel({0, 0, 0, 0}, {0, 0, 0, 0}, p) == doctest::Approx(4.0));
    CHECK(kernel({0, 0, 0, 0}, {0.5, 0, 0, 0}, p) == doctest::Approx(4.0 * std::exp(-0.5)));
    CHECK(kernel({0.1, 0.2, 0.3, 0.4}, {0.4, 0.3, 0.2, 0.1}, p) ==
          doctest::Approx(kernel({0.4, 0.3, 0.2, 0.1}, {0.1, 0.2, 0.3, 0.4}, p)));
}

TEST_CASE("kernel params are validated") {
    CHECK_THROWS_AS((KernelParams{0.0, 1.0, 1.0}.validate()), ValidationError);
    CHECK_THROWS_AS((KernelParams{1.0, -1.0, 1.0}.validate()), ValidationError);
    CHECK_THROWS_AS((KernelParams{1.0, 1.0, -1e-3}.validate()), ValidationError);
    CHECK_NOTHROW((KernelParams{1.0, 1.0, 0.0}.validate()));
}

TEST_CASE("posterior matches dense-inverse oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int inst = 0; inst < 30; ++inst) {
        const std::size_t n = 1 + static_cast<std::size_t>(inst % 10);
        const auto x = random_features(rng, n);
        std::vector<double> y(n);
        for (auto& v : y) v = 255.0 * u(rng);
        const KernelParams p{50.0 + 5000.0 * u(rng), 0.1 + u(rng), 1.0 + 20.0 * u(rng)};
        const bool center = inst % 2 == 0;
        const auto model = TrainedChannelModel::fit(x, y, p, {center, 3});
        std::vector<oracle::Point> ox(x.begin(), x.end());
        const oracle::DenseGp ref(ox, y, p.signal_variance, p.length_scale, p.noise_variance, center);
        for (const auto& q : random_features(rng, 5)) {
            const auto pred = model.predict(q);
            CHECK(close_rel(pred.mean, ref.mean(q), 1e-8));
            CHECK(close_rel(pred.stddev, std::sqrt(std::max(0.0, ref.variance(q))), 1e-8));
        }
    }
}

TEST_CASE("noise-free model interpolates its training data") {
    std::mt19937_64 rng(5);
    const auto x = random_features(rng, 8);
    std::vector<double> y{10, 200, 35, 90, 120, 5, 250, 60};
    const auto model = TrainedChannelModel::fit(x, y, {1e4, 0.3, 0.0});
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto p = model.predict(x[i]);
        CHECK(p.mean == doctest::Approx(y[i]).epsilon(1e-9));
        CHECK(p.stddev < 1e-4);
    }
}

TEST_CASE("far from data the centered posterior reverts to the training mean") {
    const std::vector<FeatureVector> x{{0, 0, 0, 0}, {0.05, 0, 0, 0}};
    const auto model = TrainedChannelModel::fit(x, {100.0, 110.0}, {1e4, 0.05, 1.0});
    const auto far = model.predict({1, 1, 1, 1});
    CHECK(far.mean == doctest::Approx(105.0));
    CHECK(far.stddev == doctest::Approx(100.0));
    const auto raw = TrainedChannelModel::fit(x, {100.0, 110.0}, {1e4, 0.05, 1.0}, {false, 3});
    CHECK(raw.predict({1, 1, 1, 1}).mean == doctest::Approx(0.0));
}

TEST_CASE("duplicate inputs without noise trigger jitter") {
    const std::vector<FeatureVector> x{{0.5, 0.5, 0.5, 0.5}, {0.5, 0.5, 0.5, 0.5}};
    const auto model = TrainedChannelModel::fit(x, {10.0, 12.0}, {1e4, 0.25, 0.0});
    CHECK(model.jitter() > 0.0);
    CHECK(std::isfinite(model.predict(x[0]).mean));
    CHECK(model.predict(x[0]).mean == doctest::Approx(11.0).epsilon(1e-3));
}

TEST_CASE("fit rejects bad input") {
    CHECK_THROWS_AS(TrainedChannelModel::fit({}, {}, {}), EmptyDatasetError);
    CHECK_THROWS_AS(TrainedChannelModel::fit({{0, 0, 0, 0}}, {1.0, 2.0}, {}), ValidationError);
    CHECK_THROWS_AS(TrainedChannelModel::fit({{0, 0, 0, 0}}, {std::nan("")}, {}), ValidationError);
}

TEST_CASE("log marginal likelihood matches the closed form") {
    std::mt19937_64 rng(9);
    const auto x = random_features(rng, 6);
    const std::vector<double> y{3, 40, 80, 12, 100, 60};
    const KernelParams p{900.0, 0.4, 4.0};
    const auto model = TrainedChannelModel::fit(x, y, p);
    std::vector<oracle::Point> ox(x.begin(), x.end());
    const oracle::DenseGp ref(ox, y, p.signal_variance, p.length_scale, p.noise_variance, true);
    // log det via the oracle: product of pivots is awkward, so use Eigen-free
    // determinant through Gauss elimination on a copy.
    oracle::Matrix k(6, std::vector<double>(6));
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) k[i][j] = oracle::rbf(ox[i], ox[j], 900.0, 0.4) + (i == j ? 4.0 : 0.0);
    double logdet = 0;
    for (std::size_t c = 0; c < 6; ++c) {
        logdet += std::log(k[c][c]);
        for (std::size_t r = c + 1; r < 6; ++r) {
            const double f = k[r][c] / k[c][c];
            for (std::size_t j = c; j < 6; ++j) k[r][j] -= f * k[c][j];
        }
    }
    double quad = 0;
    for (std::size_t i = 0; i < 6; ++i) quad += (y[i] - ref.offset) * ref.alpha[i];
    const double expected = -0.5 * quad - 0.5 * logdet - 3.0 * std::log(2 * 3.14159265358979323846);
    CHECK(model.log_marginal_likelihood() == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("hyperparameter selection picks the best marginal likelihood") {
    std::mt19937_64 rng(21);
    const auto x = random_features(rng, 10);
    std::vector<double> y;
    for (const auto& f : x) y.push_back(200.0 * std::exp(-2.0 * (f[0] + f[1])));
    const auto grid = default_hyperparameter_grid();
    CHECK(grid.size() == 54);
    const auto chosen = select_hyperparameters(x, y, grid);
    double best = -1e300;
    for (const auto& p : grid) best = std::max(best, TrainedChannelModel::fit(x, y, p).log_marginal_likelihood());
    CHECK(TrainedChannelModel::fit(x, y, chosen).log_marginal_likelihood() == best);
    // Ties go to the first element.
    const std::vector<KernelParams> dup{grid[3], grid[3]};
    CHECK(select_hyperparameters(x, y, dup) == grid[3]);
    CHECK_THROWS_AS(select_hyperparameters(x, y, std::vector<KernelParams>{}), ValidationError);
}

TEST_CASE("grid prediction agrees with pointwise prediction") {
    const DesignSpace space(4);
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> d(0, 4);
    std::vector<FeatureVector> x;
    std::vector<double> y;
    for (int i = 0; i < 12; ++i) {
        const Recipe r{d(rng), d(rng), d(rng), d(rng)};
        x.push_back(encode(r, space));
        y.push_back(10.0 * r.red + 3.0 * r.blue - r.green);
    }
    const auto model = TrainedChannelModel::fit(x, y, {400.0, 0.3, 1.0});
    const auto grid = predict_grid(model, space, true);
    REQUIRE(grid.mean.size() == space.size());
    REQUIRE(grid.stddev.size() == space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto p = model.predict(encode(space.at(i), space));
        CHECK(grid.mean[i] == doctest::Approx(p.mean).epsilon(1e-9));
        CHECK(grid.stddev[i] == doctest::Approx(p.stddev).epsilon(1e-7));
    }
    CHECK(predict_grid(model, space, false).stddev.empty());
}
