#include "cdte/bench.hpp"
#include "cdte/normal.hpp"

#include <doctest.h>

#include <random>

using namespace cdte;

namespace {

Dataset linear_gaussian(Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix x(n, 2);
    Eigen::VectorXi a(n);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        x(i, 0) = g(rng);
        x(i, 1) = g(rng);
        a(i) = int(i % 2);
        y(i) = 0.5 + 1.5 * x(i, 0) - 0.7 * x(i, 1) + g(rng);
    }
    return Dataset(x, a, y);
}

}  // namespace

TEST_CASE("clip_propensity") {
    CHECK(clip_propensity(0.01, 0.05) == 0.05);
    CHECK(clip_propensity(0.5, 0.05) == 0.5);
    CHECK(clip_propensity(0.99, 0.05) == doctest::Approx(0.95));
}

TEST_CASE("fit_propensity without signal") {
    // Every covariate vector appears once in each arm.
    const Dataset base = linear_gaussian(1000, 1);
    Matrix x(2000, 2);
    x << base.covariates(), base.covariates();
    Eigen::VectorXi a(2000);
    a << Eigen::VectorXi::Zero(1000), Eigen::VectorXi::Ones(1000);
    const Dataset d(x, a, Vector::Zero(2000));
    const PropensityModel m = fit_propensity(d);
    CHECK(m.converged());
    CHECK(m.weights().cwiseAbs().maxCoeff() < 1e-6);
    for (Index i = 0; i < 50; ++i) CHECK(std::abs(m.raw(d.x(i)) - 0.5) < 0.02);
}

TEST_CASE("fit_propensity recovers the synthetic mechanism") {
    const Dataset d = generate_synth({SynthKind::normal, 3}, 5000);
    const PropensityModel m = fit_propensity(d);
    CHECK(m.converged());
    CHECK(std::abs(m.weights()(0) - 0.5) < 0.15);
    CHECK(std::abs(m.weights()(1) - 0.75) < 0.15);
    CHECK(std::abs(m.weights()(2) + 1.0) < 0.15);
    const auto& trace = m.objective_trace();
    REQUIRE(trace.size() >= 2);
    for (std::size_t k = 1; k < trace.size(); ++k) CHECK(trace[k] <= trace[k - 1]);
    for (Index i = 0; i < 200; ++i) {
        const double p = m(d.x(i));
        CHECK(p >= 0.05);
        CHECK(p <= 0.95);
    }
}

TEST_CASE("fit_propensity rejects a single arm") {
    Matrix x = Matrix::Random(20, 1);
    const Dataset d(x, Eigen::VectorXi::Ones(20), Vector::Random(20));
    CHECK_THROWS(fit_propensity(d));
}

TEST_CASE("gaussian conditional CDF") {
    const Dataset d = linear_gaussian(10000, 2);
    const CondCdfModel m = fit_cond_cdf(d, 1, CdfMethod::gaussian_loc_scale);
    CHECK(std::abs(m.scale() - 1.0) < 0.05);
    Vector x(2);
    x << 0.3, -0.2;
    CHECK(m.density(m.mean(x), x) == doctest::Approx(1.0 / (m.scale() * std::sqrt(2.0 * std::numbers::pi))));

    Vector w(3);
    w << 0.2, 1.0, -1.0;
    const CondCdfModel unit = CondCdfModel::gaussian(0, w, 1.0);
    CHECK(std::abs(unit.density(unit.mean(x) + 1.0, x) - 0.2420) < 1e-4);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const double h = 1e-5;
    for (int k = 0; k < 20; ++k) {
        Vector xr(2);
        xr << u(rng), u(rng);
        const double y = unit.mean(xr) + u(rng);
        const double fd = (unit.cdf(y + h, xr) - unit.cdf(y - h, xr)) / (2.0 * h);
        CHECK(std::abs(fd - unit.density(y, xr)) < 1e-4);
    }
}

TEST_CASE("kernel conditional CDF") {
    const Dataset d = generate_synth({SynthKind::normal, 5}, 1500);
    const CondCdfModel m = fit_cond_cdf(d, 0, CdfMethod::kernel_empirical);
    double ymax = -INFINITY;
    std::vector<double> arm_y;
    for (Index i = 0; i < d.size(); ++i) {
        if (d.a(i) == 0) {
            ymax = std::max(ymax, d.y(i));
            arm_y.push_back(d.y(i));
        }
    }
    Vector x(2);
    x << 0.4, -0.3;
    CHECK(m.cdf(ymax, x) == doctest::Approx(1.0));

    const EvalGrid g = default_grid(d);
    const Vector& yg = g.y;
    double mass = 0.0;
    for (Index k = 0; k + 1 < yg.size(); ++k) mass += m.density(0.5 * (yg(k) + yg(k + 1)), x) * (yg(k + 1) - yg(k));
    CHECK(std::abs(mass - 1.0) < 0.02);

    CdfHyper wide;
    wide.bandwidth = Vector::Constant(2, 1e6);
    const CondCdfModel flat = fit_cond_cdf(d, 0, CdfMethod::kernel_empirical, wide);
    std::sort(arm_y.begin(), arm_y.end());
    for (double q : {0.1, 0.5, 0.9}) {
        const double y = arm_y[std::size_t(q * double(arm_y.size()))];
        const double ecdf = double(std::upper_bound(arm_y.begin(), arm_y.end(), y) - arm_y.begin()) / double(arm_y.size());
        CHECK(flat.cdf(y, x) == doctest::Approx(ecdf).epsilon(1e-6));
    }

    CdfHyper bad;
    bad.bandwidth = Vector::Constant(2, 0.0);
    CHECK_THROWS(fit_cond_cdf(d, 0, CdfMethod::kernel_empirical, bad));
}

TEST_CASE("conditional CDFs are valid on the y grid") {
    const Dataset d = generate_synth({SynthKind::multimodal, 6}, 800);
    const EvalGrid g = default_grid(d);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (CdfMethod method : {CdfMethod::kernel_empirical, CdfMethod::gaussian_loc_scale}) {
        for (int arm = 0; arm < 2; ++arm) {
            const CondCdfModel m = fit_cond_cdf(d, arm, method);
            for (int k = 0; k < 100; ++k) {
                Vector x(2);
                x << u(rng), u(rng);
                const GridCdf c = m.cdf_on_grid(x, g.y);
                // The kernel estimator has all its mass inside the padded grid.
                const double tol = method == CdfMethod::kernel_empirical ? 1e-12 : 1e-2;
                CHECK(c.probs()(0) < tol);
                CHECK(c.probs()(c.size() - 1) > 1.0 - tol);
                CHECK(m.density(0.3, x) >= 0.0);
            }
        }
    }
}

TEST_CASE("fit_cond_cdf needs ten rows in the arm") {
    const Dataset d = generate_synth({SynthKind::normal, 7}, 12);
    CHECK_THROWS(fit_cond_cdf(d, 0, CdfMethod::kernel_empirical));
}

TEST_CASE("cross-fitting plan") {
    const CrossFitPlan p = make_plan(10, 2);
    CHECK(p.rows_in(0) == std::vector<Index>{0, 2, 4, 6, 8});
    CHECK(p.rows_in(1) == std::vector<Index>{1, 3, 5, 7, 9});
    const CrossFitPlan loo = make_plan(7, 7);
    for (int k = 0; k < 7; ++k) CHECK(loo.training_rows(k).size() == 6);
    CHECK(make_plan(10, 3).fold_of_row == make_plan(10, 3).fold_of_row);
    CHECK(make_plan(5, 1).training_rows(0).size() == 5);
    CHECK_THROWS(make_plan(3, 4));
}

TEST_CASE("cross_fit keeps rows out of their own fold") {
    const Dataset d = generate_synth({SynthKind::normal, 9}, 300);
    const NuisanceFit fit = cross_fit(d, 5);
    REQUIRE(fit.folds.size() == 5);
    for (int k = 0; k < 5; ++k) {
        const auto& train = fit.folds[std::size_t(k)].training_rows();
        for (Index i : train) CHECK(fit.plan.fold_of_row(i) != k);
        CHECK(train.size() == fit.plan.training_rows(k).size());
    }
    for (Index i = 0; i < d.size(); ++i) {
        const auto& train = fit.for_row(i).training_rows();
        CHECK(std::find(train.begin(), train.end(), i) == train.end());
    }
    CHECK(fit.full.training_rows().size() == std::size_t(d.size()));
}

TEST_CASE("cross_fit names the fold whose complement lacks an arm") {
    Matrix x = Matrix::Random(40, 1);
    Eigen::VectorXi a = Eigen::VectorXi::Ones(40);
    for (Index i = 0; i < 40; i += 2) a(i) = 0;
    const Dataset d(x, a, Vector::Random(40));
    try {
        cross_fit(d, 2);
        FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("fold") != std::string::npos);
    }
}
