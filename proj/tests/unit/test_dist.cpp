#include "cdte/dist.hpp"
#include "cdte/normal.hpp"

#include <doctest.h>

#include <random>

using namespace cdte;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

// Exact minimum of sum (x_i - raw_i)^2 over nondecreasing x with every x_i on
// the level set lo + k * step, k = 0..m, by dynamic programming over levels.
double brute_force_monotone(const Vector& raw, double lo, double step, int m) {
    std::vector<double> best(static_cast<std::size_t>(m + 1), 0.0);
    for (Index i = 0; i < raw.size(); ++i) {
        double running = INFINITY;
        for (int k = 0; k <= m; ++k) {
            running = std::min(running, best[std::size_t(k)]);
            const double d = lo + k * step - raw(i);
            best[std::size_t(k)] = running + d * d;
        }
    }
    return *std::min_element(best.begin(), best.end());
}

}  // namespace

TEST_CASE("eval_cdf interpolates and holds flat outside the grid") {
    const GridCdf ramp(vec({0, 1}), vec({0, 1}));
    CHECK(eval_cdf(ramp, 0.3) == doctest::Approx(0.3));
    CHECK(eval_cdf(ramp, -5.0) == 0.0);
    CHECK(eval_cdf(ramp, 7.0) == 1.0);
    const GridCdf three(vec({0, 1, 2}), vec({0, 0.25, 1}));
    CHECK(eval_cdf(three, 1.5) == doctest::Approx(0.625));
}

TEST_CASE("invert_cdf is the generalized inverse") {
    const GridCdf ramp(vec({0, 1}), vec({0, 1}));
    CHECK(invert_cdf(ramp, 0.3).value == doctest::Approx(0.3));
    CHECK(invert_cdf(ramp, 0.0).value == 0.0);
    const GridCdf three(vec({0, 1, 2}), vec({0, 0.25, 1}));
    CHECK(invert_cdf(three, 0.625).value == doctest::Approx(1.5));

    const GridCdf partial(vec({0, 1, 2}), vec({0.1, 0.4, 0.9}));
    const auto sat = invert_cdf(partial, 0.95);
    CHECK(sat.saturated);
    CHECK(sat.value == 2.0);
    for (double a = 0.0; a <= 0.9; a += 0.01) {
        CHECK(eval_cdf(partial, invert_cdf(partial, a).value) >= a - 1e-12);
    }
    for (Index k = 0; k < partial.size(); ++k) {
        CHECK(invert_cdf(partial, partial.probs()(k)).value <= partial.grid()(k));
    }
}

TEST_CASE("GridCdf and GridQuantile reject invalid input") {
    CHECK_THROWS(GridCdf(vec({0}), vec({0})));
    CHECK_THROWS(GridCdf(vec({0, 0}), vec({0, 1})));
    CHECK_THROWS(GridCdf(vec({0, 1}), vec({0.5, 0.2})));
    CHECK_THROWS(GridCdf(vec({0, 1}), vec({0, 1.2})));
    CHECK_THROWS(GridQuantile(vec({0, 0.5}), vec({0, 1})));
    CHECK_THROWS(GridQuantile(vec({0.2, 0.5}), vec({1, 0})));
}

TEST_CASE("crps_distance") {
    const Vector g = linspace(0.0, 2.0, 11);
    const Vector zero = Vector::Zero(11);
    CHECK(crps_distance(zero, zero, g) == 0.0);
    CHECK(crps_distance(Vector::Ones(11), zero, g) == doctest::Approx(2.0));
    const Vector fine = linspace(0.0, 2.0, 2001);
    CHECK(std::abs(crps_distance(Vector(fine / 2.0), Vector::Zero(2001), fine) - 2.0 / 3.0) < 1e-3);
    const Vector a = vec({0.1, 0.5, 0.7});
    const Vector b = vec({0.3, 0.2, 0.9});
    const Vector g3 = vec({-1, 0, 2});
    CHECK(crps_distance(a, b, g3) == crps_distance(b, a, g3));
    CHECK_THROWS(crps_distance(vec({1}), vec({1}), vec({0})));
}

TEST_CASE("w2_sq_distance") {
    const Vector levels = midpoint_levels(10);
    const Vector zero = Vector::Zero(10);
    CHECK(w2_sq_distance(zero, zero, levels) == 0.0);
    CHECK(w2_sq_distance(Vector::Constant(10, 3.0), zero, levels) == doctest::Approx(9.0));
    const Vector fine = linspace(0.001, 0.999, 2001);
    Vector q(fine.size());
    for (Index i = 0; i < fine.size(); ++i) q(i) = normal_quantile(fine(i));
    CHECK(std::abs(w2_sq_distance(q, Vector::Zero(fine.size()), fine) - 1.0) < 0.02);
}

TEST_CASE("project_to_cdf") {
    const Vector g2 = vec({0, 1});
    CHECK(project_to_cdf(vec({0, 0.5, 1}), vec({0, 0.5, 1})).probs() == vec({0, 0.5, 1}));
    CHECK(project_to_cdf(g2, vec({0.6, 0.4})).probs().isApprox(vec({0.5, 0.5})));
    CHECK(project_to_cdf(g2, vec({-0.2, 1.3})).probs() == vec({0, 1}));
    CHECK_THROWS(project_to_cdf(g2, vec({NAN, 0.2})));
    const Vector once = project_cdf_values(vec({0.9, 0.1, 1.4, -0.3, 0.5}));
    CHECK(project_cdf_values(once) == once);
}

TEST_CASE("project_to_quantile") {
    const Vector l3 = midpoint_levels(3);
    CHECK(project_to_quantile(l3, vec({-1, 0, 1})).values() == vec({-1, 0, 1}));
    CHECK(project_to_quantile(midpoint_levels(2), vec({1, 0})).values().isApprox(vec({0.5, 0.5})));
    CHECK(project_to_quantile(midpoint_levels(4), vec({0, 2, 1, 3})).values().isApprox(vec({0, 1.5, 1.5, 3})));
    CHECK_THROWS(project_to_quantile(l3, vec({0, INFINITY, 1})));
}

TEST_CASE("project_cdf_values matches exhaustive search over monotone sequences") {
    // Raw values are multiples of 0.01, so every pooled mean is a multiple of
    // 0.01 / 2520 and the level set below contains the exact optimum.
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> len(1, 10);
    std::uniform_int_distribution<int> cents(-30, 130);
    const int m = 100 * 2520;
    const double step = 1.0 / m;
    for (int rep = 0; rep < 100; ++rep) {
        Vector raw(len(rng));
        for (Index i = 0; i < raw.size(); ++i) raw(i) = cents(rng) / 100.0;
        const Vector proj = project_cdf_values(raw);
        CHECK(detail::nondecreasing(proj));
        const double objective = (proj - raw).squaredNorm();
        CHECK(std::abs(objective - brute_force_monotone(raw, 0.0, step, m)) < 1e-6);
    }
}

TEST_CASE("Dataset validation") {
    Matrix x(3, 1);
    x << 1, 2, 3;
    Eigen::VectorXi a(3);
    a << 0, 1, 1;
    const Vector y = vec({0.5, 1.5, 2.5});
    const Dataset d(x, a, y);
    CHECK(d.count_arm(1) == 2);
    Eigen::VectorXi bad(3);
    bad << 0, 2, 1;
    CHECK_THROWS(Dataset(x, bad, y));
    Eigen::VectorXi folds(3);
    folds << 0, 1, 2;
    CHECK_THROWS(Dataset(x, a, y, folds, 2));
    CHECK_THROWS(Dataset(Matrix(3, 0), a, y));
}

TEST_CASE("EvalGrid validation") {
    const EvalGrid g = EvalGrid::uniform(-1, 1, 5, 4, -2, 2, 9);
    CHECK_NOTHROW(g.validate());
    CHECK(g.alpha(0) > 0.0);
    EvalGrid bad = g;
    bad.delta = vec({0, 0});
    CHECK_THROWS(bad.validate());
}
