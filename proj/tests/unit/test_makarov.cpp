#include "cdte/bench.hpp"
#include "cdte/normal.hpp"

#include <doctest.h>

#include <random>

using namespace cdte;

namespace {

auto shifted_normal(double mu) {
    return [mu](double y) { return normal_cdf(y - mu); };
}

auto normal_q(double mu) {
    return [mu](double u) { return mu + normal_quantile(u); };
}

EvalGrid grid_with_delta(const Vector& deltas) {
    EvalGrid g = EvalGrid::uniform(-1, 1, 2, 50, -8, 8, 2001);
    g.delta = deltas;
    return g;
}

}  // namespace

TEST_CASE("sup_convolution") {
    const Vector cand = linspace(-6.0, 7.0, 2001);
    const auto phi = shifted_normal(0.0);
    CHECK(sup_convolution(phi, phi, 0.0, cand).value == doctest::Approx(0.0));
    const ArgOpt two = sup_convolution(phi, phi, 2.0, cand);
    CHECK(std::abs(two.value - 0.6827) < 1e-3);
    CHECK(std::abs(two.smallest() - 1.0) < 0.01);
    // A shift of the treated arm makes the difference nonpositive, so its
    // supremum is approached in the tails.
    const ArgOpt shifted = sup_convolution(shifted_normal(1.0), phi, 0.0, cand);
    CHECK(shifted.value <= 0.0);
    CHECK(shifted.value > -1e-8);
    CHECK_THROWS(sup_convolution(phi, phi, 0.0, Vector()));
}

TEST_CASE("inf_convolution") {
    const Vector cand = linspace(-6.0, 7.0, 2001);
    const auto phi = shifted_normal(0.0);
    CHECK(inf_convolution(phi, phi, 0.0, cand).value == doctest::Approx(0.0));
    const ArgOpt neg = inf_convolution(phi, phi, -2.0, cand);
    CHECK(std::abs(neg.value + 0.6827) < 1e-3);
    CHECK(std::abs(neg.smallest() + 1.0) < 0.01);
    const ArgOpt pos = inf_convolution(phi, phi, 2.0, cand);
    CHECK(pos.value >= 0.0);
    CHECK(pos.value < 1e-6);
    CHECK((pos.smallest() < -4.0 || pos.smallest() > 5.0));
    const ArgOpt mid = inf_convolution(shifted_normal(1.0), phi, 0.0, cand);
    CHECK(std::abs(mid.value - (2.0 * normal_cdf(-0.5) - 1.0)) < 1e-3);
    CHECK(std::abs(mid.smallest() - 0.5) < 0.01);
}

TEST_CASE("cdf_bounds on equal normals") {
    const auto phi = shifted_normal(0.0);
    Vector d(3);
    d << -2.0, 0.0, 2.0;
    const BoundsPair b = cdf_bounds(phi, phi, grid_with_delta(d));
    CHECK(b.lower()(0) == doctest::Approx(0.0));
    CHECK(std::abs(b.upper()(0) - 0.3173) < 1e-3);
    CHECK(b.lower()(1) == doctest::Approx(0.0));
    CHECK(b.upper()(1) == doctest::Approx(1.0));
    CHECK(std::abs(b.lower()(2) - 0.6827) < 1e-3);
    CHECK(b.upper()(2) == doctest::Approx(1.0));
}

TEST_CASE("cdf_bounds are valid CDFs with lower <= upper") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
        const double m1 = u(rng);
        const double m0 = u(rng);
        EvalGrid g = EvalGrid::uniform(-8, 8, 50, 50, -10, 10, 400);
        const BoundsPair b = cdf_bounds(shifted_normal(m1), shifted_normal(m0), g);
        CHECK_NOTHROW(b.lower_cdf());
        CHECK_NOTHROW(b.upper_cdf());
        CHECK((b.lower().array() <= b.upper().array()).all());
    }
}

TEST_CASE("quantile_bounds") {
    EvalGrid g = EvalGrid::uniform(-1, 1, 2, 2, -8, 8, 2);
    g.levels = midpoint_levels(4000);
    g.alpha = Vector(2);
    g.alpha << 0.5, 0.6827;
    const BoundsPair b = quantile_bounds(normal_q(0.0), normal_q(0.0), g);
    CHECK(std::abs(b.lower()(1) - 2.0) < 5e-3);
    const QuantileProfile p = quantile_profile(normal_q(0.0), normal_q(0.0), g.alpha, g.levels);
    CHECK(std::abs(p.lower_arg(1) - 0.5 * (1.0 + 0.6827)) < 1e-3);
    CHECK(b.upper()(0) == doctest::Approx(-b.lower()(0)).epsilon(1e-3));

    g.alpha = midpoint_levels(20);
    const auto constant = [](double) { return 3.0; };
    const BoundsPair point = quantile_bounds(constant, constant, g);
    CHECK(point.lower().cwiseAbs().maxCoeff() == 0.0);
    CHECK(point.upper().cwiseAbs().maxCoeff() == 0.0);

    const BoundsPair wide = quantile_bounds(normal_q(0.5), normal_q(-0.2), g);
    CHECK((wide.upper().array() <= wide.lower().array()).all());

    EvalGrid coarse = g;
    coarse.levels = Vector::Constant(1, 0.5);
    CHECK_THROWS(quantile_bounds(normal_q(0.0), normal_q(0.0), coarse));
}

TEST_CASE("inverted lower CDF bound agrees with the lower quantile bound") {
    EvalGrid g = EvalGrid::uniform(-8, 8, 401, 50, -8, 8, 2001);
    g.levels = midpoint_levels(2000);
    const BoundsPair cdf = cdf_bounds(shifted_normal(0.0), shifted_normal(0.0), g);
    const BoundsPair q = quantile_bounds(normal_q(0.0), normal_q(0.0), g);
    const double cell = g.delta(1) - g.delta(0);
    const GridCdf lower = cdf.lower_cdf();
    for (Index j = 0; j < g.alpha.size(); ++j) {
        CHECK(std::abs(lower.invert(g.alpha(j)).value - q.lower()(j)) <= 2.0 * cell);
    }
}

TEST_CASE("cdf_bounds_mixed") {
    const DiscreteDist a = DiscreteDist::point_mass(2.0);
    const DiscreteDist b = DiscreteDist::point_mass(0.5);
    CHECK(cdf_bounds_mixed(a, b, 1.5) == std::pair{1.0, 1.0});
    CHECK(cdf_bounds_mixed(a, b, 1.4) == std::pair{0.0, 0.0});

    const auto half = cdf_bounds_mixed(DiscreteDist::bernoulli(0.5), DiscreteDist::bernoulli(0.5), -1.0);
    CHECK(half.first == doctest::Approx(0.0));
    CHECK(half.second == doctest::Approx(0.5));

    const auto fna = cdf_bounds_mixed(DiscreteDist::bernoulli(0.3), DiscreteDist::bernoulli(0.6), -1.0);
    CHECK(fna.first == doctest::Approx(0.3));
    CHECK(fna.second == doctest::Approx(0.6));
}

TEST_CASE("DiscreteDist validation") {
    Vector s(2), p(2);
    s << 0, 1;
    p << 0.5, 0.6;
    CHECK_THROWS(DiscreteDist(s, p));
    p << 0.0, 1.0;
    CHECK_THROWS(DiscreteDist(s, p));
    s << 1, 0;
    p << 0.5, 0.5;
    CHECK_THROWS(DiscreteDist(s, p));
}

TEST_CASE("fna_bounds") {
    Vector mu0(3), mu1(3);
    mu0 << 0.1, 0.4, 0.2;
    mu1 << 0.5, 0.4, 0.9;
    CHECK(fna_bounds(mu0, mu1).first == 0.0);
    const auto one = fna_bounds(Vector::Constant(1, 0.6), Vector::Constant(1, 0.3));
    CHECK(one.first == doctest::Approx(0.3));
    CHECK(one.second == doctest::Approx(0.6));
    CHECK_THROWS(fna_bounds(Vector::Constant(1, 1.2), Vector::Constant(1, 0.3)));
}

TEST_CASE("analytic_normal_bounds") {
    const auto at_tau = analytic_normal_bounds(1.3, 0.3, 0.7, 1.0);
    CHECK(at_tau.first == 0.0);
    CHECK(at_tau.second == 1.0);
    const auto pos = analytic_normal_bounds(0.0, 0.0, 1.0, 2.0);
    CHECK(std::abs(pos.first - 0.6827) < 1e-4);
    CHECK(pos.second == 1.0);
    const auto neg = analytic_normal_bounds(0.0, 0.0, 1.0, -2.0);
    CHECK(neg.first == 0.0);
    CHECK(std::abs(neg.second - 0.3173) < 1e-4);
    CHECK_THROWS(analytic_normal_bounds(0.0, 0.0, 0.0, 1.0));

    const auto q = analytic_normal_quantile_bounds(0.0, 0.0, 1.0, 0.6827);
    CHECK(std::abs(q.first - 2.0) < 1e-3);
}

TEST_CASE("coupling_oracle") {
    const auto pm = coupling_oracle(DiscreteDist::point_mass(1.0), DiscreteDist::point_mass(0.0), 1.0);
    CHECK(pm == std::pair{1.0, 1.0});
    const auto pm0 = coupling_oracle(DiscreteDist::point_mass(1.0), DiscreteDist::point_mass(0.0), 0.5);
    CHECK(pm0 == std::pair{0.0, 0.0});
    const auto bern = coupling_oracle(DiscreteDist::bernoulli(0.5), DiscreteDist::bernoulli(0.5), -1.0);
    CHECK(bern.first == doctest::Approx(0.0));
    CHECK(bern.second == doctest::Approx(0.5));
    Vector big = linspace(0, 4, 5);
    CHECK_THROWS(coupling_oracle(DiscreteDist(big, Vector::Constant(5, 0.2)), DiscreteDist::point_mass(0.0), 0.0));
}

TEST_CASE("coupling_oracle brackets and attains the mixed bounds") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> size(1, 4);
    std::uniform_int_distribution<int> atom(-3, 3);
    std::uniform_real_distribution<double> mass(0.1, 1.0);
    auto draw = [&] {
        std::vector<int> pts;
        const int m = size(rng);
        while (int(pts.size()) < m) {
            const int v = atom(rng);
            if (std::find(pts.begin(), pts.end(), v) == pts.end()) pts.push_back(v);
        }
        std::sort(pts.begin(), pts.end());
        Vector s(m), p(m);
        for (int k = 0; k < m; ++k) {
            s(k) = pts[std::size_t(k)];
            p(k) = mass(rng);
        }
        return DiscreteDist(s, p / p.sum());
    };
    for (int rep = 0; rep < 40; ++rep) {
        const DiscreteDist d1 = draw();
        const DiscreteDist d0 = draw();
        const double delta = atom(rng) + 0.5 * (rep % 2);
        const auto mk = cdf_bounds_mixed(d1, d0, delta);
        const auto ex = coupling_oracle(d1, d0, delta);
        CHECK(mk.first <= ex.first + 1e-9);
        CHECK(ex.first <= ex.second + 1e-12);
        CHECK(ex.second <= mk.second + 1e-9);
        CHECK(std::abs(mk.first - ex.first) <= 1e-9);
        CHECK(std::abs(mk.second - ex.second) <= 1e-9);
    }
}
