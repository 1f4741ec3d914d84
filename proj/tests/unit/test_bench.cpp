#include "cdte/bench.hpp"
#include "cdte/normal.hpp"

#include <doctest.h>

#include <random>

using namespace cdte;

TEST_CASE("synthetic mechanism at fixed covariates") {
    Vector x(2);
    x << 2.0, 0.0;
    CHECK(std::abs(synth_propensity(x) - 0.8808) < 1e-4);
    x << 1.0, 0.0;
    CHECK(std::abs(synth_mu(1, x) - 0.1814) < 1e-4);
    CHECK(std::abs(synth_mu(0, x) + 2.8186) < 1e-4);
}

TEST_CASE("generate_synth moments") {
    const Index n = 100000;
    const Dataset d = generate_synth({SynthKind::normal, 42}, n);
    const Vector x1 = d.covariates().col(0);
    const double mean_x1 = x1.mean();
    CHECK(std::abs(mean_x1) < 3.0 * std::sqrt(4.0 / 12.0 / double(n)));
    double treated = 0.0;
    double pi_mean = 0.0;
    double pi_var = 0.0;
    for (Index i = 0; i < n; ++i) {
        treated += d.a(i);
        const double p = synth_propensity(d.x(i));
        pi_mean += p;
        pi_var += p * (1.0 - p);
    }
    CHECK(std::abs(treated - pi_mean) / double(n) < 3.0 * std::sqrt(pi_var) / double(n) + 3.0 * 0.5 / std::sqrt(double(n)));
    CHECK(std::abs(treated - pi_mean) / double(n) < 0.01);
}

TEST_CASE("generate_synth is deterministic and block-split") {
    const Dataset a = generate_synth({SynthKind::exponential, 9}, 700);
    const Dataset b = generate_synth({SynthKind::exponential, 9}, 700);
    const Dataset c = generate_synth({SynthKind::exponential, 9}, 300);
    CHECK(a.outcome() == b.outcome());
    CHECK(a.outcome().head(256) == c.outcome().head(256));
    CHECK(generate_synth({SynthKind::normal, 9}, 100, 1).outcome() != generate_synth({SynthKind::normal, 9}, 100, 0).outcome());
}

TEST_CASE("true_bounds for the normal setting") {
    EvalGrid g = EvalGrid::uniform(-6, 6, 50, 50, -10, 10, 200);
    Vector x(2);
    x << -0.5, 0.0;  // tau(x) = 2 x1 + 1 = 0
    Vector d(2);
    d << 0.0, 2.0;
    g.delta = d;
    const BoundsPair b = true_bounds(SynthKind::normal, x, g, BoundKind::cdf);
    CHECK(b.lower()(0) == 0.0);
    CHECK(b.upper()(0) == 1.0);
    CHECK(std::abs(b.lower()(1) - 0.6827) < 1e-4);
    CHECK(b.upper()(1) == 1.0);
    CHECK_THROWS(true_bounds(SynthKind::multimodal, x, g, BoundKind::quantile));
}

TEST_CASE("analytic and numeric ground truth agree") {
    const GroundTruth truth(SynthKind::normal);
    const Vector deltas = linspace(-8.0, 8.0, 50);
    EvalGrid g = EvalGrid::uniform(-8, 8, 50, 50, -10, 10, 200);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u1(-2.0, 2.0);
    std::normal_distribution<double> u2(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        Vector x(2);
        x << u1(rng), u2(rng);
        const BoundsPair a = true_bounds(SynthKind::normal, x, g, BoundKind::cdf);
        const BoundsPair n = numeric_cdf_bounds(truth, x, deltas);
        CHECK((a.lower() - n.lower()).cwiseAbs().maxCoeff() < 1e-3);
        CHECK((a.upper() - n.upper()).cwiseAbs().maxCoeff() < 1e-3);
    }
}

TEST_CASE("exponential ground truth is valid and encloses explicit couplings") {
    const GroundTruth truth(SynthKind::exponential);
    const Vector deltas = linspace(-10.0, 10.0, 50);
    EvalGrid g = EvalGrid::uniform(-10, 10, 50, 50, -10, 10, 200);
    const Index draws = 200000;
    for (const Vector& x : {Vector((Vector(2) << 0.7, -0.4).finished()), Vector((Vector(2) << -1.2, 0.9).finished())}) {
        const BoundsPair b = true_bounds(SynthKind::exponential, x, g, BoundKind::cdf);
        CHECK_NOTHROW(b.lower_cdf());
        CHECK_NOTHROW(b.upper_cdf());
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Vector mono = Vector::Zero(50);
        Vector anti = Vector::Zero(50);
        for (Index r = 0; r < draws; ++r) {
            const double u = unif(rng);
            const double y1 = truth.quantile(1, u, x);
            const double e_mono = y1 - truth.quantile(0, u, x);
            const double e_anti = y1 - truth.quantile(0, 1.0 - u, x);
            for (Index j = 0; j < 50; ++j) {
                mono(j) += e_mono <= deltas(j);
                anti(j) += e_anti <= deltas(j);
            }
        }
        for (const Vector* c : {&mono, &anti}) {
            for (Index j = 0; j < 50; ++j) {
                const double p = (*c)(j) / double(draws);
                const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / double(draws));
                CHECK(p >= b.lower()(j) - 3.0 * se - 1e-3);
                CHECK(p <= b.upper()(j) + 3.0 * se + 1e-3);
            }
        }
    }
}

TEST_CASE("evaluate") {
    const EvalGrid g = EvalGrid::uniform(-4, 4, 50, 50, -8, 8, 200);
    std::vector<TruthBounds> truth;
    std::vector<BoundsPair> same;
    std::vector<BoundsPair> same_q;
    std::vector<BoundsPair> shifted;
    for (double x1 : {-1.0, 0.0, 1.5}) {
        Vector x(2);
        x << x1, 0.2;
        truth.push_back(truth_for_metrics(SynthKind::normal, x, g));
        same.push_back(truth.back().cdf);
        same_q.push_back(truth.back().quantile);
        const Vector lo = (truth.back().cdf.lower().array() + 0.1).min(1.0).matrix();
        const Vector hi = (truth.back().cdf.upper().array() + 0.1).min(1.0).matrix();
        shifted.push_back(BoundsPair(BoundKind::cdf, g.delta, lo, hi));
    }
    const EvalResult zero = evaluate(same, truth, g);
    CHECK(zero.lower.rcrps == 0.0);
    CHECK(zero.upper.rcrps == 0.0);
    const EvalResult zero_q = evaluate(same_q, truth, g);
    CHECK(zero_q.lower.w2 == 0.0);
    CHECK(zero_q.upper.w2 == 0.0);
    const EvalResult off = evaluate(shifted, truth, g);
    CHECK(off.lower.rcrps <= 0.1 * std::sqrt(8.0) + 1e-12);
    CHECK(off.upper.rcrps <= 0.1 * std::sqrt(8.0) + 1e-12);
    CHECK_THROWS(evaluate({}, {}, g));
}

TEST_CASE("benchmark report shape and reproducibility") {
    BenchmarkConfig c;
    c.seeds = {1, 2, 3};
    c.n_train = {100, 1000};
    c.n_test = 100;
    const MetricsReport r = run_benchmark(c);
    CHECK(r.rows.size() == 2 * 3 * 4 * 2);
    for (const MetricsRow& row : r.rows) {
        CHECK(row.rcrps_in >= 0.0);
        CHECK(row.rcrps_out >= 0.0);
        CHECK(row.w2_in >= 0.0);
        CHECK(row.w2_out >= 0.0);
    }
    c.seeds = {1};
    c.n_train = {100};
    const MetricsReport a = run_benchmark(c);
    const MetricsReport b = run_benchmark(c);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].rcrps_out == b.rows[k].rcrps_out);
        CHECK(a.rows[k].w2_in == b.rows[k].w2_in);
    }
}

TEST_CASE("orthogonality probe bookkeeping") {
    ProbeOptions o;
    o.draws = 10000;
    const ProbeReport r = orthogonality_probe(SynthKind::normal, {0.4, 0.2}, 1.0, o);
    CHECK(r.t.front() == 0.0);
    CHECK(r.au_lower.front() == 0.0);
    CHECK(r.ca_upper.front() == 0.0);
    o.draws = 9999;
    CHECK_THROWS(orthogonality_probe(SynthKind::normal, {0.4, 0.2}, 1.0, o));
    o.draws = 10000;
    CHECK_THROWS(orthogonality_probe(SynthKind::normal, {0.2, 0.4}, 1.0, o));
}

TEST_CASE("rank statistics") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(loglog_slope({1, 2, 4}, {1, 4, 16}) == doctest::Approx(2.0));
}
