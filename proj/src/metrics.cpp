#include "cdte/bench.hpp"

#include <numeric>

namespace cdte {

EvalResult evaluate(const std::vector<BoundsPair>& predictions, const std::vector<TruthBounds>& truth,
                    const EvalGrid& grid) {
    if (predictions.empty()) throw std::invalid_argument("evaluate: empty evaluation set");
    if (predictions.size() != truth.size()) throw std::invalid_argument("evaluate: predictions do not cover the evaluation set");
    double crps_lo = 0.0;
    double crps_hi = 0.0;
    double w2_lo = 0.0;
    double w2_hi = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const BoundsPair& p = predictions[i];
        const bool is_cdf = p.kind() == BoundKind::cdf;
        const BoundsPair cdf = is_cdf ? p : quantile_to_cdf_bounds(p, grid.delta);
        const BoundsPair q = is_cdf ? cdf_to_quantile_bounds(p, grid.alpha) : p;
        crps_lo += crps_distance(cdf.lower(), truth[i].cdf.lower(), grid.delta);
        crps_hi += crps_distance(cdf.upper(), truth[i].cdf.upper(), grid.delta);
        w2_lo += w2_sq_distance(q.lower(), truth[i].quantile.lower(), grid.alpha);
        w2_hi += w2_sq_distance(q.upper(), truth[i].quantile.upper(), grid.alpha);
    }
    const double n = double(predictions.size());
    return {{std::sqrt(crps_lo / n), std::sqrt(w2_lo / n)}, {std::sqrt(crps_hi / n), std::sqrt(w2_hi / n)}};
}

std::string BenchLearner::name() const { return to_string(kind) + (oracle ? "_oracle" : ""); }

BenchLearner parse_bench_learner(const std::string& s) {
    const std::string suffix = "_oracle";
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
        const BenchLearner b{parse_learner(s.substr(0, s.size() - suffix.size())), true};
        if (b.kind == LearnerKind::iptw) throw std::invalid_argument("iptw has no oracle variant");
        return b;
    }
    return {parse_learner(s), false};
}

namespace {

std::vector<TruthBounds> truths(SynthKind kind, const Dataset& data, const EvalGrid& grid) {
    std::vector<TruthBounds> t;
    t.reserve(static_cast<std::size_t>(data.size()));
    for (Index i = 0; i < data.size(); ++i) t.push_back(truth_for_metrics(kind, data.x(i), grid));
    return t;
}

FittedLearner fit_bench_learner(const Dataset& train, const BenchLearner& learner, const LearnerConfig& config,
                                const NuisanceOptions& options, SynthKind kind) {
    LearnerConfig c = config;
    c.learner = learner.kind;
    if (learner.oracle) return fit_learner_oracle(train, c, std::make_shared<GroundTruth>(kind));
    return fit_learner(train, c, options);
}

EvalResult score(const FittedLearner& fitted, const Dataset& data, const std::vector<TruthBounds>& truth,
                 bool training_rows) {
    std::vector<BoundsPair> preds;
    preds.reserve(static_cast<std::size_t>(data.size()));
    for (Index i = 0; i < data.size(); ++i) {
        preds.push_back(training_rows ? fitted.predict_training_row(data, i).bounds : fitted.predict(data.x(i)).bounds);
    }
    return evaluate(preds, truth, fitted.config().grid);
}

}  // namespace

EvalResult run_learner(const Dataset& train, const Dataset& test, const BenchLearner& learner,
                       const LearnerConfig& config, const NuisanceOptions& options, SynthKind kind,
                       EvalResult* in_sample) {
    const FittedLearner fitted = fit_bench_learner(train, learner, config, options, kind);
    if (in_sample) *in_sample = score(fitted, train, truths(kind, train, config.grid), true);
    return score(fitted, test, truths(kind, test, config.grid), false);
}

MetricsReport run_benchmark(const BenchmarkConfig& config) {
    if (config.seeds.empty()) throw std::invalid_argument("benchmark: seed list is empty");
    if (config.n_train.empty()) throw std::invalid_argument("benchmark: n_train list is empty");
    if (config.learners.empty()) throw std::invalid_argument("benchmark: learner list is empty");
    MetricsReport report;
    for (std::uint64_t seed : config.seeds) {
        for (Index n : config.n_train) {
            const SynthSetting setting{config.kind, seed};
            const Dataset train = generate_synth(setting, n, 0);
            const Dataset test = generate_synth(setting, config.n_test, 1);
            LearnerConfig lc = config.learner;
            lc.grid = default_grid(train, config.n_delta, config.n_alpha, config.n_y);
            const std::vector<TruthBounds> truth_train = truths(config.kind, train, lc.grid);
            const std::vector<TruthBounds> truth_test = truths(config.kind, test, lc.grid);
            for (const BenchLearner& learner : config.learners) {
                for (BoundKind estimand : config.estimands) {
                    lc.estimand = estimand;
                    const FittedLearner fitted = fit_bench_learner(train, learner, lc, config.nuisance, config.kind);
                    const EvalResult in = score(fitted, train, truth_train, true);
                    const EvalResult out = score(fitted, test, truth_test, false);
                    report.rows.push_back({seed, n, learner.name(), Side::lower, estimand, in.lower.rcrps,
                                           out.lower.rcrps, in.lower.w2, out.lower.w2});
                    report.rows.push_back({seed, n, learner.name(), Side::upper, estimand, in.upper.rcrps,
                                           out.upper.rcrps, in.upper.w2, out.upper.w2});
                }
            }
        }
    }
    return report;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 paired points");
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const double n = double(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * double(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need >= 2 paired points");
    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);
    const double n = double(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace cdte
