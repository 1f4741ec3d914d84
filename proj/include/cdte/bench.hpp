#pragma once

// Synthetic benchmark: data generation, ground-truth nuisances and bounds,
// evaluation metrics, and verification oracles.

#include "cdte/learners.hpp"

#include <cstdint>

namespace cdte {

enum class SynthKind { normal, multimodal, exponential };

std::string to_string(SynthKind k);
SynthKind parse_synth_kind(const std::string& s);

struct SynthSetting {
    SynthKind kind = SynthKind::normal;
    std::uint64_t seed = 0;
};

/// Rows are drawn in blocks, each block from its own generator seeded from
/// (seed, stream, block), so the output does not depend on evaluation order.
Dataset generate_synth(const SynthSetting& setting, Index n, std::uint64_t stream = 0);

double synth_propensity(const Vector& x);
/// Location mu_a(x) shared by all three outcome laws.
double synth_mu(int arm, const Vector& x);

/// Exact nuisances of a synthetic setting.
class GroundTruth final : public NuisanceSource {
public:
    explicit GroundTruth(SynthKind kind) : kind_(kind) {}

    SynthKind kind() const { return kind_; }

    double cdf(int arm, double y, const Vector& x) const;
    double density(int arm, double y, const Vector& x) const;
    double quantile(int arm, double u, const Vector& x) const;
    double mean(int arm, const Vector& x) const;
    double sd(int arm, const Vector& x) const;

    double propensity(const Vector& x) const override { return synth_propensity(x); }
    GridCdf outcome_cdf(int arm, const Vector& x, const Vector& y_grid) const override;
    double outcome_density(int arm, double y, const Vector& x) const override { return density(arm, y, x); }
    GridQuantile outcome_quantile(int arm, const Vector& x, const Vector& levels, const Vector& y_grid) const override;

private:
    SynthKind kind_;
};

/// True Makarov bounds at x: analytic for the normal setting, otherwise
/// computed from the exact marginals on a 2001-point grid over +-8 sds.
/// Quantile bounds are unavailable for the multimodal setting.
BoundsPair true_bounds(SynthKind kind, const Vector& x, const EvalGrid& grid, BoundKind estimand);

/// The numeric route regardless of setting (used to cross-check the analytic one).
BoundsPair numeric_cdf_bounds(const GroundTruth& truth, const Vector& x, const Vector& deltas);

/// CDF and quantile bounds used as evaluation targets. For the multimodal
/// setting the quantile bounds are obtained by inverting the CDF bounds.
struct TruthBounds {
    BoundsPair cdf;
    BoundsPair quantile;
};

TruthBounds truth_for_metrics(SynthKind kind, const Vector& x, const EvalGrid& grid);

/// Quantiles at `levels` of the CDFs given by the two sides of a cdf BoundsPair.
BoundsPair cdf_to_quantile_bounds(const BoundsPair& cdf, const Vector& levels);
/// CDF values on `deltas` of the quantile functions of a quantile BoundsPair.
BoundsPair quantile_to_cdf_bounds(const BoundsPair& quantile, const Vector& deltas);

struct SideMetrics {
    double rcrps = 0.0;
    double w2 = 0.0;
};

struct EvalResult {
    SideMetrics lower;
    SideMetrics upper;
};

/// rCRPS = sqrt(mean crps_distance), W2 = sqrt(mean w2_sq_distance), per side.
EvalResult evaluate(const std::vector<BoundsPair>& predictions, const std::vector<TruthBounds>& truth,
                    const EvalGrid& grid);

struct MetricsRow {
    std::uint64_t seed;
    Index n_train;
    std::string learner;
    Side side;
    BoundKind estimand;
    double rcrps_in;
    double rcrps_out;
    double w2_in;
    double w2_out;
};

struct MetricsReport {
    std::vector<MetricsRow> rows;
};

/// A learner entry of a benchmark run; `oracle` swaps the first stage for the
/// true nuisances.
struct BenchLearner {
    LearnerKind kind;
    bool oracle = false;

    std::string name() const;
};

BenchLearner parse_bench_learner(const std::string& s);

struct BenchmarkConfig {
    SynthKind kind = SynthKind::normal;
    std::vector<std::uint64_t> seeds{0};
    std::vector<Index> n_train{1000};
    Index n_test = 1000;
    std::vector<BenchLearner> learners{{LearnerKind::plugin}, {LearnerKind::iptw}, {LearnerKind::ca}, {LearnerKind::au}};
    std::vector<BoundKind> estimands{BoundKind::cdf};
    LearnerConfig learner;  // grid is derived per run from the training data
    NuisanceOptions nuisance;
    Index n_delta = 50;
    Index n_alpha = 50;
    Index n_y = 200;
};

/// Metrics of one learner on one train/test pair.
EvalResult run_learner(const Dataset& train, const Dataset& test, const BenchLearner& learner,
                       const LearnerConfig& config, const NuisanceOptions& options, SynthKind kind,
                       EvalResult* in_sample = nullptr);

/// Rows ordered by seed, n, learner, estimand, side.
MetricsReport run_benchmark(const BenchmarkConfig& config);

/// Exact min and max of P(Y1 - Y0 <= delta) over couplings of two discrete
/// marginals with at most 4 atoms each, by enumerating basic feasible solutions.
std::pair<double, double> coupling_oracle(const DiscreteDist& d1, const DiscreteDist& d0, double delta);

/// Nuisance distortion applied along eta_t = eta + t (eta~ - eta).
struct Perturbation {
    double mean_shift1 = 0.5;
    double mean_shift0 = 0.0;
    double logit_shift = 0.5;
};

struct ProbeReport {
    std::vector<double> t;  // first entry is t = 0
    std::vector<double> au_lower;
    std::vector<double> au_upper;
    std::vector<double> ca_lower;
    std::vector<double> ca_upper;
    double slope_au_lower = 0.0;
    double slope_au_upper = 0.0;
    double slope_ca_lower = 0.0;
    double slope_ca_upper = 0.0;
};

struct ProbeOptions {
    Index draws = 100000;
    std::uint64_t seed = 1;
    double clip_floor = 1e-6;
    Perturbation perturbation;
    Index n_delta = 50;
};

/// Risk perturbation |R(t) - R(0)| of the AU (given gamma) and CA pseudo-outcome
/// risks on the normal setting, with log-log slopes over t_values. R(t) is the
/// part of the population CRPS risk that is linear in the candidate model,
/// -2 E int P_t(delta, X) d delta, where P_t is the conditional mean of the
/// pseudo-outcome under the perturbed nuisances.
ProbeReport orthogonality_probe(SynthKind kind, const std::vector<double>& t_values, double gamma,
                                const ProbeOptions& options = {});

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cdte
