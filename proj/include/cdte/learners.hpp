#pragma once

// Plug-in, IPTW, CA and AU learners for Makarov bounds: pseudo-outcome
// surfaces, the per-grid-point ridge second stage and bound prediction.

#include "cdte/makarov.hpp"
#include "cdte/nuisance.hpp"

#include <functional>
#include <memory>
#include <string>

namespace cdte {

enum class LearnerKind { plugin, iptw, ca, au };
enum class Side { lower, upper };

std::string to_string(LearnerKind k);
std::string to_string(Side s);
std::string to_string(BoundKind k);
LearnerKind parse_learner(const std::string& s);
BoundKind parse_estimand(const std::string& s);

/// The AU gamma defaults: 0.25 for the CRPS (cdf) target, 0.01 for W2 (quantile).
double default_gamma(BoundKind estimand);

struct LearnerConfig {
    LearnerKind learner = LearnerKind::au;
    BoundKind estimand = BoundKind::cdf;
    std::optional<double> gamma;  // estimand default when unset
    int k_folds = 5;
    EvalGrid grid;
    double clip_floor = 0.05;
    double ridge = 1.0;
    int degree = 2;

    /// gamma actually applied: 0 for ca, configured/default for au.
    double effective_gamma() const;
    void validate() const;
};

/// Delta range [-1.1 D, 1.1 D] with D the largest cross-arm outcome gap, and a
/// y grid over the outcome range padded by 10%.
EvalGrid default_grid(const Dataset& data, Index n_delta = 50, Index n_alpha = 50, Index n_y = 200);

/// Correction term of the CDF bound for one observation, given the optimizer
/// y* of the convolution and the nuisance values there:
/// active * [a/pi (1{y <= y*} - f1) - (1-a)/(1-pi) (1{y <= y* - delta} - f0)].
double correction_cdf_value(int a, double y, double pi, double ystar, double delta, double f1_at, double f0_at,
                            bool active);

/// Correction term of the quantile bound for one observation: u1/u0 are the
/// levels at which q1/q0 are evaluated, dens1/dens0 the densities there.
double correction_quantile_value(int a, double y, double pi, double u1, double q1_at, double dens1, double u0,
                                 double q0_at, double dens0, double density_floor = kDensityFloor);

/// Plug-in bounds and correction terms of one row over the grid.
struct RowTerms {
    Vector plugin_lower;
    Vector plugin_upper;
    Vector corr_lower;
    Vector corr_upper;
};

/// Per-row terms for estimand `kind`; propensities are clipped at clip_floor.
RowTerms row_terms(const Vector& x, int a, double y, const NuisanceSource& eta, const EvalGrid& grid,
                   BoundKind kind, double clip_floor);

/// Correction term at a single grid point (delta for cdf, alpha for quantile).
double correction_term_cdf(const Vector& x, int a, double y, double delta, const NuisanceSource& eta,
                           const EvalGrid& grid, Side side, double clip_floor);
double correction_term_quantile(const Vector& x, int a, double y, double alpha, const NuisanceSource& eta,
                                const EvalGrid& grid, Side side, double clip_floor);

/// Plug-in Makarov bounds from the nuisances at x.
BoundsPair plugin_bounds(const NuisanceSource& eta, const Vector& x, const EvalGrid& grid, BoundKind kind);

/// IPTW learner nuisances: every kernel CDF is refit with each row weighted by
/// 1 / clip(pi_a(x_i)) using the propensity of the same fold.
NuisanceFit iptw_reweight(const Dataset& data, const NuisanceFit& fit, double clip_floor);

struct PseudoSurface {
    BoundKind kind;
    Side side;
    Vector grid;
    Matrix values;  // rows x grid points
};

struct SurfacePair {
    PseudoSurface lower;
    PseudoSurface upper;
};

using SourceForRow = std::function<const NuisanceSource&(Index)>;

/// Plug-in value plus gamma times the correction term, each row using the
/// nuisances returned for it.
SurfacePair pseudo_surface(const Dataset& data, const SourceForRow& source, const LearnerConfig& config);
SurfacePair pseudo_surface(const Dataset& data, const NuisanceFit& fit, const LearnerConfig& config);
SurfacePair pseudo_surface(const Dataset& data, const NuisanceSource& oracle, const LearnerConfig& config);

/// Standardized polynomial basis: 1, z, and all z_i z_j (i <= j) for degree 2.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(Vector center, Vector scale, int degree);
    static FeatureMap fit(const Matrix& x, int degree);

    Index size() const;
    int degree() const { return degree_; }
    const Vector& center() const { return center_; }
    const Vector& scale() const { return scale_; }
    Vector operator()(const Vector& x) const;
    Matrix design(const Matrix& x) const;

private:
    Vector center_;
    Vector scale_;
    int degree_ = 2;
};

/// Per-grid-point ridge regressions sharing one feature basis.
class WorkingModel {
public:
    WorkingModel(BoundKind kind, Side side, Vector grid, FeatureMap features, Matrix coef);

    BoundKind kind() const { return kind_; }
    Side side() const { return side_; }
    const Vector& grid() const { return grid_; }
    const FeatureMap& features() const { return features_; }
    const Matrix& coef() const { return coef_; }

    Vector predict_raw(const Vector& x) const;
    /// Isotonic projection, plus clipping to [0, 1] for cdf models.
    Vector predict(const Vector& x) const;

private:
    BoundKind kind_;
    Side side_;
    Vector grid_;
    FeatureMap features_;
    Matrix coef_;  // features x grid points
};

WorkingModel fit_second_stage(const PseudoSurface& surface, const Matrix& covariates, double ridge = 1.0,
                              int degree = 2);

/// Quadrature weights of the grid for the surface's loss (crps or w2).
Vector loss_weights(const PseudoSurface& surface);
/// Mean over rows of the weighted squared error of the unprojected fit.
double empirical_loss(const WorkingModel& model, const PseudoSurface& surface, const Matrix& covariates);
/// Mean squared error of each grid column.
Vector column_losses(const WorkingModel& model, const PseudoSurface& surface, const Matrix& covariates);

struct BoundsPrediction {
    BoundsPair bounds;
    int crossings;
};

/// Lower and upper raw predictions are swapped pointwise where they cross.
BoundsPrediction combine_bounds(BoundKind kind, const Vector& grid, Vector lower, Vector upper);
BoundsPrediction predict_bounds(const WorkingModel& lower, const WorkingModel& upper, const Vector& x);

/// A fitted learner of any kind, able to predict bounds at new points.
class FittedLearner {
public:
    LearnerKind kind() const { return config_.learner; }
    const LearnerConfig& config() const { return config_; }

    /// Out-of-sample prediction.
    BoundsPrediction predict(const Vector& x) const;
    /// Prediction for training row i (out-of-fold nuisances for plug-in/iptw).
    BoundsPrediction predict_training_row(const Dataset& train, Index i) const;

    const std::optional<WorkingModel>& lower_model() const { return lower_; }
    const std::optional<WorkingModel>& upper_model() const { return upper_; }
    const NuisanceFit* nuisances() const { return fit_.get(); }

    friend FittedLearner fit_learner(const Dataset&, const LearnerConfig&, const NuisanceOptions&);
    friend FittedLearner fit_learner_oracle(const Dataset&, const LearnerConfig&,
                                            std::shared_ptr<const NuisanceSource>);

private:
    LearnerConfig config_;
    std::shared_ptr<const NuisanceFit> fit_;
    std::shared_ptr<const NuisanceSource> oracle_;
    std::optional<WorkingModel> lower_;
    std::optional<WorkingModel> upper_;
};

/// Cross-fit the nuisances and run the configured learner.
FittedLearner fit_learner(const Dataset& data, const LearnerConfig& config, const NuisanceOptions& options = {});
/// Same pipeline with known nuisances in place of the first stage.
FittedLearner fit_learner_oracle(const Dataset& data, const LearnerConfig& config,
                                 std::shared_ptr<const NuisanceSource> oracle);

}  // namespace cdte
