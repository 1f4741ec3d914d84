#pragma once

// First-stage nuisance estimation: propensity score, per-arm conditional
// outcome CDFs and densities, and the cross-fitting fold plan.

#include "cdte/dist.hpp"

#include <optional>
#include <vector>

namespace cdte {

/// Anything that can evaluate the nuisances at a covariate vector. Estimated
/// folds and synthetic ground truth both implement it.
class NuisanceSource {
public:
    virtual ~NuisanceSource() = default;

    /// P(A = 1 | x), unclipped.
    virtual double propensity(const Vector& x) const = 0;
    /// F_a(. | x) sampled on y_grid.
    virtual GridCdf outcome_cdf(int arm, const Vector& x, const Vector& y_grid) const = 0;
    /// Conditional outcome density of arm a at y.
    virtual double outcome_density(int arm, double y, const Vector& x) const = 0;
    /// Quantiles of arm a at the given levels; inverts outcome_cdf on y_grid
    /// unless overridden.
    virtual GridQuantile outcome_quantile(int arm, const Vector& x, const Vector& levels, const Vector& y_grid) const;
};

double clip_propensity(double p, double floor);

/// Logistic propensity model, intercept first.
class PropensityModel {
public:
    PropensityModel(Vector weights, double clip_floor, bool converged, int iterations,
                    std::vector<double> objective_trace);

    double raw(const Vector& x) const;
    double operator()(const Vector& x) const { return clip_propensity(raw(x), clip_floor_); }

    const Vector& weights() const { return weights_; }
    double clip_floor() const { return clip_floor_; }
    bool converged() const { return converged_; }
    int iterations() const { return iterations_; }
    const std::vector<double>& objective_trace() const { return trace_; }

private:
    Vector weights_;
    double clip_floor_;
    bool converged_;
    int iterations_;
    std::vector<double> trace_;
};

/// Ridge-penalized logistic regression by damped IRLS. Throws when either arm
/// is absent; non-convergence is reported through converged().
PropensityModel fit_propensity(const Dataset& data, double l2 = 1e-3, double clip_floor = 0.05);

enum class CdfMethod { gaussian_loc_scale, kernel_empirical };

struct CdfHyper {
    /// Per-dimension covariate bandwidth; Scott's rule when empty.
    std::optional<Vector> bandwidth;
    /// Multiplier applied to Scott's rule.
    double bandwidth_scale = 1.0;
};

/// Conditional outcome distribution of one treatment arm.
class CondCdfModel {
public:
    static CondCdfModel gaussian(int arm, Vector mean_weights, double scale);
    /// Kernel-weighted empirical CDF over the given rows. `row_weights`
    /// multiplies each row's kernel weight (all ones for the plain estimator).
    static CondCdfModel kernel(int arm, Matrix x, Vector y, Vector row_weights, Vector bandwidth);

    CdfMethod method() const { return method_; }
    int arm() const { return arm_; }

    double cdf(double y, const Vector& x) const;
    double density(double y, const Vector& x) const;
    GridCdf cdf_on_grid(const Vector& x, const Vector& y_grid) const;

    // gaussian_loc_scale
    double mean(const Vector& x) const;
    double scale() const { return scale_; }
    const Vector& mean_weights() const { return mean_weights_; }

    // kernel_empirical
    const Vector& bandwidth() const { return bandwidth_; }
    double density_step() const { return density_step_; }
    const Vector& row_weights() const { return row_weights_; }
    /// Normalized kernel weights of the (y-sorted) training rows at x.
    Vector kernel_weights(const Vector& x) const;

private:
    CondCdfModel() = default;

    CdfMethod method_ = CdfMethod::gaussian_loc_scale;
    int arm_ = 0;
    Vector mean_weights_;
    double scale_ = 1.0;
    Matrix train_x_;
    Vector train_y_;
    Vector row_weights_;
    Vector bandwidth_;
    double density_step_ = 0.0;
};

inline constexpr double kDensityFloor = 1e-4;

/// Scott's rule n^(-1/(d+4)) * per-dimension standard deviation.
Vector scott_bandwidth(const Matrix& x);

CondCdfModel fit_cond_cdf(const Dataset& data, int arm, CdfMethod method, const CdfHyper& hyper = {});

/// Row i belongs to fold (i mod K). K = 1 is the same-data mode in which the
/// single fold trains on every row.
struct CrossFitPlan {
    int k = 2;
    Eigen::VectorXi fold_of_row;

    std::vector<Index> rows_in(int fold) const;
    std::vector<Index> training_rows(int fold) const;
};

CrossFitPlan make_plan(Index n, int k);

struct NuisanceOptions {
    CdfMethod method = CdfMethod::kernel_empirical;
    CdfHyper hyper;
    double propensity_l2 = 1e-3;
    double clip_floor = 0.05;
};

/// Nuisances fit on one training subset.
class FoldNuisance final : public NuisanceSource {
public:
    FoldNuisance(PropensityModel propensity, CondCdfModel arm0, CondCdfModel arm1, std::vector<Index> training_rows);

    double propensity(const Vector& x) const override { return propensity_.raw(x); }
    GridCdf outcome_cdf(int arm, const Vector& x, const Vector& y_grid) const override;
    double outcome_density(int arm, double y, const Vector& x) const override;

    const PropensityModel& propensity_model() const { return propensity_; }
    const CondCdfModel& arm_model(int arm) const { return arm == 1 ? arm1_ : arm0_; }
    const std::vector<Index>& training_rows() const { return training_rows_; }

private:
    PropensityModel propensity_;
    CondCdfModel arm0_;
    CondCdfModel arm1_;
    std::vector<Index> training_rows_;
};

FoldNuisance fit_fold(const Dataset& data, const std::vector<Index>& rows, const NuisanceOptions& options);

/// Per-fold nuisances plus a fit on all rows for points outside the training set.
struct NuisanceFit {
    CrossFitPlan plan;
    std::vector<FoldNuisance> folds;
    FoldNuisance full;

    /// Out-of-fold nuisances for training row i.
    const FoldNuisance& for_row(Index i) const { return folds[static_cast<std::size_t>(plan.fold_of_row(i))]; }
};

NuisanceFit cross_fit(const Dataset& data, int k, const NuisanceOptions& options = {});

}  // namespace cdte
