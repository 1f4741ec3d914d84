#include "cdte/nuisance.hpp"

#include "cdte/normal.hpp"

#include <numeric>

namespace cdte {

GridQuantile NuisanceSource::outcome_quantile(int arm, const Vector& x, const Vector& levels,
                                              const Vector& y_grid) const {
    const GridCdf f = outcome_cdf(arm, x, y_grid);
    Vector q(levels.size());
    for (Index k = 0; k < levels.size(); ++k) q(k) = f.invert(levels(k)).value;
    return GridQuantile(levels, std::move(q));
}

double clip_propensity(double p, double floor) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("clip_propensity: p outside [0, 1]");
    if (!(floor > 0.0 && floor < 0.5)) throw std::invalid_argument("clip_propensity: floor outside (0, 0.5)");
    return std::min(std::max(p, floor), 1.0 - floor);
}

PropensityModel::PropensityModel(Vector weights, double clip_floor, bool converged, int iterations,
                                 std::vector<double> objective_trace)
    : weights_(std::move(weights)),
      clip_floor_(clip_floor),
      converged_(converged),
      iterations_(iterations),
      trace_(std::move(objective_trace)) {
    if (weights_.size() < 1 || !detail::all_finite(weights_)) {
        throw std::invalid_argument("PropensityModel: weights must be finite");
    }
    if (!(clip_floor_ > 0.0 && clip_floor_ < 0.5)) {
        throw std::invalid_argument("PropensityModel: clip floor outside (0, 0.5)");
    }
}

double PropensityModel::raw(const Vector& x) const {
    if (x.size() + 1 != weights_.size()) throw std::invalid_argument("propensity: covariate length mismatch");
    return logistic(weights_(0) + weights_.tail(x.size()).dot(x));
}

namespace {

Matrix with_intercept(const Matrix& x) {
    Matrix d(x.rows(), x.cols() + 1);
    d.col(0).setOnes();
    d.rightCols(x.cols()) = x;
    return d;
}

// Numerically stable log(1 + exp(z)).
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double logistic_objective(const Matrix& design, const Vector& target, const Vector& w, double l2) {
    const Vector eta = design * w;
    double obj = 0.0;
    for (Index i = 0; i < eta.size(); ++i) obj += softplus(eta(i)) - target(i) * eta(i);
    return obj + 0.5 * l2 * w.tail(w.size() - 1).squaredNorm();
}

}  // namespace

PropensityModel fit_propensity(const Dataset& data, double l2, double clip_floor) {
    if (!(l2 >= 0.0)) throw std::invalid_argument("fit_propensity: l2 must be nonnegative");
    if (data.count_arm(0) == 0 || data.count_arm(1) == 0) {
        throw std::invalid_argument("fit_propensity: both treatment arms must be present");
    }
    const Matrix design = with_intercept(data.covariates());
    const Vector target = data.treatment().cast<double>();
    const Index p = design.cols();
    Vector penalty = Vector::Constant(p, l2);
    penalty(0) = 0.0;

    Vector w = Vector::Zero(p);
    double obj = logistic_objective(design, target, w, l2);
    std::vector<double> trace{obj};
    bool converged = false;
    int iter = 0;
    for (; iter < 100; ++iter) {
        const Vector eta = design * w;
        Vector mu(eta.size());
        Vector s(eta.size());
        for (Index i = 0; i < eta.size(); ++i) {
            mu(i) = logistic(eta(i));
            s(i) = std::max(mu(i) * (1.0 - mu(i)), 1e-12);
        }
        const Vector grad = design.transpose() * (mu - target) + penalty.cwiseProduct(w);
        if (grad.norm() < 1e-8) {
            converged = true;
            break;
        }
        Matrix hess = design.transpose() * s.asDiagonal() * design;
        hess.diagonal() += penalty;
        hess.diagonal().array() += 1e-12;
        const Vector step = hess.ldlt().solve(grad);

        // Halve the Newton step until the objective does not increase.
        double scale = 1.0;
        Vector next = w - step;
        double next_obj = logistic_objective(design, target, next, l2);
        while (!(next_obj <= obj) && scale > 1e-10) {
            scale *= 0.5;
            next = w - scale * step;
            next_obj = logistic_objective(design, target, next, l2);
        }
        if (!(next_obj <= obj)) break;  // no descent possible; keep the best iterate
        w = next;
        obj = next_obj;
        trace.push_back(obj);
    }
    return PropensityModel(std::move(w), clip_floor, converged, iter, std::move(trace));
}

CondCdfModel CondCdfModel::gaussian(int arm, Vector mean_weights, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("CondCdfModel: scale must be positive");
    if (mean_weights.size() < 1 || !detail::all_finite(mean_weights)) {
        throw std::invalid_argument("CondCdfModel: mean weights must be finite");
    }
    CondCdfModel m;
    m.method_ = CdfMethod::gaussian_loc_scale;
    m.arm_ = arm;
    m.mean_weights_ = std::move(mean_weights);
    m.scale_ = scale;
    return m;
}

CondCdfModel CondCdfModel::kernel(int arm, Matrix x, Vector y, Vector row_weights, Vector bandwidth) {
    const Index n = y.size();
    if (n < 1 || x.rows() != n || row_weights.size() != n) {
        throw std::invalid_argument("CondCdfModel: kernel training data sizes disagree");
    }
    if (bandwidth.size() != x.cols() || !detail::all_finite(bandwidth) || (bandwidth.array() <= 0.0).any()) {
        throw std::invalid_argument("CondCdfModel: bandwidth must be positive");
    }
    if (!detail::all_finite(row_weights) || (row_weights.array() <= 0.0).any()) {
        throw std::invalid_argument("CondCdfModel: row weights must be positive");
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return y(a) < y(b); });

    CondCdfModel m;
    m.method_ = CdfMethod::kernel_empirical;
    m.arm_ = arm;
    m.train_x_.resize(n, x.cols());
    m.train_y_.resize(n);
    m.row_weights_.resize(n);
    for (Index r = 0; r < n; ++r) {
        const Index i = order[static_cast<std::size_t>(r)];
        m.train_x_.row(r) = x.row(i);
        m.train_y_(r) = y(i);
        m.row_weights_(r) = row_weights(i);
    }
    m.bandwidth_ = std::move(bandwidth);

    // Finite-difference step: a quarter of the Scott bandwidth of the outcome.
    const double mean = m.train_y_.mean();
    const double sd = n > 1 ? std::sqrt((m.train_y_.array() - mean).square().sum() / double(n - 1)) : 0.0;
    const double hy = std::pow(double(n), -0.2) * (sd > 0.0 ? sd : 1.0);
    m.density_step_ = 0.25 * hy;
    return m;
}

double CondCdfModel::mean(const Vector& x) const {
    if (method_ != CdfMethod::gaussian_loc_scale) throw std::invalid_argument("CondCdfModel: mean needs a gaussian model");
    if (x.size() + 1 != mean_weights_.size()) throw std::invalid_argument("CondCdfModel: covariate length mismatch");
    return mean_weights_(0) + mean_weights_.tail(x.size()).dot(x);
}

Vector CondCdfModel::kernel_weights(const Vector& x) const {
    if (x.size() != train_x_.cols()) throw std::invalid_argument("CondCdfModel: covariate length mismatch");
    const Index n = train_y_.size();
    Vector logw(n);
    for (Index i = 0; i < n; ++i) {
        const double q = ((train_x_.row(i).transpose() - x).array() / bandwidth_.array()).square().sum();
        logw(i) = -0.5 * q + std::log(row_weights_(i));
    }
    // Shifting by the maximum keeps far-away query points from underflowing.
    const double top = logw.maxCoeff();
    Vector w = (logw.array() - top).exp().matrix();
    return w / w.sum();
}

double CondCdfModel::cdf(double y, const Vector& x) const {
    if (method_ == CdfMethod::gaussian_loc_scale) return normal_cdf((y - mean(x)) / scale_);
    const Vector w = kernel_weights(x);
    double acc = 0.0;
    for (Index i = 0; i < w.size() && train_y_(i) <= y; ++i) acc += w(i);
    return std::min(acc, 1.0);
}

double CondCdfModel::density(double y, const Vector& x) const {
    if (method_ == CdfMethod::gaussian_loc_scale) return normal_pdf((y - mean(x)) / scale_) / scale_;
    const double s = density_step_;
    const double d = (cdf(y + s, x) - cdf(y - s, x)) / (2.0 * s);
    return std::max(d, kDensityFloor);
}

GridCdf CondCdfModel::cdf_on_grid(const Vector& x, const Vector& y_grid) const {
    Vector p(y_grid.size());
    if (method_ == CdfMethod::gaussian_loc_scale) {
        const double m = mean(x);
        for (Index j = 0; j < y_grid.size(); ++j) p(j) = normal_cdf((y_grid(j) - m) / scale_);
        return GridCdf(y_grid, std::move(p));
    }
    const Vector w = kernel_weights(x);
    double acc = 0.0;
    Index i = 0;
    for (Index j = 0; j < y_grid.size(); ++j) {
        while (i < w.size() && train_y_(i) <= y_grid(j)) acc += w(i++);
        p(j) = std::min(acc, 1.0);
    }
    return GridCdf(y_grid, std::move(p));
}

Vector scott_bandwidth(const Matrix& x) {
    const Index n = x.rows();
    if (n < 2) throw std::invalid_argument("scott_bandwidth: need at least two rows");
    const double factor = std::pow(double(n), -1.0 / double(x.cols() + 4));
    Vector h(x.cols());
    for (Index k = 0; k < x.cols(); ++k) {
        const double m = x.col(k).mean();
        const double sd = std::sqrt((x.col(k).array() - m).square().sum() / double(n - 1));
        h(k) = factor * (sd > 0.0 ? sd : 1.0);
    }
    return h;
}

CondCdfModel fit_cond_cdf(const Dataset& data, int arm, CdfMethod method, const CdfHyper& hyper) {
    if (arm != 0 && arm != 1) throw std::invalid_argument("fit_cond_cdf: arm must be 0 or 1");
    std::vector<Index> rows;
    for (Index i = 0; i < data.size(); ++i) {
        if (data.a(i) == arm) rows.push_back(i);
    }
    if (rows.size() < 10) {
        throw std::invalid_argument("fit_cond_cdf: arm " + std::to_string(arm) + " has fewer than 10 rows");
    }
    const Dataset sub = data.subset(rows);
    if (method == CdfMethod::gaussian_loc_scale) {
        const Matrix design = with_intercept(sub.covariates());
        const Vector beta = design.colPivHouseholderQr().solve(sub.outcome());
        const Vector resid = sub.outcome() - design * beta;
        const double dof = double(std::max<Index>(sub.size() - design.cols(), 1));
        return CondCdfModel::gaussian(arm, beta, std::sqrt(resid.squaredNorm() / dof));
    }
    Vector h;
    if (hyper.bandwidth) {
        h = *hyper.bandwidth;
    } else {
        if (!(hyper.bandwidth_scale > 0.0)) throw std::invalid_argument("fit_cond_cdf: bandwidth scale must be positive");
        h = hyper.bandwidth_scale * scott_bandwidth(sub.covariates());
    }
    return CondCdfModel::kernel(arm, sub.covariates(), sub.outcome(), Vector::Ones(sub.size()), std::move(h));
}

std::vector<Index> CrossFitPlan::rows_in(int fold) const {
    std::vector<Index> rows;
    for (Index i = 0; i < fold_of_row.size(); ++i) {
        if (fold_of_row(i) == fold) rows.push_back(i);
    }
    return rows;
}

std::vector<Index> CrossFitPlan::training_rows(int fold) const {
    std::vector<Index> rows;
    for (Index i = 0; i < fold_of_row.size(); ++i) {
        if (k == 1 || fold_of_row(i) != fold) rows.push_back(i);
    }
    return rows;
}

CrossFitPlan make_plan(Index n, int k) {
    if (k < 1) throw std::invalid_argument("cross_fit: fold count must be positive");
    if (Index(k) > n) throw std::invalid_argument("cross_fit: more folds than rows");
    CrossFitPlan plan;
    plan.k = k;
    plan.fold_of_row.resize(n);
    for (Index i = 0; i < n; ++i) plan.fold_of_row(i) = int(i % k);
    return plan;
}

FoldNuisance::FoldNuisance(PropensityModel propensity, CondCdfModel arm0, CondCdfModel arm1,
                           std::vector<Index> training_rows)
    : propensity_(std::move(propensity)),
      arm0_(std::move(arm0)),
      arm1_(std::move(arm1)),
      training_rows_(std::move(training_rows)) {}

GridCdf FoldNuisance::outcome_cdf(int arm, const Vector& x, const Vector& y_grid) const {
    return arm_model(arm).cdf_on_grid(x, y_grid);
}

double FoldNuisance::outcome_density(int arm, double y, const Vector& x) const {
    return arm_model(arm).density(y, x);
}

FoldNuisance fit_fold(const Dataset& data, const std::vector<Index>& rows, const NuisanceOptions& options) {
    const Dataset train = data.subset(rows);
    PropensityModel prop = fit_propensity(train, options.propensity_l2, options.clip_floor);
    CondCdfModel m0 = fit_cond_cdf(train, 0, options.method, options.hyper);
    CondCdfModel m1 = fit_cond_cdf(train, 1, options.method, options.hyper);
    return FoldNuisance(std::move(prop), std::move(m0), std::move(m1), rows);
}

NuisanceFit cross_fit(const Dataset& data, int k, const NuisanceOptions& options) {
    CrossFitPlan plan = make_plan(data.size(), k);
    std::vector<Index> all(static_cast<std::size_t>(data.size()));
    std::iota(all.begin(), all.end(), Index{0});

    std::vector<FoldNuisance> folds;
    for (int f = 0; f < k; ++f) {
        const std::vector<Index> rows = plan.training_rows(f);
        bool has0 = false;
        bool has1 = false;
        for (Index i : rows) (data.a(i) == 1 ? has1 : has0) = true;
        if (!has0 || !has1) {
            throw std::invalid_argument("cross_fit: training complement of fold " + std::to_string(f) +
                                        " is missing a treatment arm");
        }
        folds.push_back(fit_fold(data, rows, options));
    }
    FoldNuisance full = k == 1 ? folds.front() : fit_fold(data, all, options);
    return NuisanceFit{std::move(plan), std::move(folds), std::move(full)};
}

}  // namespace cdte
