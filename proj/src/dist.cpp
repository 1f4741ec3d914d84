#include "cdte/dist.hpp"

namespace cdte {

Vector linspace(double lo, double hi, Index n) {
    if (n < 2 || !(hi > lo)) throw std::invalid_argument("linspace: need n >= 2 and hi > lo");
    Vector v(n);
    const double step = (hi - lo) / double(n - 1);
    for (Index i = 0; i < n; ++i) v(i) = lo + step * double(i);
    v(n - 1) = hi;
    return v;
}

Vector midpoint_levels(Index n) {
    if (n < 2) throw std::invalid_argument("midpoint_levels: need n >= 2");
    Vector v(n);
    for (Index k = 0; k < n; ++k) v(k) = (double(k) + 0.5) / double(n);
    return v;
}

Dataset::Dataset(Matrix covariates, Eigen::VectorXi treatment, Vector outcome)
    : covariates_(std::move(covariates)), treatment_(std::move(treatment)), outcome_(std::move(outcome)) {
    validate();
}

Dataset::Dataset(Matrix covariates, Eigen::VectorXi treatment, Vector outcome, Eigen::VectorXi folds,
                 int n_folds)
    : covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      folds_(std::move(folds)),
      n_folds_(n_folds) {
    validate();
}

void Dataset::validate() const {
    const Index n = outcome_.size();
    if (covariates_.rows() != n || treatment_.size() != n) {
        throw std::invalid_argument("Dataset: covariates, treatment and outcome row counts differ");
    }
    if (covariates_.cols() < 1) throw std::invalid_argument("Dataset: need at least one covariate");
    for (Index i = 0; i < n; ++i) {
        if (treatment_(i) != 0 && treatment_(i) != 1) {
            throw std::invalid_argument("Dataset: treatment must be 0 or 1 (row " + std::to_string(i) + ")");
        }
    }
    if (!detail::all_finite(covariates_.reshaped()) || !detail::all_finite(outcome_)) {
        throw std::invalid_argument("Dataset: non-finite covariate or outcome");
    }
    if (folds_) {
        if (folds_->size() != n) throw std::invalid_argument("Dataset: fold vector length mismatch");
        if (n_folds_ < 1) throw std::invalid_argument("Dataset: fold count must be positive");
        for (Index i = 0; i < n; ++i) {
            if ((*folds_)(i) < 0 || (*folds_)(i) >= n_folds_) {
                throw std::invalid_argument("Dataset: fold index out of range (row " + std::to_string(i) + ")");
            }
        }
    }
}

Index Dataset::count_arm(int arm) const { return (treatment_.array() == arm).count(); }

Dataset Dataset::subset(const std::vector<Index>& rows) const {
    const Index m = static_cast<Index>(rows.size());
    Matrix x(m, dim());
    Eigen::VectorXi a(m);
    Vector y(m);
    for (Index r = 0; r < m; ++r) {
        const Index i = rows[static_cast<std::size_t>(r)];
        x.row(r) = covariates_.row(i);
        a(r) = treatment_(i);
        y(r) = outcome_(i);
    }
    return Dataset(std::move(x), std::move(a), std::move(y));
}

void EvalGrid::validate() const {
    auto check = [](const Vector& g, const char* name) {
        if (g.size() < 2 || !detail::all_finite(g) || !detail::strictly_increasing(g)) {
            throw std::invalid_argument(std::string("EvalGrid: ") + name +
                                        " must have >= 2 strictly increasing points");
        }
    };
    check(delta, "delta grid");
    check(alpha, "alpha grid");
    check(y, "y grid");
    check(levels, "level grid");
    if (!(alpha(0) > 0.0) || !(alpha(alpha.size() - 1) < 1.0)) {
        throw std::invalid_argument("EvalGrid: alpha grid must lie inside (0, 1)");
    }
    if (!(levels(0) > 0.0) || !(levels(levels.size() - 1) < 1.0)) {
        throw std::invalid_argument("EvalGrid: level grid must lie inside (0, 1)");
    }
}

EvalGrid EvalGrid::uniform(double delta_lo, double delta_hi, Index n_delta, Index n_alpha, double y_lo,
                           double y_hi, Index n_y) {
    EvalGrid g{linspace(delta_lo, delta_hi, n_delta), midpoint_levels(n_alpha), linspace(y_lo, y_hi, n_y),
               midpoint_levels(n_y)};
    g.validate();
    return g;
}

}  // namespace cdte
