#pragma once

// Grid representations of distribution functions, distances between them and
// the isotonic projections that restore validity after unconstrained fits.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdte {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

namespace detail {

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& v) {
    for (Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(static_cast<double>(v(i)))) return false;
    }
    return true;
}

template <typename Derived>
bool strictly_increasing(const Eigen::DenseBase<Derived>& v) {
    for (Index i = 1; i < v.size(); ++i) {
        if (!(v(i) > v(i - 1))) return false;
    }
    return true;
}

template <typename Derived>
bool nondecreasing(const Eigen::DenseBase<Derived>& v) {
    for (Index i = 1; i < v.size(); ++i) {
        if (v(i) < v(i - 1)) return false;
    }
    return true;
}

// Piecewise-linear interpolation of (knots, values) at t, flat outside the knots.
template <typename Scalar, typename DerivedK, typename DerivedV>
Scalar interpolate(const Eigen::DenseBase<DerivedK>& knots, const Eigen::DenseBase<DerivedV>& values,
                   Scalar t) {
    const Index n = knots.size();
    if (!(t > knots(0))) return values(0);
    if (!(t < knots(n - 1))) return values(n - 1);
    Index lo = 0;
    Index hi = n - 1;
    while (hi - lo > 1) {
        const Index mid = (lo + hi) / 2;
        if (knots(mid) <= t) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const Scalar span = knots(hi) - knots(lo);
    const Scalar w = (t - knots(lo)) / span;
    return values(lo) + w * (values(hi) - values(lo));
}

}  // namespace detail

/// Result of a generalized inverse; `saturated` is set when the requested
/// level exceeds the largest probability on the grid.
template <typename Scalar>
struct InverseResult {
    Scalar value;
    bool saturated;
};

/// Monotone CDF sampled on a strictly increasing grid, evaluated by linear
/// interpolation and held flat outside the grid.
template <typename Scalar>
class GridCdfT {
public:
    using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    GridCdfT(VectorType grid, VectorType probs) : grid_(std::move(grid)), probs_(std::move(probs)) {
        if (grid_.size() < 2 || grid_.size() != probs_.size()) {
            throw std::invalid_argument("GridCdf: grid and probs must have equal length >= 2");
        }
        if (!detail::all_finite(grid_) || !detail::strictly_increasing(grid_)) {
            throw std::invalid_argument("GridCdf: grid must be finite and strictly increasing");
        }
        if (!detail::all_finite(probs_) || !detail::nondecreasing(probs_) || probs_(0) < Scalar(0) ||
            probs_(probs_.size() - 1) > Scalar(1)) {
            throw std::invalid_argument("GridCdf: probs must be nondecreasing within [0, 1]");
        }
    }

    const VectorType& grid() const { return grid_; }
    const VectorType& probs() const { return probs_; }
    Index size() const { return grid_.size(); }

    Scalar operator()(Scalar y) const { return detail::interpolate(grid_, probs_, y); }

    InverseResult<Scalar> invert(Scalar alpha) const {
        const Index n = grid_.size();
        if (alpha > probs_(n - 1)) return {grid_(n - 1), true};
        const Scalar* first = probs_.data();
        const Index k = std::lower_bound(first, first + n, alpha) - first;
        if (k == 0) return {grid_(0), false};
        const Scalar rise = probs_(k) - probs_(k - 1);
        const Scalar w = (alpha - probs_(k - 1)) / rise;
        return {grid_(k - 1) + w * (grid_(k) - grid_(k - 1)), false};
    }

private:
    VectorType grid_;
    VectorType probs_;
};

/// Nondecreasing quantile function sampled on strictly increasing levels in (0, 1).
template <typename Scalar>
class GridQuantileT {
public:
    using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    GridQuantileT(VectorType levels, VectorType values)
        : levels_(std::move(levels)), values_(std::move(values)) {
        if (levels_.size() < 2 || levels_.size() != values_.size()) {
            throw std::invalid_argument("GridQuantile: levels and values must have equal length >= 2");
        }
        if (!detail::all_finite(levels_) || !detail::strictly_increasing(levels_) ||
            !(levels_(0) > Scalar(0)) || !(levels_(levels_.size() - 1) < Scalar(1))) {
            throw std::invalid_argument("GridQuantile: levels must be strictly increasing inside (0, 1)");
        }
        if (!detail::all_finite(values_) || !detail::nondecreasing(values_)) {
            throw std::invalid_argument("GridQuantile: values must be finite and nondecreasing");
        }
    }

    const VectorType& levels() const { return levels_; }
    const VectorType& values() const { return values_; }
    Index size() const { return levels_.size(); }

    Scalar operator()(Scalar u) const { return detail::interpolate(levels_, values_, u); }

private:
    VectorType levels_;
    VectorType values_;
};

using GridCdf = GridCdfT<double>;
using GridQuantile = GridQuantileT<double>;

inline double eval_cdf(const GridCdf& cdf, double y) { return cdf(y); }
inline InverseResult<double> invert_cdf(const GridCdf& cdf, double alpha) { return cdf.invert(alpha); }

/// Rectangle-rule cell widths: each grid point owns the cell bounded by the
/// midpoints to its neighbours, and the outer cells extend to [lo, hi].
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> cell_widths(const Eigen::MatrixBase<Derived>& grid,
                                                                        typename Derived::Scalar lo,
                                                                        typename Derived::Scalar hi) {
    using Scalar = typename Derived::Scalar;
    const Index n = grid.size();
    if (n < 2 || !detail::strictly_increasing(grid)) {
        throw std::invalid_argument("invalid grid: need >= 2 strictly increasing points");
    }
    if (lo > grid(0) || hi < grid(n - 1)) {
        throw std::invalid_argument("invalid grid: points outside the integration domain");
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w(n);
    Scalar left = lo;
    for (Index j = 0; j < n; ++j) {
        const Scalar right = (j + 1 < n) ? Scalar(0.5) * (grid(j) + grid(j + 1)) : hi;
        w(j) = right - left;
        left = right;
    }
    return w;
}

/// Quadrature weights for distances over the delta grid (domain = grid span).
template <typename Derived>
auto crps_weights(const Eigen::MatrixBase<Derived>& delta_grid) {
    if (delta_grid.size() < 2) throw std::invalid_argument("invalid grid: need >= 2 points");
    return cell_widths(delta_grid, delta_grid(0), delta_grid(delta_grid.size() - 1));
}

/// Quadrature weights for distances over levels (domain = [0, 1]).
template <typename Derived>
auto w2_weights(const Eigen::MatrixBase<Derived>& alpha_grid) {
    using Scalar = typename Derived::Scalar;
    return cell_widths(alpha_grid, Scalar(0), Scalar(1));
}

/// Integrated squared difference of two functions sampled on the delta grid.
template <typename DerivedF, typename DerivedG, typename DerivedD>
typename DerivedD::Scalar crps_distance(const Eigen::MatrixBase<DerivedF>& f, const Eigen::MatrixBase<DerivedG>& g,
                                        const Eigen::MatrixBase<DerivedD>& delta_grid) {
    if (f.size() != delta_grid.size() || g.size() != delta_grid.size()) {
        throw std::invalid_argument("crps_distance: size mismatch with delta grid");
    }
    const auto w = crps_weights(delta_grid);
    return (w.array() * (f - g).array().square()).sum();
}

/// Squared Wasserstein-2 distance between two quantile functions sampled on
/// the alpha grid.
template <typename DerivedF, typename DerivedG, typename DerivedA>
typename DerivedA::Scalar w2_sq_distance(const Eigen::MatrixBase<DerivedF>& q1, const Eigen::MatrixBase<DerivedG>& q2,
                                         const Eigen::MatrixBase<DerivedA>& alpha_grid) {
    if (q1.size() != alpha_grid.size() || q2.size() != alpha_grid.size()) {
        throw std::invalid_argument("w2_sq_distance: size mismatch with alpha grid");
    }
    const auto w = w2_weights(alpha_grid);
    return (w.array() * (q1 - q2).array().square()).sum();
}

/// Pool-adjacent-violators: the L2 projection of `raw` onto nondecreasing sequences.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> isotonic_fit(const Eigen::MatrixBase<Derived>& raw) {
    using Scalar = typename Derived::Scalar;
    if (!detail::all_finite(raw)) throw std::invalid_argument("isotonic_fit: non-finite input");
    const Index n = raw.size();
    std::vector<Scalar> sums;
    std::vector<Index> counts;
    sums.reserve(static_cast<std::size_t>(n));
    counts.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        sums.push_back(raw(i));
        counts.push_back(1);
        while (sums.size() > 1) {
            const std::size_t b = sums.size() - 1;
            const Scalar prev_mean = sums[b - 1] / Scalar(counts[b - 1]);
            const Scalar cur_mean = sums[b] / Scalar(counts[b]);
            if (!(prev_mean > cur_mean)) break;
            sums[b - 1] += sums[b];
            counts[b - 1] += counts[b];
            sums.pop_back();
            counts.pop_back();
        }
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
    Index pos = 0;
    for (std::size_t b = 0; b < sums.size(); ++b) {
        const Scalar mean = counts[b] == 1 ? sums[b] : sums[b] / Scalar(counts[b]);
        out.segment(pos, counts[b]).setConstant(mean);
        pos += counts[b];
    }
    return out;
}

/// Isotonic projection followed by clipping to [0, 1].
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> project_cdf_values(const Eigen::MatrixBase<Derived>& raw) {
    using Scalar = typename Derived::Scalar;
    return isotonic_fit(raw).cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
}

template <typename Derived>
GridCdfT<typename Derived::Scalar> project_to_cdf(const Eigen::MatrixBase<Derived>& grid, const Vector& raw) {
    if (grid.size() != raw.size()) throw std::invalid_argument("project_to_cdf: size mismatch");
    return GridCdfT<typename Derived::Scalar>(grid, project_cdf_values(raw));
}

template <typename Derived>
GridQuantileT<typename Derived::Scalar> project_to_quantile(const Eigen::MatrixBase<Derived>& levels,
                                                            const Vector& raw) {
    if (levels.size() != raw.size()) throw std::invalid_argument("project_to_quantile: size mismatch");
    return GridQuantileT<typename Derived::Scalar>(levels, isotonic_fit(raw));
}

/// Evenly spaced points from lo to hi inclusive.
Vector linspace(double lo, double hi, Index n);

/// Cell midpoints (k + 0.5) / n for k = 0..n-1.
Vector midpoint_levels(Index n);

/// Observational rows (covariates, binary treatment, outcome) with optional folds.
class Dataset {
public:
    Dataset(Matrix covariates, Eigen::VectorXi treatment, Vector outcome);
    Dataset(Matrix covariates, Eigen::VectorXi treatment, Vector outcome, Eigen::VectorXi folds, int n_folds);

    Index size() const { return outcome_.size(); }
    Index dim() const { return covariates_.cols(); }

    const Matrix& covariates() const { return covariates_; }
    const Eigen::VectorXi& treatment() const { return treatment_; }
    const Vector& outcome() const { return outcome_; }
    const std::optional<Eigen::VectorXi>& folds() const { return folds_; }

    Vector x(Index i) const { return covariates_.row(i).transpose(); }
    int a(Index i) const { return treatment_(i); }
    double y(Index i) const { return outcome_(i); }

    Index count_arm(int arm) const;
    Dataset subset(const std::vector<Index>& rows) const;

private:
    void validate() const;

    Matrix covariates_;
    Eigen::VectorXi treatment_;
    Vector outcome_;
    std::optional<Eigen::VectorXi> folds_;
    int n_folds_ = 0;
};

/// Evaluation grids: delta grid for CDF bounds, alpha grid for quantile bounds,
/// y grid for the outcome-space search and a level grid for the [0, 1] search.
struct EvalGrid {
    Vector delta;
    Vector alpha;
    Vector y;
    Vector levels;

    void validate() const;

    /// Uniform delta and y grids with midpoint alpha and level grids.
    static EvalGrid uniform(double delta_lo, double delta_hi, Index n_delta, Index n_alpha, double y_lo,
                            double y_hi, Index n_y);
};

}  // namespace cdte
