#pragma once

// Pointwise sharp (Makarov) bounds on the CDF and quantiles of the treatment
// effect Y[1] - Y[0], built from sup/inf convolutions of the marginals.

#include "cdte/dist.hpp"

#include <limits>
#include <utility>
#include <vector>

namespace cdte {

/// Ties closer than this to the optimum are kept in the optimizer set.
inline constexpr double kArgTieTolerance = 1e-9;

struct ArgOpt {
    double value;
    std::vector<double> arg_set;  // ascending

    double smallest() const { return arg_set.front(); }
};

enum class BoundKind { cdf, quantile };

/// Lower/upper bound functions on a common grid.
///
/// For `cdf` the grid is the delta grid and lower <= upper pointwise. For
/// `quantile` the grid is the alpha grid, `lower` is the quantile of the lower
/// CDF bound and `upper` the quantile of the upper CDF bound, so upper <= lower.
class BoundsPair {
public:
    BoundsPair(BoundKind kind, Vector grid, Vector lower, Vector upper);

    BoundKind kind() const { return kind_; }
    const Vector& grid() const { return grid_; }
    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }

    GridCdf lower_cdf() const { return GridCdf(grid_, lower_); }
    GridCdf upper_cdf() const { return GridCdf(grid_, upper_); }
    GridQuantile lower_quantile() const { return GridQuantile(grid_, lower_); }
    GridQuantile upper_quantile() const { return GridQuantile(grid_, upper_); }

private:
    BoundKind kind_;
    Vector grid_;
    Vector lower_;
    Vector upper_;
};

namespace detail {

template <typename Compare>
ArgOpt extremize(const Vector& candidates, const Vector& values, Compare better) {
    if (candidates.size() == 0) throw std::invalid_argument("convolution: empty candidate set");
    double best = values(0);
    for (Index k = 1; k < values.size(); ++k) {
        if (better(values(k), best)) best = values(k);
    }
    ArgOpt out{best, {}};
    for (Index k = 0; k < values.size(); ++k) {
        if (std::abs(values(k) - best) <= kArgTieTolerance) out.arg_set.push_back(candidates(k));
    }
    std::sort(out.arg_set.begin(), out.arg_set.end());
    return out;
}

template <typename F1, typename F0>
Vector convolution_values(const F1& f1, const F0& f0, double delta, const Vector& candidates) {
    Vector h(candidates.size());
    for (Index k = 0; k < candidates.size(); ++k) h(k) = f1(candidates(k)) - f0(candidates(k) - delta);
    return h;
}

}  // namespace detail

/// max over candidates y of f1(y) - f0(y - delta), with all maximizers.
template <typename F1, typename F0>
ArgOpt sup_convolution(const F1& f1, const F0& f0, double delta, const Vector& candidates) {
    const Vector h = detail::convolution_values(f1, f0, delta, candidates);
    return detail::extremize(candidates, h, [](double a, double b) { return a > b; });
}

/// min over candidates y of f1(y) - f0(y - delta), with all minimizers.
template <typename F1, typename F0>
ArgOpt inf_convolution(const F1& f1, const F0& f0, double delta, const Vector& candidates) {
    const Vector h = detail::convolution_values(f1, f0, delta, candidates);
    return detail::extremize(candidates, h, [](double a, double b) { return a < b; });
}

/// Sup/inf convolution values over a delta grid with the smallest optimizer
/// of each, as consumed by the correction terms.
struct ConvolutionProfile {
    Vector sup_value;
    Vector sup_arg;
    Vector inf_value;
    Vector inf_arg;
};

template <typename F1, typename F0>
ConvolutionProfile convolution_profile(const F1& f1, const F0& f0, const Vector& deltas, const Vector& candidates) {
    const Index nd = deltas.size();
    const Index nc = candidates.size();
    if (nc == 0) throw std::invalid_argument("convolution: empty candidate set");
    Vector f1_at(nc);
    for (Index k = 0; k < nc; ++k) f1_at(k) = f1(candidates(k));
    ConvolutionProfile p{Vector(nd), Vector(nd), Vector(nd), Vector(nd)};
    Vector h(nc);
    for (Index j = 0; j < nd; ++j) {
        double hi = -std::numeric_limits<double>::infinity();
        double lo = std::numeric_limits<double>::infinity();
        for (Index k = 0; k < nc; ++k) {
            h(k) = f1_at(k) - f0(candidates(k) - deltas(j));
            hi = std::max(hi, h(k));
            lo = std::min(lo, h(k));
        }
        Index k_hi = 0;
        while (h(k_hi) < hi - kArgTieTolerance) ++k_hi;
        Index k_lo = 0;
        while (h(k_lo) > lo + kArgTieTolerance) ++k_lo;
        p.sup_value(j) = hi;
        p.sup_arg(j) = candidates(k_hi);
        p.inf_value(j) = lo;
        p.inf_arg(j) = candidates(k_lo);
    }
    return p;
}

/// Makarov bounds on the CDF of Y1 - Y0 over the delta grid; the y grid is
/// the candidate set of the convolutions.
template <typename F1, typename F0>
BoundsPair cdf_bounds(const F1& f1, const F0& f0, const EvalGrid& grid) {
    const ConvolutionProfile p = convolution_profile(f1, f0, grid.delta, grid.y);
    Vector lower = p.sup_value.cwiseMax(0.0);
    Vector upper = (p.inf_value.cwiseMin(0.0).array() + 1.0).matrix();
    return BoundsPair(BoundKind::cdf, grid.delta, std::move(lower), std::move(upper));
}

/// Lower side: min over u in [alpha, 1] of q1(u) - q0(u - alpha).
/// Upper side: max over u in [0, alpha] of q1(u) - q0(u - alpha + 1).
/// Values and smallest optimizers per alpha.
struct QuantileProfile {
    Vector lower_value;
    Vector lower_arg;
    Vector upper_value;
    Vector upper_arg;
};

/// Quantile functions are evaluated with their argument clamped to the level
/// grid extremes, which stand in for the levels 0 and 1.
template <typename Q1, typename Q0>
QuantileProfile quantile_profile(const Q1& q1, const Q0& q0, const Vector& alphas, const Vector& levels) {
    if (levels.size() < 2) throw std::invalid_argument("quantile_profile: level grid needs >= 2 points");
    const double lmin = levels(0);
    const double lmax = levels(levels.size() - 1);
    auto clamp = [&](double u) { return std::min(std::max(u, lmin), lmax); };
    const Index na = alphas.size();
    QuantileProfile p{Vector(na), Vector(na), Vector(na), Vector(na)};
    std::vector<double> cand;
    std::vector<double> vals;
    for (Index j = 0; j < na; ++j) {
        const double alpha = alphas(j);
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("quantile_profile: alpha outside (0, 1)");

        cand.assign(1, alpha);
        for (Index k = 0; k < levels.size(); ++k) {
            if (levels(k) > alpha) cand.push_back(levels(k));
        }
        cand.push_back(1.0);
        if (cand.size() < 2) throw std::invalid_argument("quantile_profile: search interval under-resolved");
        vals.resize(cand.size());
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cand.size(); ++c) {
            vals[c] = q1(clamp(cand[c])) - q0(clamp(cand[c] - alpha));
            best = std::min(best, vals[c]);
        }
        std::size_t c_best = 0;
        while (vals[c_best] > best + kArgTieTolerance) ++c_best;
        p.lower_value(j) = best;
        p.lower_arg(j) = cand[c_best];

        cand.assign(1, 0.0);
        for (Index k = 0; k < levels.size(); ++k) {
            if (levels(k) < alpha) cand.push_back(levels(k));
        }
        cand.push_back(alpha);
        vals.resize(cand.size());
        best = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cand.size(); ++c) {
            vals[c] = q1(clamp(cand[c])) - q0(clamp(cand[c] - alpha + 1.0));
            best = std::max(best, vals[c]);
        }
        c_best = 0;
        while (vals[c_best] < best - kArgTieTolerance) ++c_best;
        p.upper_value(j) = best;
        p.upper_arg(j) = cand[c_best];
    }
    return p;
}

/// Makarov bounds on the quantiles of Y1 - Y0 over the alpha grid, searching
/// the level grid.
template <typename Q1, typename Q0>
BoundsPair quantile_bounds(const Q1& q1, const Q0& q0, const EvalGrid& grid) {
    QuantileProfile p = quantile_profile(q1, q0, grid.alpha, grid.levels);
    return BoundsPair(BoundKind::quantile, grid.alpha, std::move(p.lower_value), std::move(p.upper_value));
}

/// Finite distribution with strictly positive masses.
class DiscreteDist {
public:
    DiscreteDist(Vector support, Vector pmf);

    const Vector& support() const { return support_; }
    const Vector& pmf() const { return pmf_; }
    Index size() const { return support_.size(); }

    double cdf(double y) const;       // P(Y <= y)
    double cdf_below(double y) const;  // P(Y < y)

    static DiscreteDist point_mass(double at);
    /// Bernoulli(p) on {0, 1}; atoms with zero mass are dropped.
    static DiscreteDist bernoulli(double p);

private:
    Vector support_;
    Vector pmf_;
};

/// Sharp bounds on P(Y1 - Y0 <= delta) for discrete/mixed marginals, using
/// F0 - P0 in place of F0.
std::pair<double, double> cdf_bounds_mixed(const DiscreteDist& d1, const DiscreteDist& d0, double delta);

/// Bounds on the fraction negatively affected for binary outcomes, averaged
/// over rows with P(Y = 1 | x, a) = mu_a.
std::pair<double, double> fna_bounds(const Vector& mu0, const Vector& mu1);

/// Closed-form bounds for N(mu1, sigma^2) vs N(mu0, sigma^2) marginals.
std::pair<double, double> analytic_normal_bounds(double mu1, double mu0, double sigma, double delta);

/// Quantile bounds obtained by inverting analytic_normal_bounds: first is the
/// quantile of the lower CDF bound, second the quantile of the upper one.
std::pair<double, double> analytic_normal_quantile_bounds(double mu1, double mu0, double sigma, double alpha);

}  // namespace cdte
