#include "cdte/makarov.hpp"

#include "cdte/normal.hpp"

#include <cmath>
#include <stdexcept>

namespace cdte {

BoundsPair::BoundsPair(BoundKind kind, Vector grid, Vector lower, Vector upper)
    : kind_(kind), grid_(std::move(grid)), lower_(std::move(lower)), upper_(std::move(upper)) {
    if (grid_.size() < 2 || lower_.size() != grid_.size() || upper_.size() != grid_.size()) {
        throw std::invalid_argument("BoundsPair: lower/upper must match the grid length (>= 2)");
    }
    if (kind_ == BoundKind::cdf) {
        // Constructing the GridCdf objects checks the per-side invariants.
        (void)lower_cdf();
        (void)upper_cdf();
        if ((lower_.array() > upper_.array()).any()) {
            throw std::invalid_argument("BoundsPair: lower CDF bound exceeds upper CDF bound");
        }
    } else {
        (void)lower_quantile();
        (void)upper_quantile();
        if ((upper_.array() > lower_.array()).any()) {
            throw std::invalid_argument("BoundsPair: quantile bounds out of order");
        }
    }
}

DiscreteDist::DiscreteDist(Vector support, Vector pmf) : support_(std::move(support)), pmf_(std::move(pmf)) {
    if (support_.size() < 1 || support_.size() != pmf_.size()) {
        throw std::invalid_argument("DiscreteDist: support and pmf must be nonempty and of equal length");
    }
    if (!detail::all_finite(support_) || !detail::strictly_increasing(support_)) {
        throw std::invalid_argument("DiscreteDist: support must be finite and strictly ascending");
    }
    if (!detail::all_finite(pmf_) || (pmf_.array() <= 0.0).any()) {
        throw std::invalid_argument("DiscreteDist: pmf entries must be positive");
    }
    if (std::abs(pmf_.sum() - 1.0) > 1e-12) throw std::invalid_argument("DiscreteDist: pmf must sum to 1");
}

double DiscreteDist::cdf(double y) const {
    double acc = 0.0;
    for (Index k = 0; k < size() && support_(k) <= y; ++k) acc += pmf_(k);
    return acc;
}

double DiscreteDist::cdf_below(double y) const {
    double acc = 0.0;
    for (Index k = 0; k < size() && support_(k) < y; ++k) acc += pmf_(k);
    return acc;
}

DiscreteDist DiscreteDist::point_mass(double at) { return DiscreteDist(Vector::Constant(1, at), Vector::Ones(1)); }

DiscreteDist DiscreteDist::bernoulli(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli: p outside [0, 1]");
    if (p == 0.0) return point_mass(0.0);
    if (p == 1.0) return point_mass(1.0);
    Vector s(2);
    s << 0.0, 1.0;
    Vector m(2);
    m << 1.0 - p, p;
    return DiscreteDist(s, m);
}

std::pair<double, double> cdf_bounds_mixed(const DiscreteDist& d1, const DiscreteDist& d0, double delta) {
    // h(y) = P(Y1 <= y) - P(Y0 < y - delta) is piecewise constant with
    // breakpoints at supp(d1) and supp(d0) + delta. Its maxima sit on
    // breakpoints and its minima on the open pieces between them, so both are
    // evaluated. Each candidate carries y - delta explicitly so shifted
    // support points are compared without rounding.
    struct Candidate {
        double y;
        double y_minus_delta;
    };
    std::vector<Candidate> points;
    for (Index k = 0; k < d1.size(); ++k) points.push_back({d1.support()(k), d1.support()(k) - delta});
    for (Index k = 0; k < d0.size(); ++k) points.push_back({d0.support()(k) + delta, d0.support()(k)});
    std::sort(points.begin(), points.end(), [](const Candidate& a, const Candidate& b) { return a.y < b.y; });

    std::vector<Candidate> cand = points;
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
        if (points[k + 1].y > points[k].y) {
            const double mid = 0.5 * (points[k].y + points[k + 1].y);
            cand.push_back({mid, mid - delta});
        }
    }
    const double below = points.front().y - 1.0;
    const double above = points.back().y + 1.0;
    cand.push_back({below, below - delta});
    cand.push_back({above, above - delta});

    double sup = -std::numeric_limits<double>::infinity();
    double inf = std::numeric_limits<double>::infinity();
    for (const Candidate& c : cand) {
        const double h = d1.cdf(c.y) - d0.cdf_below(c.y_minus_delta);
        sup = std::max(sup, h);
        inf = std::min(inf, h);
    }
    return {std::max(0.0, sup), 1.0 + std::min(0.0, inf)};
}

std::pair<double, double> fna_bounds(const Vector& mu0, const Vector& mu1) {
    if (mu0.size() != mu1.size() || mu0.size() == 0) {
        throw std::invalid_argument("fna_bounds: mu0 and mu1 must be nonempty and equally long");
    }
    auto in_unit = [](const Vector& v) { return detail::all_finite(v) && (v.array() >= 0.0).all() && (v.array() <= 1.0).all(); };
    if (!in_unit(mu0) || !in_unit(mu1)) throw std::invalid_argument("fna_bounds: probabilities outside [0, 1]");
    const double n = double(mu0.size());
    double lower = 0.0;
    double upper = 0.0;
    for (Index i = 0; i < mu0.size(); ++i) {
        lower += std::max(0.0, -(mu1(i) - mu0(i)));
        upper += std::min(mu0(i), 1.0 - mu1(i));
    }
    return {lower / n, upper / n};
}

std::pair<double, double> analytic_normal_bounds(double mu1, double mu0, double sigma, double delta) {
    if (!(sigma > 0.0)) throw std::invalid_argument("analytic_normal_bounds: sigma must be positive");
    const double tau = mu1 - mu0;
    const double s = 2.0 * normal_cdf((delta - tau) / (2.0 * sigma)) - 1.0;
    return {std::max(0.0, s), std::min(1.0, 1.0 + s)};
}

std::pair<double, double> analytic_normal_quantile_bounds(double mu1, double mu0, double sigma, double alpha) {
    if (!(sigma > 0.0)) throw std::invalid_argument("analytic_normal_quantile_bounds: sigma must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("analytic_normal_quantile_bounds: alpha outside (0, 1)");
    const double tau = mu1 - mu0;
    return {tau + 2.0 * sigma * normal_quantile(0.5 * (1.0 + alpha)), tau + 2.0 * sigma * normal_quantile(0.5 * alpha)};
}

}  // namespace cdte
