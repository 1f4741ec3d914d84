#include "cdte/bench.hpp"

#include "cdte/normal.hpp"

#include <array>
#include <random>

namespace cdte {

std::string to_string(SynthKind k) {
    switch (k) {
        case SynthKind::normal: return "normal";
        case SynthKind::multimodal: return "multimodal";
        case SynthKind::exponential: return "exponential";
    }
    return "?";
}

SynthKind parse_synth_kind(const std::string& s) {
    if (s == "normal") return SynthKind::normal;
    if (s == "multimodal" || s == "multi-modal") return SynthKind::multimodal;
    if (s == "exponential") return SynthKind::exponential;
    throw std::invalid_argument("unknown synthetic setting '" + s + "' (expected normal, multimodal or exponential)");
}

double synth_propensity(const Vector& x) {
    if (x.size() != 2) throw std::invalid_argument("synthetic settings have two covariates");
    return logistic(0.75 * x(0) - x(1) + 0.5);
}

double synth_mu(int arm, const Vector& x) {
    if (x.size() != 2) throw std::invalid_argument("synthetic settings have two covariates");
    const double x1 = x(0);
    const double x2 = x(1);
    return (2.0 * arm - 1.0) * x1 + arm - 2.0 * std::sin(2.0 * x1 + x2) - 2.0 * x2 * (1.0 + 0.5 * x1);
}

namespace {

struct Component {
    double weight;
    double offset;
    double sd;
};

// Mixture components relative to mu_0(x); both arms are centred on mu_0.
const std::array<Component, 2> kMix0{{{0.7, -0.5, 1.5}, {0.3, 1.5, 0.5}}};
const std::array<Component, 3> kMix1{{{0.3, -2.5, 0.35}, {0.4, 0.5, 0.75}, {0.3, 2.0, 0.5}}};

template <typename F>
double over_mixture(int arm, F f) {
    double acc = 0.0;
    if (arm == 1) {
        for (const Component& c : kMix1) acc += c.weight * f(c);
    } else {
        for (const Component& c : kMix0) acc += c.weight * f(c);
    }
    return acc;
}

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr Index kBlockRows = 256;

double draw_outcome(SynthKind kind, int a, const Vector& x, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    switch (kind) {
        case SynthKind::normal: return synth_mu(a, x) + gauss(rng);
        case SynthKind::exponential: {
            std::exponential_distribution<double> expo(1.0);
            return std::abs(synth_mu(a, x)) * expo(rng);
        }
        case SynthKind::multimodal: {
            const double m0 = synth_mu(0, x);
            const double u = unif(rng);
            double acc = 0.0;
            const Component* chosen = nullptr;
            auto pick = [&](const auto& comps) {
                for (const Component& c : comps) {
                    acc += c.weight;
                    if (u < acc) {
                        chosen = &c;
                        return;
                    }
                }
                chosen = &comps.back();
            };
            if (a == 1) {
                pick(kMix1);
            } else {
                pick(kMix0);
            }
            return m0 + chosen->offset + chosen->sd * gauss(rng);
        }
    }
    return 0.0;
}

}  // namespace

Dataset generate_synth(const SynthSetting& setting, Index n, std::uint64_t stream) {
    if (n < 1) throw std::invalid_argument("generate_synth: n must be positive");
    Matrix x(n, 2);
    Eigen::VectorXi a(n);
    Vector y(n);
    for (Index start = 0; start < n; start += kBlockRows) {
        const std::uint64_t block = std::uint64_t(start / kBlockRows);
        std::mt19937_64 rng(splitmix64(splitmix64(splitmix64(setting.seed) ^ stream) ^ block));
        std::uniform_real_distribution<double> u_x1(-2.0, 2.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const Index stop = std::min(n, start + kBlockRows);
        for (Index i = start; i < stop; ++i) {
            Vector xi(2);
            int ai = 0;
            for (;;) {
                xi(0) = u_x1(rng);
                xi(1) = gauss(rng);
                ai = unif(rng) < synth_propensity(xi) ? 1 : 0;
                // Exp(1/|mu|) is undefined at mu = 0; such rows are redrawn.
                if (setting.kind != SynthKind::exponential || std::abs(synth_mu(ai, xi)) >= 1e-6) break;
            }
            x.row(i) = xi.transpose();
            a(i) = ai;
            y(i) = draw_outcome(setting.kind, ai, xi, rng);
        }
    }
    return Dataset(std::move(x), std::move(a), std::move(y));
}

double GroundTruth::cdf(int arm, double y, const Vector& x) const {
    switch (kind_) {
        case SynthKind::normal: return normal_cdf(y - synth_mu(arm, x));
        case SynthKind::exponential: {
            const double m = std::abs(synth_mu(arm, x));
            return y <= 0.0 ? 0.0 : -std::expm1(-y / m);
        }
        case SynthKind::multimodal: {
            const double m0 = synth_mu(0, x);
            return over_mixture(arm, [&](const Component& c) { return normal_cdf((y - m0 - c.offset) / c.sd); });
        }
    }
    return 0.0;
}

double GroundTruth::density(int arm, double y, const Vector& x) const {
    switch (kind_) {
        case SynthKind::normal: return normal_pdf(y - synth_mu(arm, x));
        case SynthKind::exponential: {
            const double m = std::abs(synth_mu(arm, x));
            return y < 0.0 ? 0.0 : std::exp(-y / m) / m;
        }
        case SynthKind::multimodal: {
            const double m0 = synth_mu(0, x);
            return over_mixture(arm, [&](const Component& c) { return normal_pdf((y - m0 - c.offset) / c.sd) / c.sd; });
        }
    }
    return 0.0;
}

double GroundTruth::mean(int arm, const Vector& x) const {
    switch (kind_) {
        case SynthKind::normal: return synth_mu(arm, x);
        case SynthKind::exponential: return std::abs(synth_mu(arm, x));
        case SynthKind::multimodal: {
            const double m0 = synth_mu(0, x);
            return over_mixture(arm, [&](const Component& c) { return m0 + c.offset; });
        }
    }
    return 0.0;
}

double GroundTruth::sd(int arm, const Vector& x) const {
    switch (kind_) {
        case SynthKind::normal: return 1.0;
        case SynthKind::exponential: return std::abs(synth_mu(arm, x));
        case SynthKind::multimodal: {
            const double m = mean(arm, x);
            const double m0 = synth_mu(0, x);
            const double second = over_mixture(arm, [&](const Component& c) {
                const double d = m0 + c.offset - m;
                return c.sd * c.sd + d * d;
            });
            return std::sqrt(second);
        }
    }
    return 1.0;
}

double GroundTruth::quantile(int arm, double u, const Vector& x) const {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("GroundTruth::quantile: level outside (0, 1)");
    switch (kind_) {
        case SynthKind::normal: return synth_mu(arm, x) + normal_quantile(u);
        case SynthKind::exponential: return -std::abs(synth_mu(arm, x)) * std::log1p(-u);
        case SynthKind::multimodal: {
            double lo = mean(arm, x) - 12.0 * sd(arm, x);
            double hi = mean(arm, x) + 12.0 * sd(arm, x);
            for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++it) {
                const double mid = 0.5 * (lo + hi);
                (cdf(arm, mid, x) < u ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
    }
    return 0.0;
}

GridCdf GroundTruth::outcome_cdf(int arm, const Vector& x, const Vector& y_grid) const {
    Vector p(y_grid.size());
    for (Index j = 0; j < y_grid.size(); ++j) p(j) = cdf(arm, y_grid(j), x);
    return GridCdf(y_grid, std::move(p));
}

GridQuantile GroundTruth::outcome_quantile(int arm, const Vector& x, const Vector& levels, const Vector&) const {
    Vector q(levels.size());
    for (Index k = 0; k < levels.size(); ++k) q(k) = quantile(arm, levels(k), x);
    return GridQuantile(levels, std::move(q));
}

namespace {

constexpr Index kTruthGrid = 2001;

Vector truth_y_grid(const GroundTruth& truth, const Vector& x, double delta_lo, double delta_hi) {
    const double m1 = truth.mean(1, x);
    const double s1 = truth.sd(1, x);
    const double m0 = truth.mean(0, x);
    const double s0 = truth.sd(0, x);
    const double lo = std::min(m1 - 8.0 * s1, m0 - 8.0 * s0 + delta_lo);
    const double hi = std::max(m1 + 8.0 * s1, m0 + 8.0 * s0 + delta_hi);
    return linspace(lo, hi, kTruthGrid);
}

}  // namespace

BoundsPair numeric_cdf_bounds(const GroundTruth& truth, const Vector& x, const Vector& deltas) {
    const Vector ys = truth_y_grid(truth, x, deltas.minCoeff(), deltas.maxCoeff());
    auto f1 = [&](double y) { return truth.cdf(1, y, x); };
    auto f0 = [&](double y) { return truth.cdf(0, y, x); };
    const ConvolutionProfile p = convolution_profile(f1, f0, deltas, ys);
    return BoundsPair(BoundKind::cdf, deltas, p.sup_value.cwiseMax(0.0),
                      (p.inf_value.cwiseMin(0.0).array() + 1.0).matrix());
}

BoundsPair true_bounds(SynthKind kind, const Vector& x, const EvalGrid& grid, BoundKind estimand) {
    const GroundTruth truth(kind);
    if (estimand == BoundKind::cdf) {
        if (kind != SynthKind::normal) return numeric_cdf_bounds(truth, x, grid.delta);
        const double mu1 = synth_mu(1, x);
        const double mu0 = synth_mu(0, x);
        Vector lo(grid.delta.size());
        Vector hi(grid.delta.size());
        for (Index j = 0; j < grid.delta.size(); ++j) {
            std::tie(lo(j), hi(j)) = analytic_normal_bounds(mu1, mu0, 1.0, grid.delta(j));
        }
        return BoundsPair(BoundKind::cdf, grid.delta, std::move(lo), std::move(hi));
    }
    if (kind == SynthKind::multimodal) {
        throw std::invalid_argument("true_bounds: quantile bounds are unsupported for the multimodal setting");
    }
    if (kind == SynthKind::normal) {
        const double mu1 = synth_mu(1, x);
        const double mu0 = synth_mu(0, x);
        Vector lo(grid.alpha.size());
        Vector hi(grid.alpha.size());
        for (Index j = 0; j < grid.alpha.size(); ++j) {
            std::tie(lo(j), hi(j)) = analytic_normal_quantile_bounds(mu1, mu0, 1.0, grid.alpha(j));
        }
        return BoundsPair(BoundKind::quantile, grid.alpha, std::move(lo), std::move(hi));
    }
    const Vector levels = midpoint_levels(kTruthGrid);
    auto q1 = [&](double u) { return truth.quantile(1, u, x); };
    auto q0 = [&](double u) { return truth.quantile(0, u, x); };
    QuantileProfile p = quantile_profile(q1, q0, grid.alpha, levels);
    return BoundsPair(BoundKind::quantile, grid.alpha, std::move(p.lower_value), std::move(p.upper_value));
}

BoundsPair cdf_to_quantile_bounds(const BoundsPair& cdf, const Vector& levels) {
    if (cdf.kind() != BoundKind::cdf) throw std::invalid_argument("cdf_to_quantile_bounds: expected cdf bounds");
    const GridCdf lo = cdf.lower_cdf();
    const GridCdf hi = cdf.upper_cdf();
    Vector ql(levels.size());
    Vector qu(levels.size());
    for (Index k = 0; k < levels.size(); ++k) {
        ql(k) = lo.invert(levels(k)).value;
        qu(k) = hi.invert(levels(k)).value;
    }
    return BoundsPair(BoundKind::quantile, levels, std::move(ql), std::move(qu));
}

namespace {

double quantile_to_cdf_at(const Vector& levels, const Vector& values, double d) {
    const Index n = values.size();
    if (d < values(0)) return 0.0;
    if (d >= values(n - 1)) return 1.0;
    // Largest k with values(k) <= d; k < n - 1 here.
    const Index k = Index(std::upper_bound(values.data(), values.data() + n, d) - values.data()) - 1;
    const double rise = values(k + 1) - values(k);
    const double w = rise > 0.0 ? (d - values(k)) / rise : 0.0;
    return levels(k) + w * (levels(k + 1) - levels(k));
}

}  // namespace

BoundsPair quantile_to_cdf_bounds(const BoundsPair& quantile, const Vector& deltas) {
    if (quantile.kind() != BoundKind::quantile) throw std::invalid_argument("quantile_to_cdf_bounds: expected quantile bounds");
    Vector lo(deltas.size());
    Vector hi(deltas.size());
    for (Index j = 0; j < deltas.size(); ++j) {
        lo(j) = quantile_to_cdf_at(quantile.grid(), quantile.lower(), deltas(j));
        hi(j) = quantile_to_cdf_at(quantile.grid(), quantile.upper(), deltas(j));
    }
    return BoundsPair(BoundKind::cdf, deltas, std::move(lo), std::move(hi));
}

TruthBounds truth_for_metrics(SynthKind kind, const Vector& x, const EvalGrid& grid) {
    BoundsPair cdf = true_bounds(kind, x, grid, BoundKind::cdf);
    if (kind != SynthKind::multimodal) return {std::move(cdf), true_bounds(kind, x, grid, BoundKind::quantile)};
    BoundsPair quantile = cdf_to_quantile_bounds(cdf, grid.alpha);
    return {std::move(cdf), std::move(quantile)};
}

}  // namespace cdte
