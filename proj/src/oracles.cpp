#include "cdte/bench.hpp"

#include "cdte/normal.hpp"

#include <bit>
#include <numeric>
#include <random>

namespace cdte {

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(std::size_t(n)) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int v) {
        while (parent[std::size_t(v)] != v) v = parent[std::size_t(v)] = parent[std::size_t(parent[std::size_t(v)])];
        return v;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[std::size_t(a)] = b;
        return true;
    }
};

// Flows of the basic solution supported on a spanning tree of the bipartite
// row/column graph, by repeatedly settling a leaf. Empty when infeasible.
std::optional<std::vector<double>> tree_flows(const std::vector<std::pair<int, int>>& cells, const Vector& rows,
                                              const Vector& cols) {
    const int m = int(rows.size());
    std::vector<double> supply(std::size_t(m + cols.size()));
    for (int i = 0; i < m; ++i) supply[std::size_t(i)] = rows(i);
    for (Index j = 0; j < cols.size(); ++j) supply[std::size_t(m + j)] = cols(j);
    std::vector<double> flow(cells.size(), 0.0);
    std::vector<bool> done(cells.size(), false);
    for (std::size_t settled = 0; settled < cells.size(); ++settled) {
        std::vector<int> degree(supply.size(), 0);
        for (std::size_t e = 0; e < cells.size(); ++e) {
            if (done[e]) continue;
            ++degree[std::size_t(cells[e].first)];
            ++degree[std::size_t(m + cells[e].second)];
        }
        std::size_t pick = cells.size();
        int leaf = -1;
        for (std::size_t e = 0; e < cells.size() && leaf < 0; ++e) {
            if (done[e]) continue;
            const int r = cells[e].first;
            const int c = m + cells[e].second;
            if (degree[std::size_t(r)] == 1) {
                leaf = r;
            } else if (degree[std::size_t(c)] == 1) {
                leaf = c;
            }
            if (leaf >= 0) pick = e;
        }
        const double f = supply[std::size_t(leaf)];
        flow[pick] = f;
        done[pick] = true;
        supply[std::size_t(cells[pick].first)] -= f;
        supply[std::size_t(m + cells[pick].second)] -= f;
    }
    for (double f : flow) {
        if (f < -1e-12) return std::nullopt;
    }
    for (double s : supply) {
        if (std::abs(s) > 1e-9) return std::nullopt;
    }
    return flow;
}

}  // namespace

std::pair<double, double> coupling_oracle(const DiscreteDist& d1, const DiscreteDist& d0, double delta) {
    const int m = int(d1.size());
    const int n = int(d0.size());
    if (m > 4 || n > 4) throw std::invalid_argument("coupling_oracle: supports larger than 4 atoms are not enumerated");
    const int cells = m * n;
    const int pick = m + n - 1;
    double best_min = INFINITY;
    double best_max = -INFINITY;
    // Enumerate subsets of `pick` cells via bitmasks of popcount `pick`.
    for (unsigned mask = 0; mask < (1u << cells); ++mask) {
        if (std::popcount(mask) != pick) continue;
        std::vector<std::pair<int, int>> tree;
        UnionFind uf(m + n);
        bool acyclic = true;
        for (int c = 0; c < cells && acyclic; ++c) {
            if (!(mask & (1u << c))) continue;
            const int i = c / n;
            const int j = c % n;
            acyclic = uf.unite(i, m + j);
            tree.emplace_back(i, j);
        }
        if (!acyclic) continue;
        const auto flow = tree_flows(tree, d1.pmf(), d0.pmf());
        if (!flow) continue;
        double value = 0.0;
        for (std::size_t e = 0; e < tree.size(); ++e) {
            if (d1.support()(tree[e].first) - d0.support()(tree[e].second) <= delta) value += (*flow)[e];
        }
        best_min = std::min(best_min, value);
        best_max = std::max(best_max, value);
    }
    return {best_min, best_max};
}

ProbeReport orthogonality_probe(SynthKind kind, const std::vector<double>& t_values, double gamma,
                                const ProbeOptions& options) {
    if (kind != SynthKind::normal) throw std::invalid_argument("orthogonality_probe: only the normal setting is supported");
    if (options.draws < 10000) throw std::invalid_argument("orthogonality_probe: Monte Carlo budget below 1e4 draws");
    if (t_values.size() < 2) throw std::invalid_argument("orthogonality_probe: need at least two t values");
    for (std::size_t k = 0; k < t_values.size(); ++k) {
        if (!(t_values[k] > 0.0) || (k > 0 && !(t_values[k] < t_values[k - 1]))) {
            throw std::invalid_argument("orthogonality_probe: t values must be positive and decreasing");
        }
    }
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("orthogonality_probe: gamma outside [0, 1]");

    std::vector<double> ts{0.0};
    ts.insert(ts.end(), t_values.begin(), t_values.end());
    const std::size_t nt = ts.size();
    // tau(x) = 2 x1 + 1 lies in [-3, 5]; the grid covers the bounds' transition zone.
    const Vector deltas = linspace(-9.0, 11.0, options.n_delta);
    const Vector w = crps_weights(deltas);

    // integral over delta of E[pseudo-outcome | X] per t, per side, for AU and CA.
    std::vector<double> au_lo(nt, 0.0), au_hi(nt, 0.0), ca_lo(nt, 0.0), ca_hi(nt, 0.0);
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> u_x1(-2.0, 2.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Perturbation& pert = options.perturbation;
    Vector x(2);
    for (Index r = 0; r < options.draws; ++r) {
        x(0) = u_x1(rng);
        x(1) = gauss(rng);
        const double mu1 = synth_mu(1, x);
        const double mu0 = synth_mu(0, x);
        const double pi = synth_propensity(x);
        const double logit = std::log(pi) - std::log1p(-pi);
        for (std::size_t k = 0; k < nt; ++k) {
            const double t = ts[k];
            const double m1 = mu1 + t * pert.mean_shift1;
            const double m0 = mu0 + t * pert.mean_shift0;
            const double pt = clip_propensity(logistic(logit + t * pert.logit_shift), options.clip_floor);
            double plug_lo = 0.0, plug_hi = 0.0, corr_lo = 0.0, corr_hi = 0.0;
            for (Index j = 0; j < deltas.size(); ++j) {
                const double d = deltas(j);
                const auto [lo, hi] = analytic_normal_bounds(m1, m0, 1.0, d);
                // Both convolution optimizers of equal-variance normals sit at the midpoint.
                const double ystar = 0.5 * (m1 + m0 + d);
                const double f1t = normal_cdf(ystar - m1);
                const double f0t = normal_cdf(ystar - d - m0);
                const double f1 = normal_cdf(ystar - mu1);
                const double f0 = normal_cdf(ystar - d - mu0);
                const double tau = m1 - m0;
                // The term is affine in the indicator, so its mean over Y given
                // (X, A) follows from evaluating it with the indicator on and off.
                auto mean_term = [&](bool active) {
                    const double on1 = correction_cdf_value(1, ystar, pt, ystar, d, f1t, f0t, active);
                    const double off1 = correction_cdf_value(1, INFINITY, pt, ystar, d, f1t, f0t, active);
                    const double on0 = correction_cdf_value(0, ystar - d, pt, ystar, d, f1t, f0t, active);
                    const double off0 = correction_cdf_value(0, INFINITY, pt, ystar, d, f1t, f0t, active);
                    return pi * (f1 * on1 + (1.0 - f1) * off1) + (1.0 - pi) * (f0 * on0 + (1.0 - f0) * off0);
                };
                plug_lo += w(j) * lo;
                plug_hi += w(j) * hi;
                corr_lo += w(j) * mean_term(d > tau);
                corr_hi += w(j) * mean_term(d < tau);
            }
            au_lo[k] += plug_lo + gamma * corr_lo;
            au_hi[k] += plug_hi + gamma * corr_hi;
            ca_lo[k] += plug_lo;
            ca_hi[k] += plug_hi;
        }
    }

    ProbeReport rep;
    rep.t = ts;
    const double n = double(options.draws);
    auto deviation = [&](const std::vector<double>& acc, std::vector<double>& out) {
        for (std::size_t k = 0; k < nt; ++k) out.push_back(std::abs(-2.0 * (acc[k] - acc[0]) / n));
    };
    deviation(au_lo, rep.au_lower);
    deviation(au_hi, rep.au_upper);
    deviation(ca_lo, rep.ca_lower);
    deviation(ca_hi, rep.ca_upper);
    auto slope = [&](const std::vector<double>& dev) {
        return loglog_slope(std::vector<double>(ts.begin() + 1, ts.end()), std::vector<double>(dev.begin() + 1, dev.end()));
    };
    rep.slope_au_lower = slope(rep.au_lower);
    rep.slope_au_upper = slope(rep.au_upper);
    rep.slope_ca_lower = slope(rep.ca_lower);
    rep.slope_ca_upper = slope(rep.ca_upper);
    return rep;
}

}  // namespace cdte
