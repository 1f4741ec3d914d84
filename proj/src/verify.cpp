#include "cdte/verify.hpp"

#include "cdte/csv.hpp"
#include "cdte/normal.hpp"

#include <chrono>
#include <cstdio>
#include <random>

namespace cdte {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, v);
    return buf;
}

}  // namespace

std::string format_result(const PropertyResult& r) {
    std::string s = r.passed ? "[PASS] " : "[FAIL] ";
    s += r.name + ": measured " + fmt("%.6g", r.measured) + " (need " + r.relation + " " + fmt("%.6g", r.threshold) + ")";
    if (!r.detail.empty()) s += "; " + r.detail;
    s += "; " + fmt("%.1f", r.seconds) + " s";
    return s;
}

PropertyResult check_analytic_numeric(std::uint64_t seed, Index cases) {
    const auto start = Clock::now();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u_tau(-3.0, 3.0);
    std::uniform_real_distribution<double> u_sigma(0.5, 2.0);
    std::uniform_real_distribution<double> u_delta(-6.0, 6.0);
    double worst = 0.0;
    for (Index c = 0; c < cases; ++c) {
        const double tau = u_tau(rng);
        const double sigma = u_sigma(rng);
        const double delta = u_delta(rng);
        const double lo = std::min(tau, delta) - 8.0 * sigma;
        const double hi = std::max(tau, delta) + 8.0 * sigma;
        EvalGrid g = EvalGrid::uniform(delta, delta + 0.5, 2, 2, lo, hi, 2001);
        auto f1 = [&](double y) { return normal_cdf((y - tau) / sigma); };
        auto f0 = [&](double y) { return normal_cdf(y / sigma); };
        const BoundsPair b = cdf_bounds(f1, f0, g);
        for (Index j = 0; j < 2; ++j) {
            const auto [al, au] = analytic_normal_bounds(tau, 0.0, sigma, g.delta(j));
            worst = std::max({worst, std::abs(b.lower()(j) - al), std::abs(b.upper()(j) - au)});
        }
    }
    PropertyResult r{"analytic-numeric agreement", false, worst, 1e-3, "<", "", elapsed(start)};
    r.passed = worst < 1e-3 && r.seconds < 5.0;
    r.detail = std::to_string(cases) + " random (tau, sigma, delta), runtime limit 5 s";
    return r;
}

namespace {

DiscreteDist random_discrete(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> size(1, 4);
    std::uniform_real_distribution<double> mass(0.05, 1.0);
    std::vector<int> pool{-3, -2, -1, 0, 1, 2, 3};
    std::shuffle(pool.begin(), pool.end(), rng);
    const int m = size(rng);
    std::vector<int> atoms(pool.begin(), pool.begin() + m);
    std::sort(atoms.begin(), atoms.end());
    Vector s(m);
    Vector p(m);
    for (int k = 0; k < m; ++k) {
        s(k) = atoms[std::size_t(k)];
        p(k) = mass(rng);
    }
    p /= p.sum();
    return DiscreteDist(s, p);
}

}  // namespace

PropertyResult check_sharpness(std::uint64_t seed, Index cases) {
    const auto start = Clock::now();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u_delta(-13, 13);
    double worst = 0.0;
    for (Index c = 0; c < cases; ++c) {
        const DiscreteDist d1 = random_discrete(rng);
        const DiscreteDist d0 = random_discrete(rng);
        const double delta = 0.5 * u_delta(rng);
        const auto [lo, hi] = cdf_bounds_mixed(d1, d0, delta);
        const auto [cmin, cmax] = coupling_oracle(d1, d0, delta);
        worst = std::max({worst, std::abs(lo - cmin), std::abs(hi - cmax)});
    }
    PropertyResult r{"pointwise sharpness", false, worst, 1e-9, "<=", "", elapsed(start)};
    r.passed = worst <= 1e-9 && r.seconds < 30.0;
    r.detail = std::to_string(cases) + " random instances with supports <= 4, runtime limit 30 s";
    return r;
}

PropertyResult check_fna_reduction(std::uint64_t seed, Index cases) {
    const auto start = Clock::now();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u_rows(1, 20);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto draw_prob = [&]() {
        const double u = unif(rng);
        if (u < 0.05) return 0.0;
        if (u < 0.10) return 1.0;
        return unif(rng);
    };
    auto round12 = [](double v) { return std::round(v * 1e12); };
    Index mismatches = 0;
    for (Index c = 0; c < cases; ++c) {
        const int rows = u_rows(rng);
        Vector mu0(rows);
        Vector mu1(rows);
        for (int i = 0; i < rows; ++i) {
            mu0(i) = draw_prob();
            mu1(i) = draw_prob();
        }
        const auto [fl, fu] = fna_bounds(mu0, mu1);
        double ml = 0.0;
        double mu = 0.0;
        for (int i = 0; i < rows; ++i) {
            const auto [l, u] = cdf_bounds_mixed(DiscreteDist::bernoulli(mu1(i)), DiscreteDist::bernoulli(mu0(i)), -1.0);
            ml += l;
            mu += u;
        }
        ml /= double(rows);
        mu /= double(rows);
        if (round12(fl) != round12(ml) || round12(fu) != round12(mu)) ++mismatches;
    }
    PropertyResult r{"FNA reduction", false, double(mismatches), 0.0, "==", "", elapsed(start)};
    r.passed = mismatches == 0;
    r.detail = "mismatching instances out of " + std::to_string(cases) + " after rounding to 1e-12";
    return r;
}

PropertyResult check_enclosure(std::uint64_t seed, Index draws) {
    const auto start = Clock::now();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::vector<std::pair<double, double>> points{{0.0, 0.0}, {1.0, 0.5}, {-1.5, -1.0}, {0.5, 1.2}, {-0.3, 0.7}};
    double worst = -INFINITY;  // largest excursion beyond the 3-stderr band
    std::vector<double> deltas_sample(static_cast<std::size_t>(draws));
    for (const auto& [x1, x2] : points) {
        Vector x(2);
        x << x1, x2;
        const double mu1 = synth_mu(1, x);
        const double mu0 = synth_mu(0, x);
        const Vector grid = linspace(mu1 - mu0 - 6.0, mu1 - mu0 + 6.0, 50);
        for (int antitone = 0; antitone < 2; ++antitone) {
            for (Index i = 0; i < draws; ++i) {
                const double e = gauss(rng);
                const double y1 = mu1 + e;
                const double y0 = mu0 + (antitone ? -e : e);
                deltas_sample[std::size_t(i)] = y1 - y0;
            }
            std::sort(deltas_sample.begin(), deltas_sample.end());
            for (Index j = 0; j < grid.size(); ++j) {
                const double p = double(std::upper_bound(deltas_sample.begin(), deltas_sample.end(), grid(j)) -
                                        deltas_sample.begin()) / double(draws);
                const double se = std::sqrt(p * (1.0 - p) / double(draws));
                const auto [lo, hi] = analytic_normal_bounds(mu1, mu0, 1.0, grid(j));
                worst = std::max({worst, (lo - 3.0 * se) - p, p - (hi + 3.0 * se)});
            }
        }
    }
    PropertyResult r{"enclosure", false, worst, 0.0, "<=", "", elapsed(start)};
    r.passed = worst <= 0.0;
    r.detail = "max excursion outside [lower - 3 se, upper + 3 se], comonotone and antitone couplings at 5 x";
    return r;
}

PropertyResult check_one_step_mean_zero(std::uint64_t seed, Index rows) {
    const auto start = Clock::now();
    const Dataset data = generate_synth({SynthKind::normal, seed}, rows);
    const GroundTruth truth(SynthKind::normal);
    const EvalGrid grid = default_grid(data);
    const Index nd = grid.delta.size();
    // Given (X, A) the term takes two values, c_on (indicator 1) and c_off
    // (indicator 0). At the truth its conditional mean is zero, so its
    // conditional variance is -c_on * c_off. The sample variance is useless in
    // the tails, where the indicator rarely or never fires in 1e4 rows.
    const double far = 1e300;
    Vector s_lo = Vector::Zero(nd), v_lo = Vector::Zero(nd), s_hi = Vector::Zero(nd), v_hi = Vector::Zero(nd);
    for (Index i = 0; i < rows; ++i) {
        const Vector x = data.x(i);
        const RowTerms t = row_terms(x, data.a(i), data.y(i), truth, grid, BoundKind::cdf, 0.05);
        const RowTerms on = row_terms(x, data.a(i), -far, truth, grid, BoundKind::cdf, 0.05);
        const RowTerms off = row_terms(x, data.a(i), far, truth, grid, BoundKind::cdf, 0.05);
        s_lo += t.corr_lower;
        v_lo -= on.corr_lower.cwiseProduct(off.corr_lower);
        s_hi += t.corr_upper;
        v_hi -= on.corr_upper.cwiseProduct(off.corr_upper);
    }
    const double n = double(rows);
    double worst = 0.0;
    auto scan = [&](const Vector& s, const Vector& v) {
        for (Index j = 0; j < nd; ++j) {
            const double mean = s(j) / n;
            const double se = std::sqrt(std::max(v(j), 0.0)) / n;
            const double z = se > 0.0 ? std::abs(mean) / se : (mean == 0.0 ? 0.0 : INFINITY);
            worst = std::max(worst, z);
        }
    };
    scan(s_lo, v_lo);
    scan(s_hi, v_hi);
    PropertyResult r{"one-step mean zero", false, worst, 3.0, "<=", "", elapsed(start)};
    r.passed = worst <= 3.0;
    r.detail = "max |mean| / stderr over " + std::to_string(nd) + " delta points and both sides, " +
               std::to_string(rows) + " rows, stderr from the exact conditional variance";
    return r;
}

PropertyResult check_orthogonality(std::uint64_t seed, Index draws) {
    const auto start = Clock::now();
    ProbeOptions opt;
    opt.seed = seed;
    opt.draws = draws;
    const ProbeReport rep = orthogonality_probe(SynthKind::normal, {0.4, 0.2, 0.1, 0.05}, 1.0, opt);
    const double au = std::min(rep.slope_au_lower, rep.slope_au_upper);
    const double ca = std::max(rep.slope_ca_lower, rep.slope_ca_upper);
    PropertyResult r{"Neyman-orthogonality probe", false, au, 1.9, ">=", "", elapsed(start)};
    r.passed = au >= 1.9 && ca <= 1.3 && r.seconds < 300.0;
    r.detail = "AU slopes (lower " + fmt("%.3f", rep.slope_au_lower) + ", upper " + fmt("%.3f", rep.slope_au_upper) +
               "), CA slopes (lower " + fmt("%.3f", rep.slope_ca_lower) + ", upper " +
               fmt("%.3f", rep.slope_ca_upper) + ") need <= 1.3, runtime limit 300 s";
    return r;
}

PropertyResult check_learner_ordering(Index seeds, Index n_train, Index n_test) {
    const auto start = Clock::now();
    double au_lo = 0.0, au_hi = 0.0, pi_lo = 0.0, pi_hi = 0.0;
    for (Index s = 0; s < seeds; ++s) {
        const SynthSetting setting{SynthKind::normal, std::uint64_t(1000 + s)};
        const Dataset train = generate_synth(setting, n_train, 0);
        const Dataset test = generate_synth(setting, n_test, 1);
        LearnerConfig cfg;
        cfg.grid = default_grid(train);
        cfg.gamma = 0.25;
        const EvalResult au = run_learner(train, test, {LearnerKind::au}, cfg, {}, SynthKind::normal);
        const EvalResult pi = run_learner(train, test, {LearnerKind::plugin}, cfg, {}, SynthKind::normal);
        au_lo += au.lower.rcrps;
        au_hi += au.upper.rcrps;
        pi_lo += pi.lower.rcrps;
        pi_hi += pi.upper.rcrps;
    }
    const double k = double(seeds);
    au_lo /= k;
    au_hi /= k;
    pi_lo /= k;
    pi_hi /= k;
    // Measured: the larger AU / plug-in ratio over the two sides.
    const double ratio = std::max(au_lo / pi_lo, au_hi / pi_hi);
    PropertyResult r{"learner ordering", false, ratio, 1.0, "<", "", elapsed(start)};
    r.passed = au_lo < pi_lo && au_hi < pi_hi && r.seconds < 600.0;
    r.detail = "mean out-sample rCRPS AU lower " + fmt("%.4f", au_lo) + " vs plug-in " + fmt("%.4f", pi_lo) +
               ", AU upper " + fmt("%.4f", au_hi) + " vs plug-in " + fmt("%.4f", pi_hi) + ", runtime limit 600 s";
    return r;
}

PropertyResult check_quasi_oracle(Index seeds, Index n_test) {
    const auto start = Clock::now();
    const std::vector<Index> sizes{250, 1000, 4000};
    std::vector<double> ns, gap_lo, gap_hi;
    for (Index s = 0; s < seeds; ++s) {
        for (Index n : sizes) {
            const SynthSetting setting{SynthKind::normal, std::uint64_t(2000 + s)};
            const Dataset train = generate_synth(setting, n, 0);
            const Dataset test = generate_synth(setting, n_test, 1);
            LearnerConfig cfg;
            cfg.grid = default_grid(train);
            cfg.gamma = 0.25;
            const EvalResult est = run_learner(train, test, {LearnerKind::au, false}, cfg, {}, SynthKind::normal);
            const EvalResult orc = run_learner(train, test, {LearnerKind::au, true}, cfg, {}, SynthKind::normal);
            ns.push_back(double(n));
            gap_lo.push_back(est.lower.rcrps - orc.lower.rcrps);
            gap_hi.push_back(est.upper.rcrps - orc.upper.rcrps);
        }
    }
    const double rho_lo = spearman(ns, gap_lo);
    const double rho_hi = spearman(ns, gap_hi);
    PropertyResult r{"quasi-oracle trend", false, std::max(rho_lo, rho_hi), -0.5, "<=", "", elapsed(start)};
    r.passed = rho_lo <= -0.5 && rho_hi <= -0.5;
    r.detail = "Spearman(gap, n) lower " + fmt("%.3f", rho_lo) + ", upper " + fmt("%.3f", rho_hi) +
               " over n in {250, 1000, 4000} x " + std::to_string(seeds) + " seeds";
    return r;
}

PropertyResult check_gamma_zero_reduction(std::uint64_t seed, Index rows) {
    const auto start = Clock::now();
    const Dataset data = generate_synth({SynthKind::normal, seed}, rows);
    LearnerConfig cfg;
    cfg.grid = default_grid(data);
    cfg.learner = LearnerKind::ca;
    const NuisanceFit fit = cross_fit(data, cfg.k_folds);
    const SurfacePair ca = pseudo_surface(data, fit, cfg);
    Index mismatched = 0;
    Index invalid = 0;
    auto valid_row = [&](const Vector& v) {
        try {
            GridCdf(cfg.grid.delta, v);
            return true;
        } catch (const std::invalid_argument&) {
            return false;
        }
    };
    for (Index i = 0; i < rows; ++i) {
        const BoundsPair pb = plugin_bounds(fit.for_row(i), data.x(i), cfg.grid, BoundKind::cdf);
        const Vector lo = ca.lower.values.row(i).transpose();
        const Vector hi = ca.upper.values.row(i).transpose();
        if (!(lo.array() == pb.lower().array()).all() || !(hi.array() == pb.upper().array()).all()) ++mismatched;
        if (!valid_row(lo) || !valid_row(hi)) ++invalid;
    }
    cfg.learner = LearnerKind::au;
    cfg.gamma = 1.0;
    const SurfacePair au = pseudo_surface(data, fit, cfg);
    Index violations = 0;
    for (Index i = 0; i < rows; ++i) {
        if (!valid_row(au.lower.values.row(i).transpose()) || !valid_row(au.upper.values.row(i).transpose())) ++violations;
    }
    PropertyResult r{"gamma=0 reduction and validity", false, double(mismatched + invalid), 0.0, "==", "", elapsed(start)};
    r.passed = mismatched == 0 && invalid == 0 && violations >= 1;
    r.detail = "rows differing from plug-in " + std::to_string(mismatched) + ", invalid gamma=0 rows " +
               std::to_string(invalid) + ", invalid gamma=1 rows " + std::to_string(violations) + " (need >= 1)";
    return r;
}

PropertyResult check_benchmark_reproducible(std::uint64_t seed) {
    const auto start = Clock::now();
    BenchmarkConfig cfg;
    cfg.seeds = {seed, seed + 1};
    cfg.n_train = {150};
    cfg.n_test = 150;
    const std::string a = metrics_to_csv(run_benchmark(cfg));
    const std::string b = metrics_to_csv(run_benchmark(cfg));
    PropertyResult r{"benchmark reproducibility", a == b, a == b ? 0.0 : 1.0, 0.0, "==", "", elapsed(start)};
    r.detail = "metrics CSV of two identical runs, " + std::to_string(a.size()) + " bytes";
    return r;
}

std::vector<PropertyResult> run_battery(bool full) {
    std::vector<PropertyResult> out;
    out.push_back(check_analytic_numeric());
    out.push_back(check_sharpness());
    out.push_back(check_fna_reduction());
    out.push_back(check_enclosure());
    out.push_back(check_one_step_mean_zero());
    out.push_back(check_orthogonality());
    out.push_back(check_gamma_zero_reduction());
    out.push_back(check_benchmark_reproducible());
    if (full) {
        out.push_back(check_learner_ordering());
        out.push_back(check_quasi_oracle());
    }
    return out;
}

}  // namespace cdte
