#pragma once

// Property battery: each check recomputes a measured quantity against a fixed
// threshold with fixed seeds and reports pass/fail.

#include "cdte/bench.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cdte {

struct PropertyResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string relation;  // how measured compares to threshold when passing, e.g. "<"
    std::string detail;
    double seconds = 0.0;
};

std::string format_result(const PropertyResult& r);

/// Grid Makarov bounds of normal marginals vs the closed form, 50 random cases.
PropertyResult check_analytic_numeric(std::uint64_t seed = 11, Index cases = 50);
/// cdf_bounds_mixed vs the coupling oracle on random discrete instances.
PropertyResult check_sharpness(std::uint64_t seed = 12, Index cases = 100);
/// fna_bounds vs per-row cdf_bounds_mixed at delta = -1.
PropertyResult check_fna_reduction(std::uint64_t seed = 13, Index cases = 100);
/// Monte Carlo CDF of the effect under the comonotone and antitone couplings
/// of the normal setting stays inside the true bounds.
PropertyResult check_enclosure(std::uint64_t seed = 14, Index draws = 1000000);
/// Oracle-nuisance CDF correction terms average to zero at every delta.
PropertyResult check_one_step_mean_zero(std::uint64_t seed = 15, Index rows = 10000);
/// AU slope >= 1.9 and CA slope <= 1.3 for the risk perturbation curve.
PropertyResult check_orthogonality(std::uint64_t seed = 16, Index draws = 100000);
/// AU (gamma 0.25) beats the plug-in learner in out-sample rCRPS on both sides.
PropertyResult check_learner_ordering(Index seeds = 10, Index n_train = 1000, Index n_test = 1000);
/// Estimated-vs-oracle AU gap decreases with n (Spearman <= -0.5).
PropertyResult check_quasi_oracle(Index seeds = 10, Index n_test = 1000);
/// gamma = 0 surfaces equal the plug-in surface and are valid CDFs; gamma = 1
/// produces at least one invalid row.
PropertyResult check_gamma_zero_reduction(std::uint64_t seed = 19, Index rows = 500);
/// Two benchmark runs with one config serialize to identical CSV text.
PropertyResult check_benchmark_reproducible(std::uint64_t seed = 20);

/// Fast checks by default; `full` adds the learner-ordering and quasi-oracle runs.
std::vector<PropertyResult> run_battery(bool full);

}  // namespace cdte
