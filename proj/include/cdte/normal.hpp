#pragma once

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>

namespace cdte {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// Standard normal quantile; u outside (0, 1) maps to -inf / +inf.
inline double normal_quantile(double u) {
    if (!(u > 0.0)) return -INFINITY;
    if (!(u < 1.0)) return INFINITY;
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

inline double logistic(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

}  // namespace cdte
