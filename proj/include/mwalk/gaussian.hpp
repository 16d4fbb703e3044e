#pragma once

#include "mwalk/errors.hpp"

namespace mwalk {

// Centered normal law. CDF goes through erfc (absolute error well below
// 1e-12); the quantile is Acklam's rational approximation polished by one
// Halley step of the CDF, giving ~1e-15 absolute error in the bulk and
// comfortably below the 1e-9 contract everywhere.
struct GaussianLaw {
    double variance = 1.0;

    double sigma() const;
    double cdf(double x) const;
    double pdf(double x) const;
    double quantile(double u) const;  // u in (0,1); variance 0 -> 0
};

// Standard normal helpers.
double std_normal_cdf(double x);
double std_normal_pdf(double x);
double std_normal_quantile(double u);

}  // namespace mwalk
