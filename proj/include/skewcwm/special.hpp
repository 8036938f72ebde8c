#pragma once

#include <array>

namespace skewcwm {

/// Natural log of the modified Bessel function of the second kind, log K_order(x).
/// Accepts any real order (K is even in the order) and any x > 0, including
/// arguments where K itself under- or overflows a double.
double log_bessel_k(double order, double x);

/// log K at orders (order - 1, order, order + 1), sharing one recurrence.
std::array<double, 3> log_bessel_k_triplet(double order, double x);

/// Derivative of log K_order(x) with respect to the order, by a central
/// difference with step 1e-4.
double dlog_bessel_k_dorder(double order, double x);

/// Digamma function for x > 0.
double digamma(double x);

/// Trigamma function for x > 0.
double trigamma(double x);

}  // namespace skewcwm
