#pragma once

namespace tms {

/// Digamma function for x > 0. Returns NaN outside the domain.
///
/// Shifts the argument upward with psi(x) = psi(x + 1) - 1/x until x >= 10,
/// then evaluates the asymptotic expansion through the x^-12 term.
double digamma(double x);

/// Trigamma function for x > 0, built the same way from
/// psi'(x) = psi'(x + 1) + 1/x^2.
double trigamma(double x);

/// psi(x) - psi(y). When x - y is a whole number n <= 64 this is the finite
/// sum of 1/(y + k), k < n, which is exact for small integers and avoids
/// cancellation; otherwise the plain difference.
double digamma_difference(double x, double y);

}  // namespace tms
