#pragma once

#include <cmath>
#include <complex>

#include "qid/numeric.hpp"
#include "qid/spectral.hpp"

namespace qid {

/// (e^{itx} - 1 - it sin x) (1 + x^2) / x^2 for x != 0; its x -> 0 limit is
/// -t^2/2. Both parts are evaluated in cancellation-free form, and the
/// imaginary part vanishes identically at t = 1.
inline complex lk_kernel(double t, double x) {
    const double w = (1.0 + x * x) / (x * x);
    return {detail::cos_minus_one(t * x) * w,
            (detail::sin_minus_arg(t * x) - t * detail::sin_minus_arg(x)) * w};
}

/// Log-characteristic function of the pair (gamma, G):
///
///   i t gamma + integral of (e^{itx} - 1 - it sin x)(1 + x^2)/x^2 dG(x).
///
/// Exactly 0 at t = 0 and Hermitian in t.
inline complex lk_log_cf(const SpectralPair& pair, double t) {
    const complex integral =
        integrate_kernel(pair.g, [t](double x) { return lk_kernel(t, x); },
                         complex{-0.5 * t * t, 0.0});
    return complex{0.0, pair.gamma * t} + integral;
}

/// The exact second difference of the log-CF as an integral:
///
///   2 * integral of e^{itx} (cos(hx) - 1)(1 + x^2)/x^2 dG(x),
///
/// with the x -> 0 integrand limit -h^2/2 (so an atom at 0 contributes -h^2).
inline complex lk_second_difference_integral(const SpectralFunction& g, double t, double h) {
    const auto kernel = [t, h](double x) -> complex {
        const double w = (1.0 + x * x) / (x * x);
        return std::polar(1.0, t * x) * (detail::cos_minus_one(h * x) * w);
    };
    return 2.0 * integrate_kernel(g, kernel, complex{-0.5 * h * h, 0.0});
}

/// (Ln f)''(t) = -integral of e^{itx} (1 + x^2) dG(x); the integrand value at
/// x = 0 is 1. Finite whenever (1 + x^2) d|G| is, which holds for every
/// finitely represented G.
inline complex lk_second_derivative(const SpectralFunction& g, double t) {
    return -integrate_kernel(
        g, [t](double x) -> complex { return std::polar(1.0, t * x) * (1.0 + x * x); },
        complex{1.0, 0.0});
}

}  // namespace qid
