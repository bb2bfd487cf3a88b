#pragma once

#include <cmath>
#include <complex>

namespace qid {

using complex = std::complex<double>;

namespace detail {

inline constexpr double pi = 3.14159265358979323846;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

/// sin(y) - y without cancellation near 0.
inline double sin_minus_arg(double y) {
    if (std::abs(y) < 0.5) {
        const double y2 = y * y;
        return y * y2 *
               (-1.0 / 6.0 +
                y2 * (1.0 / 120.0 +
                      y2 * (-1.0 / 5040.0 + y2 * (1.0 / 362880.0 - y2 / 39916800.0))));
    }
    return std::sin(y) - y;
}

/// cos(y) - 1 as -2 sin^2(y/2); no cancellation for any y.
inline double cos_minus_one(double y) {
    const double s = std::sin(0.5 * y);
    return -2.0 * s * s;
}

/// Principal log(1 + z) without rounding 1 + z first.
inline complex log1p_complex(complex z) {
    const double x = z.real();
    const double y = z.imag();
    return {0.5 * std::log1p(2.0 * x + x * x + y * y), std::atan2(y, 1.0 + x)};
}

/// exp(z) - 1 without the subtraction of nearly equal quantities.
inline complex expm1_complex(complex z) {
    const double ex = std::expm1(z.real());
    const double cy = std::cos(z.imag());
    const double sy = std::sin(z.imag());
    return {ex * cy + cos_minus_one(z.imag()), (1.0 + ex) * sy};
}

}  // namespace detail
}  // namespace qid
