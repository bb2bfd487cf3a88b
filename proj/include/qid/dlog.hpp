#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qid/charfn.hpp"
#include "qid/errors.hpp"
#include "qid/numeric.hpp"

namespace qid {

/// The distinguished logarithm Ln f(t) = ln|f(t)| + i Arg f(t) sampled on a
/// uniform grid that is symmetric about 0 and contains 0.
///
/// The argument is the continuous branch normalised by Arg f(0) = 0, so the
/// stored values are continuous in t by construction; the value at t = 0 is
/// exactly 0. The real part is even and the imaginary part odd.
struct LogTrace {
    std::vector<double> grid;
    std::vector<complex> values;
    double step = 0;

    std::size_t size() const { return grid.size(); }
    std::size_t center() const { return grid.size() / 2; }
    double t_max() const { return grid.empty() ? 0.0 : grid.back(); }

    /// Signed number of steps from 0 for an on-grid t; off_grid_error otherwise.
    long offset_of(double t) const {
        if (step <= 0 || grid.empty()) throw off_grid_error("trace is empty");
        const long k = std::lround(t / step);
        if (std::abs(static_cast<double>(k) * step - t) > 1e-9 * std::max(1.0, std::abs(t)))
            throw off_grid_error("t = " + std::to_string(t) + " is not a grid node");
        if (std::abs(k) > static_cast<long>(center()))
            throw off_grid_error("t = " + std::to_string(t) + " is outside the trace range");
        return k;
    }

    bool contains(double t) const {
        if (step <= 0 || grid.empty()) return false;
        const long k = std::lround(t / step);
        return std::abs(static_cast<double>(k) * step - t) <= 1e-9 * std::max(1.0, std::abs(t)) &&
               std::abs(k) <= static_cast<long>(center());
    }

    /// Value at the node `off` steps from 0.
    complex at_offset(long off) const {
        const long i = static_cast<long>(center()) + off;
        if (i < 0 || i >= static_cast<long>(values.size()))
            throw off_grid_error("node offset " + std::to_string(off) +
                                 " is outside the trace range");
        return values[static_cast<std::size_t>(i)];
    }

    complex at(double t) const { return at_offset(offset_of(t)); }
};

namespace detail {

inline constexpr double kCfZeroFloor = 1e-12;
inline constexpr int kMaxUnwrapDepth = 40;

inline void check_nonzero(const complex& v, double t) {
    if (std::abs(v) < kCfZeroFloor)
        throw zero_cf_error("|f(" + std::to_string(t) + ")| < 1e-12; the law has no usable "
                            "distinguished logarithm on this grid");
}

/// Continuous argument increment of f over [t0, t1]. A principal increment of
/// magnitude >= pi/2 could hide a winding, so the cell is halved until every
/// sub-increment is small, up to kMaxUnwrapDepth levels.
template <class F>
double arg_increment(F& f, double t0, double t1, const complex& f0, const complex& f1,
                     int depth) {
    const double d = std::arg(f1 / f0);
    if (std::abs(d) < pi / 2) return d;
    if (depth >= kMaxUnwrapDepth)
        throw zero_cf_error("phase increment near t = " + std::to_string(t0) +
                            " cannot be resolved; characteristic function is too close to zero");
    const double tm = 0.5 * (t0 + t1);
    const complex fm = f(tm);
    check_nonzero(fm, tm);
    return arg_increment(f, t0, tm, f0, fm, depth + 1) +
           arg_increment(f, tm, t1, fm, f1, depth + 1);
}

}  // namespace detail

/// Sample the distinguished logarithm of a nowhere-vanishing function on
/// [-t_max, t_max] with the given uniform step.
///
/// The positive half-line is tracked by accumulating the continuous argument
/// increments of consecutive ratios f(t_{k+1})/f(t_k); the negative half is
/// filled by conjugate symmetry. `step` must divide `t_max`. Throws
/// zero_cf_error when |f| falls below 1e-12 at any (refined) sample.
template <class F>
LogTrace distinguished_log(F&& f, double t_max, double step) {
    if (!(step > 0) || !(t_max > 0))
        throw std::invalid_argument("distinguished_log: t_max and step must be > 0");
    const long n = std::lround(t_max / step);
    if (n < 1 || std::abs(static_cast<double>(n) * step - t_max) > 1e-9 * std::max(1.0, t_max))
        throw std::invalid_argument("distinguished_log: step must divide t_max");

    LogTrace trace;
    trace.step = step;
    trace.grid.resize(2 * static_cast<std::size_t>(n) + 1);
    trace.values.resize(trace.grid.size());
    const std::size_t c = static_cast<std::size_t>(n);

    trace.grid[c] = 0.0;
    trace.values[c] = 0.0;
    complex f_prev = f(0.0);
    detail::check_nonzero(f_prev, 0.0);

    double phase = 0.0;
    for (long k = 1; k <= n; ++k) {
        const double t = static_cast<double>(k) * step;
        const complex f_k = f(t);
        detail::check_nonzero(f_k, t);
        phase += detail::arg_increment(f, t - step, t, f_prev, f_k, 0);
        trace.grid[c + k] = t;
        trace.values[c + k] = {std::log(std::abs(f_k)), phase};
        trace.grid[c - k] = -t;
        trace.values[c - k] = std::conj(trace.values[c + k]);
        f_prev = f_k;
    }
    return trace;
}

inline LogTrace distinguished_log(const CharFn& cf, double t_max, double step) {
    return distinguished_log([&cf](double t) { return cf(t); }, t_max, step);
}

/// Ln f(t-h) + Ln f(t+h) - 2 Ln f(t); all three points must be grid nodes.
inline complex second_difference(const LogTrace& trace, double t, double h) {
    const long kt = trace.offset_of(t);
    const long kh = trace.offset_of(h);
    return trace.at_offset(kt - kh) + trace.at_offset(kt + kh) - 2.0 * trace.at_offset(kt);
}

/// Telescoped double sum of second differences taken at t = jh:
///
///   sum_{k=1..n} ( sum_{j=1..k-1} d2[j] + d2[0]/2 )  =  Ln f(nh) - i n Arg f(h).
///
/// The empty sum (n = 0) is 0.
inline complex reconstruct_from_second_differences(std::span<const complex> d2, long n) {
    if (n < 0) throw std::invalid_argument("reconstruct_from_second_differences: n < 0");
    if (n == 0) return 0.0;
    if (static_cast<long>(d2.size()) < n)
        throw std::invalid_argument("reconstruct_from_second_differences: need d2[0..n-1]");
    complex inner = 0.5 * d2[0];
    complex total = 0.0;
    for (long k = 1; k <= n; ++k) {
        total += inner;
        if (k < n) inner += d2[static_cast<std::size_t>(k)];
    }
    return total;
}

}  // namespace qid
