#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qid/dlog.hpp"
#include "qid/errors.hpp"
#include "qid/lk.hpp"
#include "qid/numeric.hpp"
#include "qid/spectral.hpp"

namespace qid {

/// Im Ln f(1). The imaginary part of the log-CF kernel vanishes identically
/// at t = 1, so this equals the shift parameter gamma for any admissible
/// representation. Requires 1 to be a trace node.
inline double recover_gamma(const LogTrace& trace) { return trace.at(1.0).imag(); }

namespace detail {

struct PeriodSampling {
    long samples = 0;  // N uniform samples of one 2*pi period
    long stride = 0;   // grid steps between consecutive samples
};

/// For lattice laws -(Ln f)'' is 2*pi-periodic (plus a constant), so its
/// Fourier coefficients are computed from N >= 4*k_max + 4 uniform samples of
/// one period. The samples must land on grid nodes, which requires the step
/// to divide 2*pi; N is the smallest divisor of that node count admitting the
/// requested bandwidth. The window is centred, [-pi, pi), where |f| is
/// largest, so laws with a Gaussian component stay above the zero floor.
inline PeriodSampling period_sampling(const LogTrace& trace, int k_max) {
    if (k_max < 0) throw std::invalid_argument("recover: k_max must be >= 0");
    const double nodes_real = 2.0 * pi / trace.step;
    const long nodes = std::lround(nodes_real);
    if (nodes < 8 || std::abs(nodes_real - static_cast<double>(nodes)) > 1e-12 * nodes_real)
        throw std::invalid_argument(
            "recover: trace step must divide the lattice period (use step = 2*pi/P)");
    const long need = 4L * k_max + 4;
    if (need > nodes)
        throw std::invalid_argument("recover: k_max too large for this grid step");
    long samples = 0;
    for (long d = need; d <= nodes; ++d) {
        if (nodes % d == 0) {
            samples = d;
            break;
        }
    }
    const long stride = nodes / samples;
    const long farthest = (samples / 2) * stride + 4;
    if (farthest > static_cast<long>(trace.center()))
        throw std::invalid_argument(
            "recover: trace must cover the period window [-pi, pi] plus the difference stencil");
    return {samples, stride};
}

/// -(Ln f)'' at node offset `base`, by sixth-order Richardson extrapolation
/// of the second difference over step counts {4, 2, 1}.
inline complex neg_second_derivative_at(const LogTrace& trace, long base) {
    const double s = trace.step;
    const auto d2 = [&](long halfsteps) {
        return trace.at_offset(base - halfsteps) + trace.at_offset(base + halfsteps) -
               2.0 * trace.at_offset(base);
    };
    const complex d4 = d2(4) / (16.0 * s * s);
    const complex d2m = d2(2) / (4.0 * s * s);
    const complex d1 = d2(1) / (s * s);
    const complex r1a = (4.0 * d2m - d4) / 3.0;
    const complex r1b = (4.0 * d1 - d2m) / 3.0;
    return -(16.0 * r1b - r1a) / 15.0;
}

inline std::vector<complex> period_samples(const LogTrace& trace, const PeriodSampling& ps) {
    std::vector<complex> q(static_cast<std::size_t>(ps.samples));
    for (long j = 0; j < ps.samples; ++j) {
        const long offset = (j - ps.samples / 2) * ps.stride;  // t_j in [-pi, pi)
        q[static_cast<std::size_t>(j)] = neg_second_derivative_at(trace, offset);
    }
    return q;
}

inline complex fourier_coefficient(const std::vector<complex>& q, long k) {
    const long n = static_cast<long>(q.size());
    complex acc = 0;
    for (long j = 0; j < n; ++j)
        acc += q[static_cast<std::size_t>(j)] *
               std::polar(1.0, -2.0 * pi * static_cast<double>((j - n / 2) * k) /
                                   static_cast<double>(n));
    return acc / static_cast<double>(n);
}

}  // namespace detail

/// Recover the spectral pair of an integer-lattice law (with optional
/// Gaussian and shift components) from its distinguished-log trace.
///
/// -(Ln f)''(t) = sum_k (1 + k^2) G{k} e^{ikt} for such laws, so the discrete
/// Fourier coefficients c_k of the numerically differentiated trace give the
/// atom masses G{k} = Re(c_k) / (1 + k^2) for |k| <= k_max; masses below
/// 1e-12 are dropped. Spectral energy beyond the bandwidth (measured by the
/// Parseval mismatch) above 1e-6, or coefficients with a material imaginary
/// part, raise non_lattice_error.
///
/// gamma is Im Ln f(1) when 1 is a trace node. On period-commensurable grids
/// 1 never is, so it is extracted instead at the node t* nearest 1 through
/// the identity gamma = (Im Ln f(t*) - Im L(t*)) / t*, where L is the log-CF
/// integral of the recovered G - the same identity that makes Im Ln f(1)
/// work, valid at every t.
inline SpectralPair recover_lattice_spectral(const LogTrace& trace, int k_max) {
    const auto ps = detail::period_sampling(trace, k_max);
    const std::vector<complex> q = detail::period_samples(trace, ps);

    double energy_total = 0;
    for (const complex& v : q) energy_total += std::norm(v);
    energy_total /= static_cast<double>(q.size());

    std::vector<SpectralAtom> atoms;
    double energy_model = 0;
    for (long k = -k_max; k <= k_max; ++k) {
        const complex c = detail::fourier_coefficient(q, k);
        energy_model += std::norm(c);
        const complex mass = c / (1.0 + static_cast<double>(k) * static_cast<double>(k));
        if (std::abs(mass.imag()) >= 1e-9)
            throw non_lattice_error("recover: spectral mass at k = " + std::to_string(k) +
                                    " has non-negligible imaginary part");
        if (std::abs(mass.real()) >= 1e-12)
            atoms.push_back({static_cast<double>(k), mass.real()});
    }
    if (energy_total - energy_model > 1e-6)
        throw non_lattice_error(
            "recover: spectral energy beyond |k| <= k_max; law is not lattice at this bandwidth");

    SpectralFunction g(std::move(atoms));

    double gamma = 0;
    if (trace.contains(1.0)) {
        gamma = recover_gamma(trace);
    } else {
        const long m = std::max<long>(1, std::lround(1.0 / trace.step));
        const double t_star = static_cast<double>(m) * trace.step;
        const complex integral = integrate_kernel(
            g, [t_star](double x) { return lk_kernel(t_star, x); },
            complex{-0.5 * t_star * t_star, 0.0});
        gamma = (trace.at_offset(m).imag() - integral.imag()) / t_star;
    }
    return {gamma, std::move(g)};
}

/// The constant part of -(Ln f)'' - the k = 0 Fourier coefficient - which is
/// the mass of G at 0, i.e. the Gaussian variance component.
inline double recover_gaussian_component(const LogTrace& trace, int k_max = 8) {
    const auto ps = detail::period_sampling(trace, k_max);
    const complex c0 = detail::fourier_coefficient(detail::period_samples(trace, ps), 0);
    if (std::abs(c0.imag()) >= 1e-9)
        throw non_lattice_error("recover: Gaussian component has non-negligible imaginary part");
    return c0.real();
}

/// Split (gamma, G) into two pairs with non-decreasing spectral functions via
/// the Jordan decomposition: (gamma, G+) and (0, G-). Both define infinitely
/// divisible laws and their log-CFs differ by the input's log-CF pointwise.
inline std::pair<SpectralPair, SpectralPair> factorize(const SpectralPair& pair) {
    auto [pos, neg] = jordan_decompose(pair.g);
    return {SpectralPair{pair.gamma, std::move(pos)}, SpectralPair{0.0, std::move(neg)}};
}

}  // namespace qid
