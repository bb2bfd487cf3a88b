#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qid/dlog.hpp"
#include "qid/lk.hpp"
#include "qid/numeric.hpp"
#include "qid/spectral.hpp"

namespace qid {

enum class TrajectoryKind { difference_residuals, exp_residuals, exp_squares };

/// Weighted residual sums S(t, l) = sum_{k=0}^{n-1} (n - k) |r_k(h_l)| with
/// n = floor(t / h_l), tabulated over probe points t and a decreasing step
/// sequence h_l. Convergence of S to 0 as h_l -> 0 is the certificate the
/// second-difference criteria ask for.
struct ResidualTrajectory {
    TrajectoryKind kind = TrajectoryKind::difference_residuals;
    int sign = +1;  // meaningful for the exponentiated kinds
    std::vector<double> h_sequence;
    std::vector<double> t_probes;
    std::vector<std::vector<double>> weighted_sums;  // [probe][level]
};

enum class Verdict { infinitely_divisible, quasi_only, inconclusive, not_applicable };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::infinitely_divisible: return "infinitely_divisible";
        case Verdict::quasi_only: return "quasi_only";
        case Verdict::inconclusive: return "inconclusive";
        case Verdict::not_applicable: return "not_applicable";
    }
    return "inconclusive";
}

struct CriterionReport {
    Verdict verdict = Verdict::inconclusive;
    std::string reason;  // set when not_applicable
    std::vector<ResidualTrajectory> trajectories;
    std::optional<double> derivative_max_error;
    std::optional<SpectralPair> pair;
};

struct ClassifySettings {
    double h0 = 0.2;
    double ratio = 0.5;
    int levels = 7;
    std::vector<double> t_probes{0.5, 1.0, 2.0};
    double h_fd = 1e-2;
    double weighted_sum_tol = 1e-6;
    double derivative_tol = 1e-4;
};

namespace detail {

inline long floor_count(double t, double h) {
    // floor(t/h) with a nudge so exact multiples are not lost to rounding
    return static_cast<long>(std::floor(t / h + 1e-9));
}

}  // namespace detail

/// a_k(h) = D2_h Ln f(kh) - 2 * integral e^{ikhx}(cos(hx)-1)(1+x^2)/x^2 dG,
/// for k = 0..k_max. Identically zero (up to round-off) when G matches f.
inline std::vector<complex> second_difference_residuals(const LogTrace& trace,
                                                         const SpectralFunction& g, double h,
                                                         int k_max) {
    std::vector<complex> out(static_cast<std::size_t>(k_max) + 1);
    for (int k = 0; k <= k_max; ++k) {
        const double t = static_cast<double>(k) * h;
        out[static_cast<std::size_t>(k)] =
            second_difference(trace, t, h) - lk_second_difference_integral(g, t, h);
    }
    return out;
}

struct ExpDifferenceResiduals {
    std::vector<complex> b;            // phi - sign * integral
    std::vector<double> squared_phi;   // |phi|^2
};

/// phi_sign(kh, h) = exp(sign * D2_h Ln f(kh)) - 1 and its residual against
/// the (signed) second-difference integral, plus |phi|^2 for the squared-sum
/// diagnostic.
inline ExpDifferenceResiduals exp_difference_residuals(const LogTrace& trace,
                                                        const SpectralFunction& g, double h,
                                                        int k_max, int sign) {
    if (sign != 1 && sign != -1)
        throw std::invalid_argument("exp_difference_residuals: sign must be +1 or -1");
    ExpDifferenceResiduals r;
    r.b.resize(static_cast<std::size_t>(k_max) + 1);
    r.squared_phi.resize(static_cast<std::size_t>(k_max) + 1);
    const double s = static_cast<double>(sign);
    for (int k = 0; k <= k_max; ++k) {
        const double t = static_cast<double>(k) * h;
        const complex phi = detail::expm1_complex(s * second_difference(trace, t, h));
        r.b[static_cast<std::size_t>(k)] = phi - s * lk_second_difference_integral(g, t, h);
        r.squared_phi[static_cast<std::size_t>(k)] = std::norm(phi);
    }
    return r;
}

/// Tabulate S(t, l) for a residual magnitude supplied as |residual(k, h_l)|.
/// Each level's residuals are evaluated once and reused across probes.
template <class Residual>
ResidualTrajectory weighted_sum_trajectory(Residual&& residual, std::vector<double> h_sequence,
                                           std::vector<double> t_probes,
                                           TrajectoryKind kind =
                                               TrajectoryKind::difference_residuals,
                                           int sign = +1) {
    if (h_sequence.empty() || t_probes.empty())
        throw std::invalid_argument("weighted_sum_trajectory: empty h_sequence or t_probes");
    for (std::size_t l = 1; l < h_sequence.size(); ++l)
        if (!(h_sequence[l] < h_sequence[l - 1]))
            throw std::invalid_argument("weighted_sum_trajectory: h_sequence must decrease");
    const double t_min = *std::min_element(t_probes.begin(), t_probes.end());
    if (!(h_sequence.back() <= t_min))
        throw std::invalid_argument("weighted_sum_trajectory: h_sequence must reach min(t_probes)");

    ResidualTrajectory traj;
    traj.kind = kind;
    traj.sign = sign;
    traj.h_sequence = std::move(h_sequence);
    traj.t_probes = std::move(t_probes);
    traj.weighted_sums.assign(traj.t_probes.size(),
                              std::vector<double>(traj.h_sequence.size(), 0.0));

    for (std::size_t l = 0; l < traj.h_sequence.size(); ++l) {
        const double h = traj.h_sequence[l];
        long n_max = 0;
        for (double t : traj.t_probes) n_max = std::max(n_max, detail::floor_count(t, h));
        std::vector<double> magnitude(static_cast<std::size_t>(n_max), 0.0);
        for (long k = 0; k < n_max; ++k)
            magnitude[static_cast<std::size_t>(k)] = std::abs(residual(k, h));
        for (std::size_t p = 0; p < traj.t_probes.size(); ++p) {
            const long n = detail::floor_count(traj.t_probes[p], h);
            double s = 0;
            for (long k = 0; k < n; ++k)
                s += static_cast<double>(n - k) * magnitude[static_cast<std::size_t>(k)];
            traj.weighted_sums[p][l] = s;
        }
    }
    return traj;
}

/// A trajectory counts as converged when, at every probe t, the final sum is
/// below tol * (1 + n) and the last three levels are non-increasing up to the
/// same allowance (round-off on a passing trajectory may grow with n).
inline bool trajectory_converged(const ResidualTrajectory& traj, double tol) {
    const std::size_t levels = traj.h_sequence.size();
    if (levels == 0) return false;
    for (std::size_t p = 0; p < traj.t_probes.size(); ++p) {
        const auto& s = traj.weighted_sums[p];
        const double t = traj.t_probes[p];
        const auto allowance = [&](std::size_t l) {
            return tol * (1.0 + static_cast<double>(detail::floor_count(t, traj.h_sequence[l])));
        };
        if (!(s[levels - 1] < allowance(levels - 1))) return false;
        for (std::size_t l = levels >= 3 ? levels - 2 : 1; l < levels; ++l)
            if (!(s[l] <= s[l - 1] + allowance(l))) return false;
    }
    return true;
}

/// Max over probes of |numeric (Ln f)''(t) - lk_second_derivative(g, t)|,
/// where the numeric derivative is the Richardson extrapolation
/// (4 D(h/2) - D(h)) / 3 of D(h) = D2_h Ln f(t) / h^2. Both h_fd and h_fd/2
/// must be grid multiples.
inline double second_derivative_max_error(const LogTrace& trace, const SpectralFunction& g,
                                           std::span<const double> t_probes, double h_fd) {
    double worst = 0;
    for (double t : t_probes) {
        const complex d_full = second_difference(trace, t, h_fd) / (h_fd * h_fd);
        const complex d_half =
            second_difference(trace, t, 0.5 * h_fd) / (0.25 * h_fd * h_fd);
        const complex numeric = (4.0 * d_half - d_full) / 3.0;
        worst = std::max(worst, std::abs(numeric - lk_second_derivative(g, t)));
    }
    return worst;
}

namespace detail {

/// h0 * ratio^l rounded to positive grid multiples, duplicates collapsed.
inline std::vector<double> snapped_h_sequence(double h0, double ratio, int levels, double step) {
    std::vector<double> hs;
    long prev = std::numeric_limits<long>::max();
    for (int l = 0; l < levels; ++l) {
        const double target = h0 * std::pow(ratio, l);
        const long m = std::max<long>(1, std::lround(target / step));
        if (m < prev) {
            hs.push_back(static_cast<double>(m) * step);
            prev = m;
        }
    }
    return hs;
}

}  // namespace detail

/// Run the second-difference residual diagnostics and the second-derivative
/// comparator for (trace, pair) and classify:
///
///   * difference-residual sums converged and derivative error small, G
///     non-decreasing
///       -> infinitely_divisible
///   * converged but G signed -> quasi_only
///   * sums not converged -> inconclusive
///   * any evaluation failure -> not_applicable with the reason recorded
///
/// The exponentiated trajectories (both signs) are reported as independent
/// diagnostics and do not gate the verdict. Probe points and the h values are
/// snapped to grid multiples of the trace step.
inline CriterionReport classify(const LogTrace& trace, const SpectralPair& pair,
                                const ClassifySettings& settings = {}) {
    CriterionReport report;
    report.pair = pair;
    try {
        const double step = trace.step;
        const std::vector<double> hs =
            detail::snapped_h_sequence(settings.h0, settings.ratio, settings.levels, step);
        if (hs.empty()) throw std::invalid_argument("classify: empty h sequence");

        const auto a_residual = [&](long k, double h) {
            const double t = static_cast<double>(k) * h;
            return second_difference(trace, t, h) - lk_second_difference_integral(pair.g, t, h);
        };
        report.trajectories.push_back(weighted_sum_trajectory(
            a_residual, hs, settings.t_probes, TrajectoryKind::difference_residuals));

        for (int sign : {+1, -1}) {
            const double sgn = static_cast<double>(sign);
            const auto b_residual = [&, sgn](long k, double h) {
                const double t = static_cast<double>(k) * h;
                const complex phi = detail::expm1_complex(sgn * second_difference(trace, t, h));
                return phi - sgn * lk_second_difference_integral(pair.g, t, h);
            };
            const auto phi_sq = [&, sgn](long k, double h) {
                const double t = static_cast<double>(k) * h;
                return std::norm(detail::expm1_complex(sgn * second_difference(trace, t, h)));
            };
            report.trajectories.push_back(weighted_sum_trajectory(
                b_residual, hs, settings.t_probes, TrajectoryKind::exp_residuals, sign));
            report.trajectories.push_back(weighted_sum_trajectory(
                phi_sq, hs, settings.t_probes, TrajectoryKind::exp_squares, sign));
        }

        // Derivative comparator on snapped probes with an even grid multiple
        // for the finite-difference step (its half must land on the grid too).
        const double h_fd =
            static_cast<double>(std::max<long>(2, 2 * std::lround(settings.h_fd / (2 * step)))) *
            step;
        std::vector<double> probes;
        probes.reserve(settings.t_probes.size());
        for (double t : settings.t_probes)
            probes.push_back(static_cast<double>(std::max<long>(1, std::lround(t / step))) * step);
        report.derivative_max_error = second_derivative_max_error(trace, pair.g, probes, h_fd);

        const bool sums_ok = trajectory_converged(report.trajectories.front(),
                                                  settings.weighted_sum_tol);
        const bool deriv_ok = *report.derivative_max_error < settings.derivative_tol;
        if (sums_ok && deriv_ok)
            report.verdict = is_nondecreasing(pair.g) ? Verdict::infinitely_divisible
                                                      : Verdict::quasi_only;
        else
            report.verdict = Verdict::inconclusive;
    } catch (const std::exception& e) {
        report.verdict = Verdict::not_applicable;
        report.reason = e.what();
    }
    return report;
}

// --- JSON representation ---------------------------------------------------

inline const char* to_string(TrajectoryKind k) {
    switch (k) {
        case TrajectoryKind::difference_residuals: return "second_difference_residuals";
        case TrajectoryKind::exp_residuals: return "exp_difference_residuals";
        case TrajectoryKind::exp_squares: return "exp_difference_squares";
    }
    return "second_difference_residuals";
}

inline void to_json(nlohmann::json& j, const ResidualTrajectory& traj) {
    j = nlohmann::json{{"kind", to_string(traj.kind)},
                       {"sign", traj.sign},
                       {"h_sequence", traj.h_sequence},
                       {"t_probes", traj.t_probes},
                       {"weighted_sums", traj.weighted_sums}};
}

inline void to_json(nlohmann::json& j, const CriterionReport& report) {
    j = nlohmann::json{{"verdict", to_string(report.verdict)},
                       {"trajectories", report.trajectories}};
    if (!report.reason.empty()) j["reason"] = report.reason;
    if (report.derivative_max_error) j["derivative_max_error"] = *report.derivative_max_error;
    if (report.pair) j["pair"] = *report.pair;
}

}  // namespace qid
