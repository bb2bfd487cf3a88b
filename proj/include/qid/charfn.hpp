#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "qid/numeric.hpp"

namespace qid {

/// One atom of a discrete law: P(X = x) = mass.
struct PmfAtom {
    double x = 0;
    double mass = 0;
};

/// Immutable, composable characteristic function f(t) = E exp(itX).
///
/// Degenerate, Gaussian and Poisson are closed-form kinds so they can serve
/// as exact references; finite discrete laws evaluate by direct summation.
/// Arbitrary location-scale families and sums of independent components are
/// built with scaled_shift and convolution. Values are cheap to copy and
/// safe to evaluate concurrently.
class CharFn {
public:
    struct Degenerate;
    struct Gaussian;
    struct Poisson;
    struct DiscretePmf;
    struct Convolution;
    struct ScaledShift;

    CharFn();

    static CharFn degenerate(double location);
    static CharFn gaussian(double mean, double variance);
    static CharFn poisson(double rate);
    static CharFn discrete_pmf(std::vector<PmfAtom> atoms);
    static CharFn convolution(std::vector<CharFn> parts);
    static CharFn scaled_shift(CharFn base, double scale, double shift);

    /// f(t).
    complex operator()(double t) const;

    /// Lattice spacing d such that every support point is an integer multiple
    /// of d, when one exists (1 for integer-supported laws). Laws with a
    /// continuous component have none.
    std::optional<double> lattice() const;

    template <class Visitor>
    decltype(auto) visit(Visitor&& v) const;

private:
    struct Node;

    template <class K>
    explicit CharFn(K kind);

    std::shared_ptr<const Node> node_;
};

struct CharFn::Degenerate {
    double location = 0;
};
struct CharFn::Gaussian {
    double mean = 0;
    double variance = 0;
};
struct CharFn::Poisson {
    double rate = 0;
};
struct CharFn::DiscretePmf {
    std::vector<PmfAtom> atoms;
};
struct CharFn::Convolution {
    std::vector<CharFn> parts;
};
struct CharFn::ScaledShift {
    CharFn base;
    double scale = 1;
    double shift = 0;
};

struct CharFn::Node {
    std::variant<Degenerate, Gaussian, Poisson, DiscretePmf, Convolution, ScaledShift> kind;
};

template <class K>
CharFn::CharFn(K kind) : node_(std::make_shared<const Node>(Node{std::move(kind)})) {}

inline CharFn::CharFn() : CharFn(Degenerate{0.0}) {}

template <class Visitor>
decltype(auto) CharFn::visit(Visitor&& v) const {
    return std::visit(std::forward<Visitor>(v), node_->kind);
}

inline CharFn CharFn::degenerate(double location) { return CharFn(Degenerate{location}); }

inline CharFn CharFn::gaussian(double mean, double variance) {
    if (!(variance >= 0.0)) throw std::invalid_argument("gaussian: variance must be >= 0");
    return CharFn(Gaussian{mean, variance});
}

inline CharFn CharFn::poisson(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("poisson: rate must be > 0");
    return CharFn(Poisson{rate});
}

inline CharFn CharFn::discrete_pmf(std::vector<PmfAtom> atoms) {
    if (atoms.empty()) throw std::invalid_argument("discrete_pmf: no atoms");
    double total = 0;
    for (const auto& a : atoms) {
        if (!(a.mass > 0.0)) throw std::invalid_argument("discrete_pmf: masses must be > 0");
        total += a.mass;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("discrete_pmf: masses must sum to 1");
    return CharFn(DiscretePmf{std::move(atoms)});
}

inline CharFn CharFn::convolution(std::vector<CharFn> parts) {
    if (parts.empty()) throw std::invalid_argument("convolution: no components");
    return CharFn(Convolution{std::move(parts)});
}

inline CharFn CharFn::scaled_shift(CharFn base, double scale, double shift) {
    return CharFn(ScaledShift{std::move(base), scale, shift});
}

inline complex CharFn::operator()(double t) const {
    return visit(detail::overloaded{
        [&](const Degenerate& d) -> complex { return std::polar(1.0, t * d.location); },
        [&](const Gaussian& g) -> complex {
            return std::polar(std::exp(-0.5 * g.variance * t * t), g.mean * t);
        },
        [&](const Poisson& p) -> complex {
            return std::exp(complex{p.rate * detail::cos_minus_one(t), p.rate * std::sin(t)});
        },
        [&](const DiscretePmf& pmf) -> complex {
            complex acc = 0;
            for (const auto& a : pmf.atoms) acc += a.mass * std::polar(1.0, t * a.x);
            return acc;
        },
        [&](const Convolution& c) -> complex {
            complex acc = 1;
            for (const auto& part : c.parts) acc *= part(t);
            return acc;
        },
        [&](const ScaledShift& s) -> complex {
            return std::polar(1.0, t * s.shift) * s.base(s.scale * t);
        }});
}

/// Evaluate f(t); total in t.
inline complex eval_cf(const CharFn& cf, double t) { return cf(t); }

/// min over the grid of |f(t)|; guards the standing requirement f != 0.
inline double min_modulus_on(const CharFn& cf, std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("min_modulus_on: empty grid");
    double best = std::abs(cf(grid[0]));
    for (double t : grid.subspan(1)) best = std::min(best, std::abs(cf(t)));
    return best;
}

namespace detail {

/// gcd of two positive reals up to tolerance; 0 when it degenerates.
inline double float_gcd(double a, double b, double tol) {
    a = std::abs(a);
    b = std::abs(b);
    if (a < b) std::swap(a, b);
    while (b > tol) {
        double r = std::fmod(a, b);
        if (r < tol || b - r < tol) r = 0.0;
        a = b;
        b = r;
    }
    return a;
}

/// Largest d with every x a (near-)integer multiple of d; empty when the
/// points are incommensurable at tolerance 1e-9.
inline std::optional<double> common_spacing(std::span<const double> xs) {
    constexpr double tol = 1e-9;
    double g = 0;
    for (double x : xs) {
        const double v = std::abs(x);
        if (v <= tol) continue;
        g = (g == 0) ? v : float_gcd(g, v, tol);
        if (g < 1e-6) return std::nullopt;
    }
    if (g == 0) return 1.0;  // all support points at 0
    for (double x : xs) {
        const double q = x / g;
        if (std::abs(q - std::round(q)) > 1e-6) return std::nullopt;
    }
    return g;
}

}  // namespace detail

inline std::optional<double> CharFn::lattice() const {
    using Opt = std::optional<double>;
    return visit(detail::overloaded{
        [](const Degenerate& d) -> Opt {
            return d.location == 0.0 ? Opt(1.0) : Opt(std::abs(d.location));
        },
        [](const Gaussian& g) -> Opt {
            if (g.variance > 0.0) return std::nullopt;
            return g.mean == 0.0 ? Opt(1.0) : Opt(std::abs(g.mean));
        },
        [](const Poisson&) -> Opt { return 1.0; },
        [](const DiscretePmf& pmf) -> Opt {
            std::vector<double> xs;
            xs.reserve(pmf.atoms.size());
            for (const auto& a : pmf.atoms) xs.push_back(a.x);
            return detail::common_spacing(xs);
        },
        [](const Convolution& c) -> Opt {
            double g = 0;
            for (const auto& part : c.parts) {
                auto d = part.lattice();
                if (!d) return std::nullopt;
                g = (g == 0) ? *d : detail::float_gcd(g, *d, 1e-9);
                if (g != 0 && g < 1e-6) return std::nullopt;
            }
            return g == 0 ? Opt(1.0) : Opt(g);
        },
        [](const ScaledShift& s) -> Opt {
            auto d = s.base.lattice();
            if (!d) return std::nullopt;
            double g = *d * std::abs(s.scale);
            if (std::abs(s.shift) > 1e-9)
                g = (g == 0) ? std::abs(s.shift) : detail::float_gcd(g, std::abs(s.shift), 1e-9);
            if (g != 0 && g < 1e-6) return std::nullopt;
            return g == 0 ? Opt(1.0) : Opt(g);
        }});
}

}  // namespace qid
