#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qid/numeric.hpp"

namespace qid {

/// A point increment of the spectral function G.
struct SpectralAtom {
    double x = 0;
    double mass = 0;
};

/// Uniformly gridded density for the absolutely continuous part of dG,
/// integrated by composite Simpson.
struct SpectralDensity {
    double grid_min = 0;
    double grid_step = 0;
    std::vector<double> values;

    double node(std::size_t i) const { return grid_min + grid_step * static_cast<double>(i); }
};

/// A signed function G of bounded variation, stored through its increments:
/// finitely many atoms plus an optional gridded density. Immutable after
/// construction; all operations on it are pure.
class SpectralFunction {
public:
    SpectralFunction() = default;

    explicit SpectralFunction(std::vector<SpectralAtom> atoms,
                              std::optional<SpectralDensity> density = std::nullopt)
        : atoms_(normalize(std::move(atoms))), density_(std::move(density)) {}

    const std::vector<SpectralAtom>& atoms() const { return atoms_; }
    const std::optional<SpectralDensity>& density() const { return density_; }

    bool empty() const { return atoms_.empty() && !density_; }

    /// Mass of the atom at (within 1e-12 of) x, 0 when absent.
    double atom_mass_at(double x) const {
        for (const auto& a : atoms_)
            if (std::abs(a.x - x) <= 1e-12) return a.mass;
        return 0.0;
    }

private:
    // Sort by location, merge coincident atoms, drop exact zeros.
    static std::vector<SpectralAtom> normalize(std::vector<SpectralAtom> atoms) {
        std::sort(atoms.begin(), atoms.end(),
                  [](const SpectralAtom& a, const SpectralAtom& b) { return a.x < b.x; });
        std::vector<SpectralAtom> out;
        out.reserve(atoms.size());
        for (const auto& a : atoms) {
            if (!out.empty() && std::abs(a.x - out.back().x) <= 1e-12)
                out.back().mass += a.mass;
            else
                out.push_back(a);
        }
        std::erase_if(out, [](const SpectralAtom& a) { return a.mass == 0.0; });
        return out;
    }

    std::vector<SpectralAtom> atoms_;
    std::optional<SpectralDensity> density_;
};

/// Shift parameter plus spectral function.
struct SpectralPair {
    double gamma = 0;
    SpectralFunction g;
};

namespace detail {

/// Composite Simpson over the density grid of integrand(x_i, v_i). An odd
/// interval count is completed by one extra node carrying value 0.
template <class Integrand>
complex simpson_over_density(const SpectralDensity& d, Integrand&& integrand) {
    const std::size_t m = d.values.size();
    if (m < 2 || !(d.grid_step > 0)) return 0.0;
    std::size_t intervals = m - 1;
    if (intervals % 2 == 1) ++intervals;
    const auto sample = [&](std::size_t i) -> complex {
        return i < m ? integrand(d.node(i), d.values[i]) : complex{0.0, 0.0};
    };
    complex acc = 0.0;
    for (std::size_t i = 0; i + 2 <= intervals; i += 2)
        acc += sample(i) + 4.0 * sample(i + 1) + sample(i + 2);
    return acc * (d.grid_step / 3.0);
}

}  // namespace detail

/// ||G|| = sum of |atom masses| plus the Simpson integral of |density|.
inline double total_variation(const SpectralFunction& g) {
    double tv = 0;
    for (const auto& a : g.atoms()) tv += std::abs(a.mass);
    if (g.density())
        tv += detail::simpson_over_density(*g.density(),
                                           [](double, double v) { return complex{std::abs(v), 0.0}; })
                  .real();
    return tv;
}

/// Minimal Jordan decomposition (G+, G-): masses and density values split by
/// sign, both parts non-negative, G+ - G- = G atom-by-atom and node-by-node.
inline std::pair<SpectralFunction, SpectralFunction> jordan_decompose(const SpectralFunction& g) {
    std::vector<SpectralAtom> pos, neg;
    for (const auto& a : g.atoms()) {
        if (a.mass > 0)
            pos.push_back(a);
        else
            neg.push_back({a.x, -a.mass});
    }
    std::optional<SpectralDensity> dpos, dneg;
    if (g.density()) {
        dpos = SpectralDensity{g.density()->grid_min, g.density()->grid_step,
                               std::vector<double>(g.density()->values.size(), 0.0)};
        dneg = dpos;
        for (std::size_t i = 0; i < g.density()->values.size(); ++i) {
            const double v = g.density()->values[i];
            (v >= 0 ? dpos->values[i] : dneg->values[i]) = std::abs(v);
        }
    }
    return {SpectralFunction(std::move(pos), std::move(dpos)),
            SpectralFunction(std::move(neg), std::move(dneg))};
}

/// G is treated as non-decreasing when every atom mass and density value is
/// >= -eps with eps = 1e-9 * max(||G||, 1); this absorbs recovery round-off
/// without letting a genuinely signed G pass.
inline bool is_nondecreasing(const SpectralFunction& g) {
    const double eps = 1e-9 * std::max(total_variation(g), 1.0);
    for (const auto& a : g.atoms())
        if (a.mass < -eps) return false;
    if (g.density())
        for (double v : g.density()->values)
            if (v < -eps) return false;
    return true;
}

/// Integral of the kernel against dG. `kernel_at_zero` supplies the removable
/// singularity's limit, used for any atom or density node within 1e-12 of 0.
template <class Kernel>
complex integrate_kernel(const SpectralFunction& g, Kernel&& kernel, complex kernel_at_zero) {
    complex acc = 0.0;
    for (const auto& a : g.atoms())
        acc += a.mass * (std::abs(a.x) <= 1e-12 ? kernel_at_zero : complex(kernel(a.x)));
    if (g.density())
        acc += detail::simpson_over_density(*g.density(), [&](double x, double v) -> complex {
            return v * (std::abs(x) <= 1e-12 ? kernel_at_zero : complex(kernel(x)));
        });
    return acc;
}

// --- JSON representation ---------------------------------------------------
//
//   {"atoms": [{"x": ..., "mass": ...}, ...],
//    "density": {"grid_min": ..., "grid_step": ..., "values": [...]}}
//
// "density" is omitted when absent. SpectralPair adds {"gamma": ...}.

inline void to_json(nlohmann::json& j, const SpectralAtom& a) {
    j = nlohmann::json{{"x", a.x}, {"mass", a.mass}};
}

inline void from_json(const nlohmann::json& j, SpectralAtom& a) {
    j.at("x").get_to(a.x);
    j.at("mass").get_to(a.mass);
}

inline void to_json(nlohmann::json& j, const SpectralFunction& g) {
    j = nlohmann::json{{"atoms", g.atoms()}};
    if (g.density()) {
        j["density"] = {{"grid_min", g.density()->grid_min},
                        {"grid_step", g.density()->grid_step},
                        {"values", g.density()->values}};
    }
}

inline void from_json(const nlohmann::json& j, SpectralFunction& g) {
    std::vector<SpectralAtom> atoms = j.at("atoms").get<std::vector<SpectralAtom>>();
    std::optional<SpectralDensity> density;
    if (j.contains("density")) {
        SpectralDensity d;
        j.at("density").at("grid_min").get_to(d.grid_min);
        j.at("density").at("grid_step").get_to(d.grid_step);
        j.at("density").at("values").get_to(d.values);
        density = std::move(d);
    }
    g = SpectralFunction(std::move(atoms), std::move(density));
}

inline void to_json(nlohmann::json& j, const SpectralPair& p) {
    j = nlohmann::json{{"gamma", p.gamma}, {"g", p.g}};
}

inline void from_json(const nlohmann::json& j, SpectralPair& p) {
    j.at("gamma").get_to(p.gamma);
    j.at("g").get_to(p.g);
}

}  // namespace qid
