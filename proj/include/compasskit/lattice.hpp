#pragma once
// ============================================================================
// Lattice geometries: open square, sheared parallelogram cut, cylinder,
// cubic block, vacancy-diluted variants and fully custom site/bond lists.
//
// Conventions
//   * 2D coordinates are (column c, row rho); 3D adds a layer coordinate.
//   * Site indexing is row-major and deterministic: rows ascending, columns
//     ascending within a row (layers outermost in 3D), vacancies skipped.
//   * parallelogram with row shift s: row rho occupies columns
//     rho*s ... rho*s + L-1.  The unit shear (s=1) spans s*(L-1)+L = 2L-1
//     columns; some texts quote "2L" for the same cut - that is a counting
//     convention (lattice constants vs column count), the builder follows
//     the literal shear.
//   * zipper bonds close the s=1 parallelogram into a cylinder of
//     circumference L: for each leftmost-column site r = (rho, rho),
//     a horizontal closure (r, r+(L-1)e_x, x-flavor), and for all but the
//     last row a vertical closure (r, r+L*e_x+e_y, y-flavor): 2L-1 bonds.
//     Mapping columns mod L reproduces the closed cylinder graph exactly.
//   * The explicit `cylinder` kind builds the closed graph directly.  At
//     L=2 the circumference-2 ring is kept as a doubled edge (multigraph)
//     so that open + zipper and the direct build agree bond-for-bond.
// ============================================================================

#include <algorithm>
#include <array>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "pauli.hpp"

namespace compasskit {

using Coord = std::array<int, 3>;  // (x, y, z); z = 0 in 2D

enum class LatticeKind { square_open, parallelogram, cylinder, cubic_open, custom };

inline std::string kind_name(LatticeKind k) {
    switch (k) {
        case LatticeKind::square_open:  return "square_open";
        case LatticeKind::parallelogram: return "parallelogram";
        case LatticeKind::cylinder:     return "cylinder";
        case LatticeKind::cubic_open:   return "cubic_open";
        case LatticeKind::custom:       return "custom";
    }
    return "?";
}
inline LatticeKind kind_from_name(const std::string& s) {
    if (s == "square_open") return LatticeKind::square_open;
    if (s == "parallelogram") return LatticeKind::parallelogram;
    if (s == "cylinder") return LatticeKind::cylinder;
    if (s == "cubic_open") return LatticeKind::cubic_open;
    if (s == "custom") return LatticeKind::custom;
    throw std::invalid_argument("unknown lattice kind '" + s + "'");
}

struct Bond {
    int a = 0, b = 0;
    Axis dir = Axis::X;  // coordinate direction for lattice bonds; coupling
                         // flavor for zipper bonds (long-ranged when open)
    bool operator==(const Bond& o) const {
        return a == o.a && b == o.b && dir == o.dir;
    }
};

struct LatticeSpec {
    int dimension = 2;
    LatticeKind kind = LatticeKind::square_open;
    int L = 2;
    int shift = 0;                        // per-row horizontal displacement s
    std::vector<Coord> vacancies;
    std::vector<Coord> custom_sites;      // kind=custom only
    std::vector<std::tuple<int, int, char>> custom_bonds;
};

struct Lattice {
    LatticeSpec spec;
    std::vector<Coord> sites;
    std::vector<Bond> bonds;
    std::vector<Bond> zipper;             // populated for parallelogram, s=1
    std::vector<int> parity;              // coordinate-sum parity per site
    std::map<Coord, int> index_of;

    int n_sites() const { return static_cast<int>(sites.size()); }

    int site_at(const Coord& c) const {
        auto it = index_of.find(c);
        return it == index_of.end() ? -1 : it->second;
    }
    bool has_site(const Coord& c) const { return index_of.count(c) > 0; }
};

namespace detail {

inline void add_grid_bonds(Lattice& lat, int dim) {
    // Deterministic: iterate sites in index order, directions x, y, z.
    const Coord steps[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const Axis axes[3] = {Axis::X, Axis::Y, Axis::Z};
    for (int i = 0; i < lat.n_sites(); ++i)
        for (int d = 0; d < dim; ++d) {
            Coord nb = {lat.sites[i][0] + steps[d][0],
                        lat.sites[i][1] + steps[d][1],
                        lat.sites[i][2] + steps[d][2]};
            int j = lat.site_at(nb);
            if (j >= 0) lat.bonds.push_back({i, j, axes[d]});
        }
}

inline void finalize(Lattice& lat) {
    for (int i = 0; i < lat.n_sites(); ++i)
        lat.index_of[lat.sites[i]] = i;
    lat.parity.resize(lat.sites.size());
    for (int i = 0; i < lat.n_sites(); ++i)
        lat.parity[i] = ((lat.sites[i][0] + lat.sites[i][1] + lat.sites[i][2]) % 2 + 2) % 2;
}

}  // namespace detail

inline Lattice build(const LatticeSpec& spec) {
    if (spec.kind != LatticeKind::custom && spec.L < 2)
        throw std::invalid_argument("lattice: L must be >= 2");

    Lattice lat;
    lat.spec = spec;
    const int L = spec.L;

    // --- site enumeration (row-major, vacancies removed afterwards) --------
    std::vector<Coord> raw;
    switch (spec.kind) {
        case LatticeKind::square_open:
            for (int r = 0; r < L; ++r)
                for (int c = 0; c < L; ++c) raw.push_back({c, r, 0});
            break;
        case LatticeKind::parallelogram: {
            const int s = spec.shift;
            if (s < 0) throw std::invalid_argument("lattice: negative row shift");
            for (int r = 0; r < L; ++r)
                for (int c = r * s; c < r * s + L; ++c) raw.push_back({c, r, 0});
            break;
        }
        case LatticeKind::cylinder:
            for (int r = 0; r < L; ++r)
                for (int c = 0; c < L; ++c) raw.push_back({c, r, 0});
            break;
        case LatticeKind::cubic_open:
            for (int z = 0; z < L; ++z)
                for (int y = 0; y < L; ++y)
                    for (int x = 0; x < L; ++x) raw.push_back({x, y, z});
            break;
        case LatticeKind::custom:
            raw = spec.custom_sites;
            if (raw.empty())
                throw std::invalid_argument("custom lattice: no sites given");
            break;
    }

    // --- vacancies ----------------------------------------------------------
    std::vector<Coord> vac = spec.vacancies;
    std::sort(vac.begin(), vac.end());
    if (std::adjacent_find(vac.begin(), vac.end()) != vac.end())
        throw std::invalid_argument("lattice: duplicate vacancy");
    for (auto& v : vac)
        if (std::find(raw.begin(), raw.end(), v) == raw.end())
            throw std::invalid_argument("lattice: vacancy outside lattice");
    for (auto& c : raw)
        if (!std::binary_search(vac.begin(), vac.end(), c)) lat.sites.push_back(c);

    detail::finalize(lat);

    // --- bonds --------------------------------------------------------------
    switch (spec.kind) {
        case LatticeKind::square_open:
        case LatticeKind::parallelogram:
            detail::add_grid_bonds(lat, 2);
            break;
        case LatticeKind::cubic_open:
            detail::add_grid_bonds(lat, 3);
            break;
        case LatticeKind::cylinder: {
            // Periodic in x (circumference L, multigraph at L=2), open in y.
            for (int i = 0; i < lat.n_sites(); ++i) {
                const Coord& s0 = lat.sites[i];
                int j = lat.site_at({(s0[0] + 1) % L, s0[1], 0});
                if (j >= 0) lat.bonds.push_back({i, j, Axis::X});
                int k = lat.site_at({s0[0], s0[1] + 1, 0});
                if (k >= 0) lat.bonds.push_back({i, k, Axis::Y});
            }
            break;
        }
        case LatticeKind::custom:
            for (auto& [a, b, ax] : spec.custom_bonds) {
                if (a < 0 || a >= lat.n_sites() || b < 0 || b >= lat.n_sites())
                    throw std::invalid_argument("custom bond references missing site");
                lat.bonds.push_back({a, b, axis_from_char(ax)});
            }
            break;
    }

    // --- zipper closure for the unit-shear parallelogram --------------------
    if (spec.kind == LatticeKind::parallelogram && spec.shift == 1) {
        for (int r = 0; r < L; ++r) {
            int a = lat.site_at({r, r, 0});           // leftmost site of row r
            int b = lat.site_at({r + L - 1, r, 0});
            if (a >= 0 && b >= 0) lat.zipper.push_back({a, b, Axis::X});
        }
        for (int r = 0; r + 1 < L; ++r) {
            int a = lat.site_at({r, r, 0});
            int b = lat.site_at({r + L, r + 1, 0});
            if (a >= 0 && b >= 0) lat.zipper.push_back({a, b, Axis::Y});
        }
    }
    return lat;
}

// Zipper bond list; defined for the unit-shear parallelogram closure only.
inline const std::vector<Bond>& zipper_bonds(const Lattice& lat) {
    if (lat.spec.kind != LatticeKind::parallelogram || lat.spec.shift != 1)
        throw std::invalid_argument(
            "zipper_bonds: requires a parallelogram lattice with shift 1");
    return lat.zipper;
}

// Ordered foliation of the lattice into lines/planes perpendicular to mu.
// The sets partition the (non-vacant) sites; ordered by coordinate.
inline std::vector<std::vector<int>> foliate(const Lattice& lat, Axis mu) {
    const int dim = (lat.spec.kind == LatticeKind::cubic_open) ? 3
                   : (lat.spec.kind == LatticeKind::custom ? lat.spec.dimension : 2);
    const int comp = (mu == Axis::X) ? 0 : (mu == Axis::Y) ? 1 : 2;
    if (comp >= dim)
        throw std::invalid_argument("foliate: direction invalid for lattice dimension");
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < lat.n_sites(); ++i)
        groups[lat.sites[i][comp]].push_back(i);
    std::vector<std::vector<int>> out;
    out.reserve(groups.size());
    for (auto& [coord, sites] : groups) out.push_back(sites);
    return out;
}

// Bipartition by coordinate-sum parity, validated against the bond list
// (every bond must cross A-B; custom lattices may fail = odd cycle).
inline std::pair<std::vector<int>, std::vector<int>> bipartition(const Lattice& lat) {
    for (auto& b : lat.bonds)
        if (lat.parity[b.a] == lat.parity[b.b])
            throw std::invalid_argument(
                "bipartition: lattice is not bipartite under coordinate parity "
                "(odd cycle or same-parity bond)");
    std::vector<int> A, B;
    for (int i = 0; i < lat.n_sites(); ++i)
        (lat.parity[i] == 0 ? A : B).push_back(i);
    return {A, B};
}

// Degree table of the union graph (lattice bonds + zipper), counting
// multiplicity; used for the cylinder-closure checks.
inline std::vector<int> union_degrees(const Lattice& lat) {
    std::vector<int> deg(lat.sites.size(), 0);
    for (auto& b : lat.bonds) { ++deg[b.a]; ++deg[b.b]; }
    for (auto& b : lat.zipper) { ++deg[b.a]; ++deg[b.b]; }
    return deg;
}

}  // namespace compasskit
