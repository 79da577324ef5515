#pragma once
// ============================================================================
// Symmetry-sector-resolved exact diagonalization.
//
//   * sector_partition: splits the computational z basis by the +/-1 labels
//     of mutually commuting z-diagonal symmetries (the rotated-frame line
//     strings), using the Hermitian sign convention (-1)^{popcount(b & mask)}
//   * solve_sector / solve_all_sectors: dense LAPACK path within a
//     configurable budget, Lanczos for bounded eigencounts beyond it; budget
//     violations raise budget_error instead of silently downgrading accuracy
//   * degeneracy_census: merges sector spectra into (energy, multiplicity)
//     groups with stability flags and a divisibility verdict
//   * sector_spectra_compare: max deviation between sector spectra
//   * expectation values, connected correlators, reduced density matrices,
//     von Neumann / mixture entropies over ground multiplets
// ============================================================================

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dense.hpp"
#include "lanczos.hpp"
#include "model.hpp"
#include "pauli.hpp"
#include "symmetry.hpp"

namespace compasskit {

// ----------------------------------------------------------------------------
// Compiled term application (z basis, single 64-bit word)
// ----------------------------------------------------------------------------
struct CompiledTerm {
    std::uint64_t x = 0, z = 0;
    double w = 0;  // coefficient with the i^phase sign folded in
};

inline std::vector<CompiledTerm> compile_terms(const Hamiltonian& h) {
    if (h.n_sites > 64)
        throw std::invalid_argument("compile_terms: more than 64 sites");
    if (!h.real_in_z_basis())
        throw std::invalid_argument(
            "compile_terms: Hamiltonian has imaginary z-basis elements; "
            "build it in the rotated frame");
    std::vector<CompiledTerm> out;
    for (auto& t : h.terms) {
        CompiledTerm c;
        c.x = t.op.x_mask.low64();
        c.z = t.op.z_mask.low64();
        c.w = t.coeff * (t.op.phase_exp % 4 == 2 ? -1.0 : 1.0);
        out.push_back(c);
    }
    return out;
}

inline int parity64(std::uint64_t v) { return __builtin_parityll(v); }

// ----------------------------------------------------------------------------
// Sector partition
// ----------------------------------------------------------------------------
struct SectorBasis {
    std::uint32_t code = 0;            // bit a set <=> label_a = -1
    std::vector<int> labels;           // +1 / -1 per labeling symmetry
    std::vector<std::uint64_t> states; // ascending

    int dim() const { return static_cast<int>(states.size()); }
    std::string label_string() const {
        std::string s;
        for (int l : labels) s += (l > 0 ? '+' : '-');
        return s;
    }
};

struct SectorTable {
    std::vector<std::uint64_t> row_masks;  // z-support of each labeling symmetry
    std::vector<SectorBasis> sectors;      // only non-empty sectors, by code
};

inline SectorTable sector_partition(int n_sites,
                                    const std::vector<SymmetryOp>& syms) {
    if (n_sites < 1 || n_sites > 26)
        throw std::invalid_argument("sector_partition: site count out of range");
    if (syms.empty() || syms.size() > 31)
        throw std::invalid_argument("sector_partition: need 1..31 labeling symmetries");

    SectorTable table;
    for (auto& s : syms) {
        if (!s.op.x_mask.none())
            throw std::invalid_argument("sector_partition: symmetry " + s.label() +
                                        " is not z-diagonal; rotate the frame first");
        table.row_masks.push_back(s.op.z_mask.low64());
    }

    const std::uint64_t dim = 1ull << n_sites;
    std::map<std::uint32_t, std::vector<std::uint64_t>> buckets;
    for (std::uint64_t b = 0; b < dim; ++b) {
        std::uint32_t code = 0;
        for (size_t a = 0; a < table.row_masks.size(); ++a)
            if (parity64(b & table.row_masks[a])) code |= (1u << a);
        buckets[code].push_back(b);
    }
    for (auto& [code, states] : buckets) {
        SectorBasis sb;
        sb.code = code;
        for (size_t a = 0; a < table.row_masks.size(); ++a)
            sb.labels.push_back((code >> a & 1) ? -1 : +1);
        sb.states = std::move(states);
        table.sectors.push_back(std::move(sb));
    }
    return table;
}

// Sector the operator maps this sector into: toggles label a when the
// operator's x part anticommutes with labeling mask a.
inline std::uint32_t sector_image_code(std::uint32_t code, const PauliString& op,
                                       const std::vector<std::uint64_t>& row_masks) {
    for (size_t a = 0; a < row_masks.size(); ++a)
        if (parity64(op.x_mask.low64() & row_masks[a])) code ^= (1u << a);
    return code;
}

// ----------------------------------------------------------------------------
// Per-sector diagonalization
// ----------------------------------------------------------------------------
struct SolveOptions {
    int n_eigs = -1;        // -1 = full spectrum
    bool vectors = false;
    int dense_budget = 8192;
    int lanczos_max_iter = 500;
    std::uint64_t seed = 20240601;
};

struct SectorSpectrum {
    SectorBasis basis;
    std::vector<double> evals;
    std::vector<std::vector<double>> evecs;  // evecs[k] over basis.states
    double max_residual = -1.0;              // -1 = not computed (dense, no vectors)
    std::string method;                      // "dense" or "lanczos"
};

namespace detail {

inline int sector_index_of(const std::vector<std::uint64_t>& states, std::uint64_t b) {
    auto it = std::lower_bound(states.begin(), states.end(), b);
    if (it == states.end() || *it != b) return -1;
    return static_cast<int>(it - states.begin());
}

// out = H * in, restricted to the sector; throws if H leaves the sector.
inline void sector_matvec(const std::vector<CompiledTerm>& terms,
                          const std::vector<std::uint64_t>& states, const double* in,
                          double* out) {
    const int dim = static_cast<int>(states.size());
    std::fill(out, out + dim, 0.0);
    for (int j = 0; j < dim; ++j) {
        const std::uint64_t b = states[j];
        for (auto& t : terms) {
            double amp = parity64(b & t.z) ? -t.w : t.w;
            int i = sector_index_of(states, b ^ t.x);
            if (i < 0)
                throw std::runtime_error(
                    "sector_matvec: Hamiltonian maps a state out of its sector; "
                    "labeling operators are not symmetries of this Hamiltonian");
            out[i] += amp * in[j];
        }
    }
}

}  // namespace detail

inline SectorSpectrum solve_sector(const Hamiltonian& h, const SectorBasis& basis,
                                   const SolveOptions& opt = {}) {
    auto terms = compile_terms(h);
    const int dim = basis.dim();
    SectorSpectrum out;
    out.basis = basis;

    const bool bounded = (opt.n_eigs > 0);
    const bool dense_ok = (dim <= opt.dense_budget);
    // Dense whenever the whole spectrum is wanted, or the sector is small, or
    // the eigencount is a sizable fraction of the sector.
    const bool use_dense =
        dense_ok && (!bounded || dim <= 256 || opt.n_eigs >= dim / 2);

    if (!bounded && !dense_ok)
        throw budget_error("sector dimension " + std::to_string(dim) +
                           " exceeds the dense budget " +
                           std::to_string(opt.dense_budget) +
                           "; request a bounded eigencount for the iterative path");

    if (use_dense) {
        out.method = "dense";
        std::vector<double> a(static_cast<size_t>(dim) * dim, 0.0);
        for (int j = 0; j < dim; ++j) {
            const std::uint64_t b = basis.states[j];
            for (auto& t : terms) {
                double amp = parity64(b & t.z) ? -t.w : t.w;
                int i = detail::sector_index_of(basis.states, b ^ t.x);
                if (i < 0)
                    throw std::runtime_error(
                        "solve_sector: Hamiltonian maps a state out of its sector");
                a[static_cast<size_t>(j) * dim + i] += amp;
            }
        }
        const bool want_vecs = opt.vectors;
        auto evals = sym_eigs(a, dim, want_vecs);
        const int keep = bounded ? std::min(opt.n_eigs, dim) : dim;
        out.evals.assign(evals.begin(), evals.begin() + keep);
        if (want_vecs) {
            for (int k = 0; k < keep; ++k) {
                std::vector<double> v(dim);
                for (int r = 0; r < dim; ++r)
                    v[r] = a[static_cast<size_t>(k) * dim + r];
                out.evecs.push_back(std::move(v));
            }
            double mr = 0;
            std::vector<double> hv(dim);
            for (int k = 0; k < keep; ++k) {
                detail::sector_matvec(terms, basis.states, out.evecs[k].data(), hv.data());
                double r2 = 0;
                for (int r = 0; r < dim; ++r) {
                    double d = hv[r] - out.evals[k] * out.evecs[k][r];
                    r2 += d * d;
                }
                mr = std::max(mr, std::sqrt(r2));
            }
            out.max_residual = mr;
        }
        return out;
    }

    // Iterative path.
    out.method = "lanczos";
    LanczosOptions lopt;
    lopt.max_iter = opt.lanczos_max_iter;
    lopt.seed = opt.seed;
    auto res = lanczos_lowest(
        [&](const double* in, double* o) {
            detail::sector_matvec(terms, basis.states, in, o);
        },
        dim, opt.n_eigs, lopt);
    out.evals = std::move(res.evals);
    if (opt.vectors) out.evecs = std::move(res.evecs);
    out.max_residual = res.max_residual;
    return out;
}

inline std::vector<SectorSpectrum> solve_all_sectors(const Hamiltonian& h,
                                                     const SectorTable& table,
                                                     const SolveOptions& opt = {}) {
    std::vector<SectorSpectrum> out;
    for (auto& sec : table.sectors) out.push_back(solve_sector(h, sec, opt));
    return out;
}

// ----------------------------------------------------------------------------
// Census and cross-sector comparison
// ----------------------------------------------------------------------------
struct CensusEntry {
    double energy = 0;      // mean of the merged eigenvalues
    int multiplicity = 0;
    bool unstable = false;  // gap structure within a factor 4 of the tolerance
};

struct Census {
    std::vector<CensusEntry> groups;
    double width = 0;
    double tol_abs = 0;
    std::int64_t divisor = 1;
    bool verdict = false;  // every multiplicity divisible by `divisor`
};

inline Census degeneracy_census(const std::vector<SectorSpectrum>& spectra,
                                std::int64_t divisor, double tol_rel = 1e-9) {
    std::vector<double> all;
    for (auto& s : spectra) all.insert(all.end(), s.evals.begin(), s.evals.end());
    if (all.empty()) throw std::invalid_argument("degeneracy_census: no eigenvalues");
    std::sort(all.begin(), all.end());

    Census c;
    c.divisor = divisor;
    c.width = all.back() - all.front();
    c.tol_abs = tol_rel * std::max(c.width, 1.0);

    std::vector<std::pair<size_t, size_t>> ranges;  // [first, last] index per group
    size_t start = 0;
    for (size_t i = 1; i <= all.size(); ++i) {
        if (i == all.size() || all[i] - all[i - 1] > c.tol_abs) {
            ranges.push_back({start, i - 1});
            start = i;
        }
    }
    for (size_t g = 0; g < ranges.size(); ++g) {
        auto [lo, hi] = ranges[g];
        CensusEntry e;
        e.multiplicity = static_cast<int>(hi - lo + 1);
        double sum = 0;
        double max_internal_gap = 0;
        for (size_t i = lo; i <= hi; ++i) {
            sum += all[i];
            if (i > lo) max_internal_gap = std::max(max_internal_gap, all[i] - all[i - 1]);
        }
        e.energy = sum / e.multiplicity;
        // Stability: internal gaps should be far below the merge tolerance and
        // gaps to neighboring groups far above it.
        e.unstable = (max_internal_gap > c.tol_abs / 4.0);
        if (g > 0 && all[lo] - all[ranges[g - 1].second] < 4.0 * c.tol_abs)
            e.unstable = true;
        if (g + 1 < ranges.size() && all[ranges[g + 1].first] - all[hi] < 4.0 * c.tol_abs)
            e.unstable = true;
        c.groups.push_back(e);
    }
    c.verdict = true;
    for (auto& g : c.groups)
        if (g.multiplicity % divisor != 0) c.verdict = false;
    return c;
}

struct SectorCompareReport {
    bool dims_match = true;
    double scale = 1.0;        // max(1, largest |E|)
    double max_abs_dev = 0.0;  // vs the first sector, position by position
    double max_rel_dev = 0.0;
};

inline SectorCompareReport sector_spectra_compare(
    const std::vector<SectorSpectrum>& spectra) {
    if (spectra.empty())
        throw std::invalid_argument("sector_spectra_compare: no sectors");
    SectorCompareReport r;
    for (auto& s : spectra)
        for (double e : s.evals) r.scale = std::max(r.scale, std::abs(e));
    auto& ref = spectra[0].evals;
    for (size_t s = 1; s < spectra.size(); ++s) {
        if (spectra[s].evals.size() != ref.size()) {
            r.dims_match = false;
            continue;
        }
        for (size_t i = 0; i < ref.size(); ++i)
            r.max_abs_dev = std::max(r.max_abs_dev,
                                     std::abs(spectra[s].evals[i] - ref[i]));
    }
    r.max_rel_dev = r.max_abs_dev / r.scale;
    return r;
}

// Transports a sector vector through a pure-X Pauli string (e.g. a column
// composite): w = P v up to the global i^phase factor, which cancels in every
// expectation value.  Returns the vector over the image sector's basis.
inline std::vector<double> transport(const SectorBasis& from,
                                     const std::vector<double>& v,
                                     const PauliString& op, const SectorBasis& to) {
    if (!op.z_mask.none())
        throw std::invalid_argument("transport: operator must be a pure X string");
    if (static_cast<int>(v.size()) != from.dim())
        throw std::invalid_argument("transport: vector/sector size mismatch");
    std::vector<double> w(to.dim(), 0.0);
    const std::uint64_t x = op.x_mask.low64();
    for (int j = 0; j < from.dim(); ++j) {
        int i = detail::sector_index_of(to.states, from.states[j] ^ x);
        if (i < 0)
            throw std::runtime_error("transport: image state not in the target sector");
        w[i] = v[j];
    }
    return w;
}

// ----------------------------------------------------------------------------
// Ground multiplet
// ----------------------------------------------------------------------------
struct GroundMultiplet {
    double e0 = 0;
    std::vector<double> energies;
    std::vector<int> sector;  // index into the spectra vector
    std::vector<int> index_in_sector;
    std::vector<std::vector<double>> vectors;

    int dim() const { return static_cast<int>(energies.size()); }
};

inline GroundMultiplet ground_multiplet(const std::vector<SectorSpectrum>& spectra,
                                        double tol_abs) {
    GroundMultiplet g;
    bool first = true;
    for (auto& s : spectra)
        for (double e : s.evals)
            if (first || e < g.e0) { g.e0 = e; first = false; }
    if (first) throw std::invalid_argument("ground_multiplet: no eigenvalues");
    for (size_t si = 0; si < spectra.size(); ++si) {
        auto& s = spectra[si];
        for (size_t k = 0; k < s.evals.size(); ++k) {
            if (s.evals[k] - g.e0 > tol_abs) continue;
            if (k >= s.evecs.size())
                throw std::invalid_argument(
                    "ground_multiplet: eigenvectors missing; solve with vectors=true");
            g.energies.push_back(s.evals[k]);
            g.sector.push_back(static_cast<int>(si));
            g.index_in_sector.push_back(static_cast<int>(k));
            g.vectors.push_back(s.evecs[k]);
        }
    }
    return g;
}

// ----------------------------------------------------------------------------
// Observables on sector vectors
// ----------------------------------------------------------------------------

// <v| P |v> for an arbitrary Pauli string; components mapped outside the
// sector meet zero bra amplitudes and contribute nothing.
inline std::complex<double> expectation_pauli(const PauliString& p,
                                              const SectorBasis& basis,
                                              const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != basis.dim())
        throw std::invalid_argument("expectation_pauli: vector/sector size mismatch");
    std::complex<double> acc = 0;
    for (int j = 0; j < basis.dim(); ++j) {
        if (v[j] == 0.0) continue;
        auto img = apply_to_basis_state(p, basis.states[j]);
        int i = detail::sector_index_of(basis.states, img.state);
        if (i < 0) continue;
        acc += v[i] * img.amp * v[j];
    }
    return acc;
}

// <v| H |v> with H compiled (real path).
inline double expectation(const Hamiltonian& h, const SectorBasis& basis,
                          const std::vector<double>& v) {
    auto terms = compile_terms(h);
    double acc = 0;
    for (int j = 0; j < basis.dim(); ++j) {
        if (v[j] == 0.0) continue;
        const std::uint64_t b = basis.states[j];
        for (auto& t : terms) {
            int i = detail::sector_index_of(basis.states, b ^ t.x);
            if (i < 0) continue;
            double amp = parity64(b & t.z) ? -t.w : t.w;
            acc += v[i] * amp * v[j];
        }
    }
    return acc;
}

// Re<AB> - Re<A> Re<B> in the given state.
inline double connected_correlator(const PauliString& a, const PauliString& b,
                                   const SectorBasis& basis,
                                   const std::vector<double>& v) {
    auto ab = multiply(a, b);
    double vab = expectation_pauli(ab, basis, v).real();
    double va = expectation_pauli(a, basis, v).real();
    double vb = expectation_pauli(b, basis, v).real();
    return vab - va * vb;
}

// ----------------------------------------------------------------------------
// Reduced density matrices and entropies
// ----------------------------------------------------------------------------

// rho_A for the sites in `keep` (ascending order defines the qubit order of
// A), as a real symmetric matrix in column-major order, dimension 2^|keep|.
inline std::vector<double> reduced_density(const SectorBasis& basis,
                                           const std::vector<double>& v,
                                           const std::vector<int>& keep, int n_sites) {
    if (keep.empty() || keep.size() > 12)
        throw std::invalid_argument("reduced_density: keep 1..12 sites");
    for (size_t i = 1; i < keep.size(); ++i)
        if (keep[i] <= keep[i - 1])
            throw std::invalid_argument("reduced_density: sites must be ascending");
    if (keep.front() < 0 || keep.back() >= n_sites)
        throw std::out_of_range("reduced_density: site out of range");

    const int ka = static_cast<int>(keep.size());
    const int da = 1 << ka;
    std::vector<int> env;
    {
        std::vector<bool> is_kept(n_sites, false);
        for (int s : keep) is_kept[s] = true;
        for (int s = 0; s < n_sites; ++s)
            if (!is_kept[s]) env.push_back(s);
    }
    // Group amplitudes by environment configuration.
    std::map<std::uint64_t, std::vector<std::pair<int, double>>> groups;
    for (int j = 0; j < basis.dim(); ++j) {
        if (v[j] == 0.0) continue;
        const std::uint64_t b = basis.states[j];
        int a = 0;
        for (int k = 0; k < ka; ++k)
            if (b >> keep[k] & 1) a |= (1 << k);
        std::uint64_t e = 0;
        for (size_t k = 0; k < env.size(); ++k)
            if (b >> env[k] & 1) e |= (1ull << k);
        groups[e].push_back({a, v[j]});
    }
    std::vector<double> rho(static_cast<size_t>(da) * da, 0.0);
    for (auto& [e, amps] : groups)
        for (auto& [a1, c1] : amps)
            for (auto& [a2, c2] : amps)
                rho[static_cast<size_t>(a2) * da + a1] += c1 * c2;
    return rho;
}

// -sum_k lambda_k log2 lambda_k, for a real symmetric density matrix.
inline double von_neumann_entropy_bits(std::vector<double> rho, int dim) {
    auto lam = sym_eigs(rho, dim, false);
    double s = 0;
    for (double l : lam) {
        if (l <= 1e-300) continue;  // clamp spurious negatives / exact zeros
        s -= l * std::log2(l);
    }
    return s;
}

// Entropy in bits of the uniform mixture rho = (1/k) sum_i |psi_i><psi_i|,
// computed from the Gram matrix (vectors in different sectors are orthogonal
// by construction).  Equals log2(k) for an orthonormal multiplet.
inline double mixture_entropy_bits(const GroundMultiplet& g) {
    const int k = g.dim();
    if (k == 0) throw std::invalid_argument("mixture_entropy_bits: empty multiplet");
    std::vector<double> gram(static_cast<size_t>(k) * k, 0.0);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            if (g.sector[i] != g.sector[j]) continue;
            double d = 0;
            for (size_t r = 0; r < g.vectors[i].size(); ++r)
                d += g.vectors[i][r] * g.vectors[j][r];
            gram[static_cast<size_t>(j) * k + i] = d / k;
        }
    return von_neumann_entropy_bits(std::move(gram), k);
}

}  // namespace compasskit
