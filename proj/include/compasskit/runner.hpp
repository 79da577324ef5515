#pragma once
// ============================================================================
// Config-driven task runner behind the CLI.
//
// A run is described by a single JSON document (no environment variables):
//   { "task": "...", "lattice": {...}, "model": {...}, "solver": {...},
//     "tolerances": {...}, "task_options": {...} }
// Every run produces a RunRecord whose payload is emitted by the
// deterministic writer, so identical configs reproduce payloads bit-exactly
// on dense code paths.  Exit codes are part of the contract:
//   0 = task ran and its verdict is PASS
//   1 = task ran and its verdict is FAIL
//   2 = configuration / schema error
//   3 = resource budget exceeded
//   4 = internal error
// ============================================================================

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "jsonio.hpp"
#include "lattice.hpp"
#include "model.hpp"
#include "pauli.hpp"
#include "perturb.hpp"
#include "solver.hpp"
#include "symmetry.hpp"

namespace compasskit::runner {

inline constexpr const char* kToolName = "compasskit";
inline constexpr const char* kToolVersion = "0.1.0";

using jsonio::JValue;
using nlohmann::json;

// ----------------------------------------------------------------------------
// Configuration schema
// ----------------------------------------------------------------------------

struct RunConfig {
    std::string task;
    LatticeSpec lattice;
    ModelKind model_kind = ModelKind::pcm;
    Frame frame = Frame::rotated;
    Couplings cpl;
    std::vector<GenericTerm> generic_terms;
    SolveOptions solver;

    // Tolerances (all positive; defaults cover every task).
    double tol_rel = 1e-9;     // census grouping, sector comparison
    double tol_ortho = 1e-12;  // orthogonality / forced zeros
    double tol_orbit = 1e-12;  // classical orbit energy spread
    double tol_gaps = 1e-10;   // free-fermion gap multiset comparison

    // Task options.
    std::int64_t census_divisor = 0;  // 0 = use the certificate bound
    std::vector<double> angles;       // classical-orbit: explicit per-site angles
    std::string angle_mode = "uniform";
    double angle = 0.62831853071795862;  // uniform-mode pitch (radians)
    std::uint64_t angle_seed = 7;
    int max_separation = 0;  // correlator-decay: 0 = L-1
};

inline const std::set<std::string>& known_tasks() {
    static const std::set<std::string> t = {
        "verify-symmetries", "certificate",    "spectrum",
        "census",            "sector-compare", "zipper-analysis",
        "free-fermion",      "perturbation-sweep", "entropy",
        "classical-orbit",   "correlator-decay",   "variational-strings"};
    return t;
}

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::invalid_argument("unknown key '" + it.key() + "' in " + where);
}

inline const json* find(const json& j, const std::string& key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

inline double as_double(const json& j, const std::string& name) {
    if (!j.is_number()) throw std::invalid_argument(name + " must be a number");
    return j.get<double>();
}

inline long long as_int(const json& j, const std::string& name) {
    if (!j.is_number_integer())
        throw std::invalid_argument(name + " must be an integer");
    return j.get<long long>();
}

inline std::string as_string(const json& j, const std::string& name) {
    if (!j.is_string()) throw std::invalid_argument(name + " must be a string");
    return j.get<std::string>();
}

inline Coord parse_coord(const json& j, int dimension, const std::string& where) {
    if (!j.is_array() || (j.size() != 2 && j.size() != 3))
        throw std::invalid_argument(where + " must be [x,y] or [x,y,z]");
    if (dimension == 2 && j.size() == 3 && as_int(j[2], where) != 0)
        throw std::invalid_argument(where + ": z component on a 2d lattice");
    Coord c{0, 0, 0};
    c[0] = static_cast<int>(as_int(j[0], where));
    c[1] = static_cast<int>(as_int(j[1], where));
    if (j.size() == 3) c[2] = static_cast<int>(as_int(j[2], where));
    return c;
}

inline Axis axis_from_char(char a, const std::string& where) {
    if (a == 'x') return Axis::X;
    if (a == 'y') return Axis::Y;
    if (a == 'z') return Axis::Z;
    throw std::invalid_argument(where + ": axis must be x, y or z");
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
    using detail::as_double;
    using detail::as_int;
    using detail::as_string;
    using detail::find;
    using detail::reject_unknown_keys;

    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    reject_unknown_keys(
        j, {"task", "lattice", "model", "solver", "tolerances", "task_options"},
        "config");

    RunConfig c;
    const json* t = find(j, "task");
    if (!t) throw std::invalid_argument("config: missing required key 'task'");
    c.task = as_string(*t, "task");
    if (!known_tasks().count(c.task))
        throw std::invalid_argument("unknown task '" + c.task + "'");

    // --- lattice ---
    const json* lat = find(j, "lattice");
    if (!lat) throw std::invalid_argument("config: missing required key 'lattice'");
    reject_unknown_keys(*lat,
                        {"kind", "L", "shift", "dimension", "vacancies",
                         "custom_sites", "custom_bonds"},
                        "lattice");
    const json* kind = find(*lat, "kind");
    if (!kind) throw std::invalid_argument("lattice: missing required key 'kind'");
    c.lattice.kind = kind_from_name(as_string(*kind, "lattice.kind"));
    if (const json* v = find(*lat, "dimension"))
        c.lattice.dimension = static_cast<int>(as_int(*v, "lattice.dimension"));
    if (c.lattice.kind == LatticeKind::cubic_open) c.lattice.dimension = 3;
    if (const json* v = find(*lat, "L"))
        c.lattice.L = static_cast<int>(as_int(*v, "lattice.L"));
    else if (c.lattice.kind != LatticeKind::custom)
        throw std::invalid_argument("lattice: missing required key 'L'");
    if (const json* v = find(*lat, "shift"))
        c.lattice.shift = static_cast<int>(as_int(*v, "lattice.shift"));
    if (const json* v = find(*lat, "vacancies")) {
        if (!v->is_array()) throw std::invalid_argument("lattice.vacancies must be an array");
        for (const auto& item : *v)
            c.lattice.vacancies.push_back(
                detail::parse_coord(item, c.lattice.dimension, "lattice.vacancies"));
    }
    if (const json* v = find(*lat, "custom_sites")) {
        if (!v->is_array()) throw std::invalid_argument("lattice.custom_sites must be an array");
        for (const auto& item : *v)
            c.lattice.custom_sites.push_back(
                detail::parse_coord(item, c.lattice.dimension, "lattice.custom_sites"));
    }
    if (const json* v = find(*lat, "custom_bonds")) {
        if (!v->is_array()) throw std::invalid_argument("lattice.custom_bonds must be an array");
        for (const auto& item : *v) {
            if (!item.is_array() || item.size() != 3)
                throw std::invalid_argument("lattice.custom_bonds entries must be [a,b,axis]");
            std::string ax = as_string(item[2], "lattice.custom_bonds axis");
            if (ax.size() != 1)
                throw std::invalid_argument("lattice.custom_bonds axis must be x, y or z");
            c.lattice.custom_bonds.emplace_back(
                static_cast<int>(as_int(item[0], "custom_bonds.a")),
                static_cast<int>(as_int(item[1], "custom_bonds.b")), ax[0]);
        }
    }

    // --- model ---
    if (const json* m = find(j, "model")) {
        reject_unknown_keys(*m, {"kind", "frame", "Jx", "Jy", "Jz", "JP", "h", "terms"},
                            "model");
        if (const json* v = find(*m, "kind"))
            c.model_kind = model_from_name(as_string(*v, "model.kind"));
        if (const json* v = find(*m, "frame"))
            c.frame = frame_from_name(as_string(*v, "model.frame"));
        if (const json* v = find(*m, "Jx")) c.cpl.Jx = as_double(*v, "model.Jx");
        if (const json* v = find(*m, "Jy")) c.cpl.Jy = as_double(*v, "model.Jy");
        if (const json* v = find(*m, "Jz")) c.cpl.Jz = as_double(*v, "model.Jz");
        if (const json* v = find(*m, "JP")) c.cpl.JP = as_double(*v, "model.JP");
        if (const json* v = find(*m, "h")) c.cpl.h = as_double(*v, "model.h");
        if (const json* v = find(*m, "terms")) {
            if (!v->is_array()) throw std::invalid_argument("model.terms must be an array");
            for (const auto& item : *v) {
                reject_unknown_keys(item, {"coeff", "paulis"}, "model.terms");
                GenericTerm g;
                const json* coeff = find(item, "coeff");
                const json* paulis = find(item, "paulis");
                if (!coeff || !paulis)
                    throw std::invalid_argument("model.terms entries need coeff and paulis");
                g.coeff = as_double(*coeff, "model.terms.coeff");
                if (!paulis->is_array())
                    throw std::invalid_argument("model.terms.paulis must be an array");
                for (const auto& p : *paulis) {
                    if (!p.is_array() || p.size() != 2)
                        throw std::invalid_argument("model.terms.paulis entries must be [site, axis]");
                    std::string ax = as_string(p[1], "model.terms.paulis axis");
                    if (ax.size() != 1)
                        throw std::invalid_argument("model.terms.paulis axis must be x, y or z");
                    g.paulis.emplace_back(
                        static_cast<int>(as_int(p[0], "model.terms.paulis site")),
                        detail::axis_from_char(ax[0], "model.terms.paulis"));
                }
                c.generic_terms.push_back(std::move(g));
            }
        }
    }

    // --- solver ---
    if (const json* s = find(j, "solver")) {
        reject_unknown_keys(
            *s, {"n_eigs", "vectors", "dense_budget", "lanczos_max_iter", "seed"},
            "solver");
        if (const json* v = find(*s, "n_eigs"))
            c.solver.n_eigs = static_cast<int>(as_int(*v, "solver.n_eigs"));
        if (const json* v = find(*s, "vectors")) {
            if (!v->is_boolean())
                throw std::invalid_argument("solver.vectors must be a boolean");
            c.solver.vectors = v->get<bool>();
        }
        if (const json* v = find(*s, "dense_budget"))
            c.solver.dense_budget = static_cast<int>(as_int(*v, "solver.dense_budget"));
        if (const json* v = find(*s, "lanczos_max_iter"))
            c.solver.lanczos_max_iter =
                static_cast<int>(as_int(*v, "solver.lanczos_max_iter"));
        if (const json* v = find(*s, "seed"))
            c.solver.seed = static_cast<std::uint64_t>(as_int(*v, "solver.seed"));
    }

    // --- tolerances ---
    if (const json* t2 = find(j, "tolerances")) {
        reject_unknown_keys(*t2, {"rel", "ortho", "orbit", "gaps"}, "tolerances");
        if (const json* v = find(*t2, "rel")) c.tol_rel = as_double(*v, "tolerances.rel");
        if (const json* v = find(*t2, "ortho")) c.tol_ortho = as_double(*v, "tolerances.ortho");
        if (const json* v = find(*t2, "orbit")) c.tol_orbit = as_double(*v, "tolerances.orbit");
        if (const json* v = find(*t2, "gaps")) c.tol_gaps = as_double(*v, "tolerances.gaps");
        for (double tol : {c.tol_rel, c.tol_ortho, c.tol_orbit, c.tol_gaps})
            if (!(tol > 0)) throw std::invalid_argument("tolerances must be positive");
    }

    // --- task options ---
    if (const json* o = find(j, "task_options")) {
        reject_unknown_keys(*o,
                            {"census_divisor", "angles", "angle_mode", "angle",
                             "angle_seed", "max_separation"},
                            "task_options");
        if (const json* v = find(*o, "census_divisor"))
            c.census_divisor = as_int(*v, "task_options.census_divisor");
        if (const json* v = find(*o, "angles")) {
            if (!v->is_array())
                throw std::invalid_argument("task_options.angles must be an array");
            for (const auto& a : *v) c.angles.push_back(as_double(a, "task_options.angles"));
        }
        if (const json* v = find(*o, "angle_mode")) {
            c.angle_mode = as_string(*v, "task_options.angle_mode");
            if (c.angle_mode != "uniform" && c.angle_mode != "random")
                throw std::invalid_argument("task_options.angle_mode must be uniform or random");
        }
        if (const json* v = find(*o, "angle")) c.angle = as_double(*v, "task_options.angle");
        if (const json* v = find(*o, "angle_seed"))
            c.angle_seed = static_cast<std::uint64_t>(as_int(*v, "task_options.angle_seed"));
        if (const json* v = find(*o, "max_separation"))
            c.max_separation = static_cast<int>(as_int(*v, "task_options.max_separation"));
    }

    return c;
}

// ----------------------------------------------------------------------------
// Task execution
// ----------------------------------------------------------------------------

struct TaskOutput {
    JValue payload = JValue::object();
    bool pass = true;
    std::string fail_reason;  // set when pass == false
    std::map<std::string, std::string> files;  // extra artifacts (CSV)
};

namespace detail {

inline bool lattice_is_3d(const Lattice& lat) {
    return lat.spec.kind == LatticeKind::cubic_open ||
           (lat.spec.kind == LatticeKind::custom && lat.spec.dimension == 3);
}

struct Resolved {
    SectorTable table;
    std::vector<SectorSpectrum> spectra;
};

// Sector-resolve and diagonalize.  2D lattices are resolved by their row
// (y-foliation) symmetries; 3D lattices generally have no string symmetries,
// so they are solved as a single full-space block.
inline Resolved solve_resolved(const Lattice& lat, const Hamiltonian& h,
                               const SolveOptions& opts) {
    Resolved r;
    if (lattice_is_3d(lat)) {
        if (h.n_sites > 26)
            throw std::invalid_argument("solve_resolved: more than 26 sites");
        SectorBasis full;
        full.code = 0;
        full.states.resize(std::size_t(1) << h.n_sites);
        std::iota(full.states.begin(), full.states.end(), std::uint64_t(0));
        r.table.sectors.push_back(std::move(full));
    } else {
        auto rows = foliation_symmetries(lat, Axis::Y, h);
        r.table = sector_partition(h.n_sites, rows);
    }
    r.spectra = solve_all_sectors(h, r.table, opts);
    return r;
}

inline JValue sector_json(const SectorSpectrum& s) {
    JValue o = JValue::object();
    o.set("label", JValue::string(s.basis.label_string()));
    o.set("code", JValue::integer(s.basis.code));
    o.set("dim", JValue::integer(s.basis.dim()));
    o.set("method", JValue::string(s.method));
    o.set("max_residual", JValue::number(s.max_residual));
    o.set("eigenvalues", jsonio::array_of(s.evals));
    return o;
}

inline JValue census_json(const Census& cen) {
    JValue groups = JValue::array();
    for (const auto& g : cen.groups) {
        JValue row = JValue::object();
        row.set("E", JValue::number(g.energy));
        row.set("multiplicity", JValue::integer(g.multiplicity));
        row.set("unstable", JValue::boolean(g.unstable));
        groups.push(row);
    }
    JValue o = JValue::object();
    o.set("groups", groups);
    o.set("width", JValue::number(cen.width));
    o.set("tol_abs", JValue::number(cen.tol_abs));
    o.set("divisor", JValue::integer(cen.divisor));
    o.set("verdict", JValue::boolean(cen.verdict));
    return o;
}

inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void require_seam_geometry(const RunConfig& c) {
    if (c.lattice.kind != LatticeKind::parallelogram || c.lattice.shift != 1)
        throw std::invalid_argument(
            c.task + " requires lattice kind 'parallelogram' with shift 1");
    if (c.model_kind != ModelKind::pcm)
        throw std::invalid_argument(c.task + " requires model kind 'pcm'");
}

// --- individual tasks -------------------------------------------------------

inline TaskOutput task_verify_symmetries(const RunConfig& c) {
    auto lat = build(c.lattice);
    auto h = build_model(lat, c.model_kind, c.cpl, c.frame, c.generic_terms);
    const bool three_d = lattice_is_3d(lat);
    TaskOutput out;
    JValue dirs = JValue::array();
    bool all_exact = true;
    std::vector<Axis> axes = {Axis::X, Axis::Y};
    if (three_d) axes.push_back(Axis::Z);
    for (Axis mu : axes) {
        JValue lines = JValue::array();
        for (const auto& s : foliation_strings(lat, mu, h.frame)) {
            auto chk = check_symmetry(h, s.op);
            JValue row = JValue::object();
            row.set("label", JValue::string(s.label()));
            row.set("termwise", JValue::boolean(chk.termwise));
            row.set("exact", JValue::boolean(chk.exact));
            lines.push(row);
            all_exact = all_exact && chk.exact;
        }
        JValue dir = JValue::object();
        dir.set("axis", JValue::string(std::string(1, axis_name(mu))));
        dir.set("lines", lines);
        dirs.push(dir);
    }
    out.payload.set("directions", dirs);
    out.payload.set("all_exact", JValue::boolean(all_exact));
    out.pass = all_exact;
    out.fail_reason = "some foliation lines fail to commute with the Hamiltonian";
    return out;
}

inline JValue certificate_json(const DualPairCertificate& cert) {
    JValue o = JValue::object();
    o.set("M", JValue::integer(cert.M));
    o.set("bound", JValue::integer(cert.bound()));
    o.set("u_axis", JValue::string(std::string(1, axis_name(cert.u_axis))));
    o.set("v_axis", JValue::string(std::string(1, axis_name(cert.v_axis))));
    std::vector<std::string> u_labels, v_labels;
    for (const auto& u : cert.U) u_labels.push_back(u.label());
    for (const auto& v : cert.V) v_labels.push_back(v.label());
    o.set("U", jsonio::array_of(u_labels));
    o.set("U_rows", jsonio::array_of(cert.U_rows));
    o.set("V", jsonio::array_of(v_labels));
    JValue subsets = JValue::array();
    for (const auto& s : cert.V_subsets) subsets.push(jsonio::array_of(s));
    o.set("V_subsets", subsets);
    JValue pm = JValue::array();
    for (const auto& row : cert.parity_matrix) {
        JValue r = JValue::array();
        for (auto bit : row) r.push(JValue::integer(bit));
        pm.push(r);
    }
    o.set("parity_matrix", pm);
    return o;
}

inline TaskOutput task_certificate(const RunConfig& c) {
    auto lat = build(c.lattice);
    auto h = build_model(lat, c.model_kind, c.cpl, c.frame, c.generic_terms);
    auto cert = find_dual_sets(lat, h);  // verdict_error when rank is 0
    TaskOutput out;
    out.payload = certificate_json(cert);
    return out;
}

inline TaskOutput task_spectrum(const RunConfig& c) {
    auto lat = build(c.lattice);
    auto h = build_model(lat, c.model_kind, c.cpl, c.frame, c.generic_terms);
    auto res = solve_resolved(lat, h, c.solver);
    TaskOutput out;
    JValue sectors = JValue::array();
    for (const auto& s : res.spectra) sectors.push(sector_json(s));
    out.payload.set("n_sites", JValue::integer(h.n_sites));
    out.payload.set("sectors", sectors);

    std::string csv = "sector,index,E\n";
    for (const auto& s : res.spectra)
        for (std::size_t i = 0; i < s.evals.size(); ++i)
            csv += s.basis.label_string() + "," + std::to_string(i) + "," +
                   csv_double(s.evals[i]) + "\n";
    out.files["spectrum.csv"] = csv;
    return out;
}

inline TaskOutput task_census(const RunConfig& c) {
    auto lat = build(c.lattice);
    auto h = build_model(lat, c.model_kind, c.cpl, c.frame, c.generic_terms);
    SolveOptions opts = c.solver;
    opts.n_eigs = -1;  // a census needs the full spectrum
    opts.vectors = false;
    auto res = solve_resolved(lat, h, opts);

    std::int64_t divisor = c.census_divisor;
    TaskOutput out;
    if (divisor <= 0) {
        auto cert = find_dual_sets(lat, h);  // verdict_error when rank is 0
        divisor = cert.bound();
        out.payload.set("certificate_M", JValue::integer(cert.M));
    }
    auto cen = degeneracy_census(res.spectra, divisor, c.tol_rel);
    out.payload.set("census", census_json(cen));
    out.pass = cen.verdict;
    out.fail_reason = "a level multiplicity is not divisible by " + std::to_string(divisor);
    return out;
}

inline TaskOutput task_sector_compare(const RunConfig& c) {
    auto lat = build(c.lattice);
    auto h = build_model(lat, c.model_kind, c.cpl, c.frame, c.generic_terms);
    SolveOptions opts = c.solver;
    opts.vectors = false;
    auto res = solve_resolved(lat, h, opts);
    auto rep = sector_spectra_compare(res.spectra);
    TaskOutput out;
    out.payload.set("n_sectors", JValue::integer(static_cast<long long>(res.spectra.size())));
    out.payload.set("dims_match", JValue::boolean(rep.dims_match));
    out.payload.set("scale", JValue::number(rep.scale));
    out.payload.set("max_abs_dev", JValue::number(rep.max_abs_dev));
    out.payload.set("max_rel_dev", JValue::number(rep.max_rel_dev));
    out.payload.set("tol", JValue::number(c.tol_rel));
    out.pass = rep.dims_match && rep.max_rel_dev <= c.tol_rel;
    out.fail_reason = "sector spectra do not coincide within tolerance";
    return out;
}

inline TaskOutput task_zipper_analysis(const RunConfig& c) {
    require_seam_geometry(c);
    auto zp = zipper_perturbation(c.lattice.L, c.cpl.Jx, c.cpl.Jy, c.solver.seed);
    TaskOutput out;
    out.payload.set("L", JValue::integer(zp.L));
    out.payload.set("Jx", JValue::number(zp.jx));
    out.payload.set("Jy", JValue::number(zp.jy));
    out.payload.set("multiplet_dim", JValue::integer(zp.multiplet_dim));
    out.payload.set("e0", JValue::number(zp.e0));
    out.payload.set("e0_spread", JValue::number(zp.e0_spread));
    out.payload.set("min_sector_gap", JValue::number(zp.min_sector_gap));
    out.payload.set("diag_spread", JValue::number(zp.diag_spread));
    out.payload.set("splitting", JValue::number(zp.splitting));
    out.payload.set("max_offdiag", JValue::number(zp.max_offdiag));
    out.pass = zp.max_offdiag <= c.tol_ortho && zp.e0_spread <= 1e-10;
    out.fail_reason = "projected seam block is not diagonal in the sector multiplet basis";
    return out;
}

inline TaskOutput task_free_fermion(const RunConfig& c) {
    require_seam_geometry(c);
    auto ff = zipper_free_fermion(c.lattice.L, c.cpl.Jx, c.tol_gaps);
    TaskOutput out;
    out.payload.set("L", JValue::integer(ff.L));
    out.payload.set("J", JValue::number(ff.J));
    if (c.cpl.Jy != c.cpl.Jx)
        out.payload.set("note", JValue::string("seam chain uses J = Jx for both flavors"));
    out.payload.set("mode_energies", jsonio::array_of(ff.mode_energies));
    out.payload.set("formula_gaps", jsonio::array_of(ff.formula_gaps));
    out.payload.set("ed_gaps", jsonio::array_of(ff.ed_gaps));
    out.payload.set("max_gap_dev", JValue::number(ff.max_gap_dev));
    out.payload.set("zero_mode_present", JValue::boolean(ff.zero_mode_present));
    out.payload.set("multisets_match", JValue::boolean(ff.multisets_match));
    out.pass = ff.multisets_match && ff.zero_mode_present;
    out.fail_reason = "free-fermion gap multiset does not match the seam-chain spectrum";
    return out;
}

inline TaskOutput task_perturbation_sweep(const RunConfig& c) {
    require_seam_geometry(c);
    auto band = cylinder_band(c.lattice.L, c.cpl.Jx, c.cpl.Jy, c.solver.seed);
    TaskOutput out;
    out.payload.set("L", JValue::integer(band.L));
    out.payload.set("Jx", JValue::number(band.jx));
    out.payload.set("Jy", JValue::number(band.jy));
    out.payload.set("ratio", JValue::number(band.jy / band.jx));
    out.payload.set("multiplet_dim", JValue::integer(band.multiplet_dim));
    out.payload.set("e0", JValue::number(band.e0));
    out.payload.set("spread", JValue::number(band.spread));
    out.payload.set("min_sector_gap", JValue::number(band.min_sector_gap));
    out.payload.set("energies", jsonio::array_of(band.energies));
    return out;
}

inline TaskOutput task_entropy(const RunConfig& c) {
    auto lat = build(c.lattice);
    auto h = build_model(lat, c.model_kind, c.cpl, c.frame, c.generic_terms);
    SolveOptions opts = c.solver;
    opts.n_eigs = -1;
    opts.vectors = true;
    auto res = solve_resolved(lat, h, opts);
    auto cen = degeneracy_census(res.spectra, 1, c.tol_rel);
    auto g = ground_multiplet(res.spectra, cen.tol_abs);
    const double bits = mixture_entropy_bits(g);

    int M = 0;
    try {
        M = find_dual_sets(lat, h).M;
    } catch (const verdict_error&) {
        M = 0;  // no certified bound; the entropy claim degenerates to >= 0
    }
    TaskOutput out;
    out.payload.set("multiplet_dim", JValue::integer(g.dim()));
    out.payload.set("e0", JValue::number(g.e0));
    out.payload.set("entropy_bits", JValue::number(bits));
    out.payload.set("bound_bits", JValue::integer(M));
    const bool exact_power = g.dim() == (std::int64_t(1) << M);
    out.payload.set("multiplet_is_exactly_2_to_M", JValue::boolean(exact_power));
    out.pass = bits >= M - 1e-9;
    out.fail_reason = "mixture entropy falls below the certified bound";
    return out;
}

inline TaskOutput task_classical_orbit(const RunConfig& c) {
    auto lat = build(c.lattice);
    ClassicalConfig cfg;
    if (!c.angles.empty()) {
        cfg.angles = c.angles;
    } else if (c.angle_mode == "uniform") {
        cfg.angles.assign(lat.n_sites(), c.angle);
    } else {
        std::mt19937_64 rng(c.angle_seed);
        std::uniform_real_distribution<double> u(0.0, 6.283185307179586);
        cfg.angles.resize(lat.n_sites());
        for (auto& a : cfg.angles) a = u(rng);
    }
    auto orb = classical_orbit(cfg, lat, c.cpl);
    const long long expected = 1ll << c.lattice.L;
    TaskOutput out;
    out.payload.set("orbit_size", JValue::integer(orb.orbit_size));
    out.payload.set("expected", JValue::integer(expected));
    out.payload.set("base_energy", JValue::number(orb.base_energy));
    out.payload.set("energy_spread", JValue::number(orb.energy_spread));
    out.payload.set("warnings", jsonio::array_of(orb.warnings));
    out.pass = orb.orbit_size == expected && orb.energy_spread <= c.tol_orbit;
    out.fail_reason = "reflection orbit is smaller than 2^L or not energy-degenerate";
    return out;
}

inline TaskOutput task_correlator_decay(const RunConfig& c) {
    auto lat = build(c.lattice);
    if (lattice_is_3d(lat))
        throw std::invalid_argument("correlator-decay requires a 2d lattice");
    auto h = build_model(lat, c.model_kind, c.cpl, c.frame, c.generic_terms);
    SolveOptions opts = c.solver;
    opts.n_eigs = -1;
    opts.vectors = true;
    auto res = solve_resolved(lat, h, opts);
    auto cen = degeneracy_census(res.spectra, 1, c.tol_rel);
    auto g = ground_multiplet(res.spectra, cen.tol_abs);
    const auto& basis = res.spectra[g.sector[0]].basis;
    const auto& v = g.vectors[0];

    // sigma^x is frame-invariant, and an X_i X_j pair within one row preserves
    // every row parity, so the correlator lives inside the sector.
    const int a0 = lat.site_at({0, 0, 0});
    if (a0 < 0) throw std::invalid_argument("correlator-decay: site (0,0) is vacant");
    int max_d = c.max_separation > 0 ? c.max_separation : c.lattice.L - 1;
    JValue seps = JValue::array(), vals = JValue::array();
    const PauliString xa = single(a0, Axis::X, h.n_sites);
    for (int d = 1; d <= max_d; ++d) {
        const int b = lat.site_at({d, 0, 0});
        if (b < 0) continue;  // vacancy: skip the pair, keep going
        const PauliString xb = single(b, Axis::X, h.n_sites);
        const double val = connected_correlator(xa, xb, basis, v);
        seps.push(JValue::integer(d));
        vals.push(JValue::number(val));
    }
    TaskOutput out;
    out.payload.set("flavor", JValue::string("xx"));
    out.payload.set("row", JValue::integer(0));
    out.payload.set("sector", JValue::string(basis.label_string()));
    out.payload.set("e0", JValue::number(g.e0));
    out.payload.set("separations", seps);
    out.payload.set("values", vals);
    return out;
}

inline TaskOutput task_variational_strings(const RunConfig& c) {
    require_seam_geometry(c);
    auto sv = variational_strings(c.lattice.L, c.cpl.Jx, c.cpl.Jy, c.tol_ortho);
    TaskOutput out;
    out.payload.set("L", JValue::integer(sv.L));
    out.payload.set("e_cyl", JValue::number(sv.e_cyl));
    out.payload.set("ref_sector_code", JValue::integer(sv.ref_code));
    JValue patterns = JValue::array();
    for (auto p : sv.pattern) patterns.push(JValue::integer(p));
    out.payload.set("flip_patterns", patterns);
    out.payload.set("energies", jsonio::array_of(sv.energy));
    out.payload.set("max_overlap", JValue::number(sv.max_overlap));
    out.payload.set("uniform_index", JValue::integer(sv.uniform_index));
    out.payload.set("staggered_index", JValue::integer(sv.staggered_index));
    out.payload.set("uniform_is_min", JValue::boolean(sv.uniform_is_min));
    out.payload.set("staggered_is_max", JValue::boolean(sv.staggered_is_max));
    out.pass = sv.uniform_is_min && sv.staggered_is_max && sv.max_overlap <= c.tol_ortho;
    out.fail_reason = "string states are not orthogonal or not energy-ordered as claimed";
    return out;
}

inline TaskOutput dispatch(const RunConfig& c) {
    if (c.task == "verify-symmetries") return task_verify_symmetries(c);
    if (c.task == "certificate") return task_certificate(c);
    if (c.task == "spectrum") return task_spectrum(c);
    if (c.task == "census") return task_census(c);
    if (c.task == "sector-compare") return task_sector_compare(c);
    if (c.task == "zipper-analysis") return task_zipper_analysis(c);
    if (c.task == "free-fermion") return task_free_fermion(c);
    if (c.task == "perturbation-sweep") return task_perturbation_sweep(c);
    if (c.task == "entropy") return task_entropy(c);
    if (c.task == "classical-orbit") return task_classical_orbit(c);
    if (c.task == "correlator-decay") return task_correlator_decay(c);
    if (c.task == "variational-strings") return task_variational_strings(c);
    throw std::invalid_argument("unknown task '" + c.task + "'");  // unreachable
}

}  // namespace detail

// ----------------------------------------------------------------------------
// RunRecord assembly with the exit-code contract
// ----------------------------------------------------------------------------

struct RunResult {
    int exit_code = 0;
    JValue record = JValue::object();
    std::map<std::string, std::string> files;
};

// Execute one parsed config and wrap the outcome in a RunRecord.  The record
// always carries the config echo, digest, tool version and an errors array;
// wall time is attached outside the payload so payload bytes stay identical
// across runs.
inline RunResult run_task(const json& config_json) {
    RunResult r;
    JValue errors = JValue::array();
    JValue payload = JValue::object();
    std::string status = "pass";
    std::string task_name = "unknown";

    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (config_json.is_object()) {
            if (const auto* t = detail::find(config_json, "task"))
                if (t->is_string()) task_name = t->get<std::string>();
        }
        RunConfig cfg = parse_config(config_json);
        auto out = detail::dispatch(cfg);
        payload = std::move(out.payload);
        r.files = std::move(out.files);
        if (!out.pass) {
            status = "fail";
            r.exit_code = 1;
            JValue e = JValue::object();
            e.set("code", JValue::string("verdict"));
            e.set("message", JValue::string(out.fail_reason));
            errors.push(e);
        }
    } catch (const budget_error& ex) {
        status = "error";
        r.exit_code = 3;
        JValue e = JValue::object();
        e.set("code", JValue::string("budget"));
        e.set("message", JValue::string(ex.what()));
        errors.push(e);
    } catch (const verdict_error& ex) {
        status = "fail";
        r.exit_code = 1;
        JValue e = JValue::object();
        e.set("code", JValue::string("verdict"));
        e.set("message", JValue::string(ex.what()));
        errors.push(e);
    } catch (const json::exception& ex) {
        status = "error";
        r.exit_code = 2;
        JValue e = JValue::object();
        e.set("code", JValue::string("config"));
        e.set("message", JValue::string(ex.what()));
        errors.push(e);
    } catch (const std::invalid_argument& ex) {
        status = "error";
        r.exit_code = 2;
        JValue e = JValue::object();
        e.set("code", JValue::string("config"));
        e.set("message", JValue::string(ex.what()));
        errors.push(e);
    } catch (const std::exception& ex) {
        status = "error";
        r.exit_code = 4;
        JValue e = JValue::object();
        e.set("code", JValue::string("internal"));
        e.set("message", JValue::string(ex.what()));
        errors.push(e);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    r.record.set("tool", JValue::string(kToolName));
    r.record.set("version", JValue::string(kToolVersion));
    r.record.set("task", JValue::string(task_name));
    r.record.set("config", jsonio::canonical(config_json));
    r.record.set("config_digest", JValue::string(jsonio::config_digest(config_json)));
    r.record.set("status", JValue::string(status));
    r.record.set("errors", errors);
    r.record.set("payload", payload);
    r.record.set("wall_time_s", JValue::number(wall));
    return r;
}

// Parse raw text, then run.  Unparseable text is a config error.
inline RunResult run_task_text(const std::string& raw) {
    json parsed;
    try {
        parsed = json::parse(raw);
    } catch (const json::exception& ex) {
        RunResult r;
        r.exit_code = 2;
        JValue e = JValue::object();
        e.set("code", JValue::string("config"));
        e.set("message", JValue::string(ex.what()));
        JValue errors = JValue::array();
        errors.push(e);
        r.record.set("tool", JValue::string(kToolName));
        r.record.set("version", JValue::string(kToolVersion));
        r.record.set("task", JValue::string("unknown"));
        r.record.set("status", JValue::string("error"));
        r.record.set("errors", errors);
        r.record.set("payload", JValue::object());
        return r;
    }
    return run_task(parsed);
}

// ----------------------------------------------------------------------------
// Sweep: cartesian product over axes, aggregate CSV
// ----------------------------------------------------------------------------

struct SweepAxis {
    std::string key;                  // "L", "ratio", or a dotted config path
    std::vector<std::string> values;  // literal value strings
};

// "L=2,3,4" -> axis
inline SweepAxis parse_axis(const std::string& text) {
    auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= text.size())
        throw std::invalid_argument("axis must look like key=v1,v2,...  got '" + text + "'");
    SweepAxis ax;
    ax.key = text.substr(0, eq);
    std::string rest = text.substr(eq + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
        auto comma = rest.find(',', pos);
        std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos
                                                                       : comma - pos);
        if (item.empty()) throw std::invalid_argument("axis '" + ax.key + "' has an empty value");
        ax.values.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return ax;
}

namespace detail {

inline json parse_number_token(const std::string& s, const std::string& where) {
    json v;
    try {
        v = json::parse(s);
    } catch (const json::exception&) {
        throw std::invalid_argument(where + ": '" + s + "' is not a number");
    }
    if (!v.is_number()) throw std::invalid_argument(where + ": '" + s + "' is not a number");
    return v;
}

// Apply one axis assignment to a config.  "L" and "ratio" are the physical
// shortcuts; anything else is a dotted path into the document.
inline void apply_axis_value(json& cfg, const std::string& key, const std::string& value) {
    if (key == "L") {
        json v = parse_number_token(value, "axis L");
        if (!v.is_number_integer()) throw std::invalid_argument("axis L values must be integers");
        cfg["lattice"]["L"] = v;
        return;
    }
    if (key == "ratio") {
        json v = parse_number_token(value, "axis ratio");
        double jx = 1.0;
        if (cfg.contains("model") && cfg["model"].contains("Jx"))
            jx = cfg["model"]["Jx"].get<double>();
        cfg["model"]["Jy"] = v.get<double>() * jx;
        return;
    }
    // dotted path, e.g. "model.Jz" or "solver.seed"
    json* node = &cfg;
    std::size_t pos = 0;
    while (true) {
        auto dot = key.find('.', pos);
        std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos
                                                                    : dot - pos);
        if (part.empty()) throw std::invalid_argument("axis key '" + key + "' is malformed");
        if (dot == std::string::npos) {
            (*node)[part] = parse_number_token(value, "axis " + key);
            return;
        }
        node = &(*node)[part];
        pos = dot + 1;
    }
}

}  // namespace detail

struct SweepPoint {
    json config;
    int L = 0;
    double ratio = 0.0;
    RunResult result;
};

struct SweepResult {
    std::vector<SweepPoint> points;  // input (cartesian-product) order
    std::string csv;                 // aggregate table
    JValue aggregate = JValue::object();
    int exit_code = 0;               // first nonzero point code, else 0
};

// Expand the cartesian product (first axis outermost), preserving order.
inline std::vector<json> expand_template(const json& templ,
                                         const std::vector<SweepAxis>& axes) {
    std::vector<json> configs = {templ};
    for (const auto& ax : axes) {
        std::vector<json> next;
        next.reserve(configs.size() * ax.values.size());
        for (const auto& base : configs)
            for (const auto& value : ax.values) {
                json cfg = base;
                detail::apply_axis_value(cfg, ax.key, value);
                next.push_back(std::move(cfg));
            }
        configs = std::move(next);
    }
    return configs;
}

// Run every point (bounded worker pool, results buffered in input order) and
// aggregate the pinned CSV: L, ratio, multiplet_dim, spread, fit_slope.
// Failed points keep their L/ratio cells, leave the rest empty, and are
// excluded from the per-ratio log-linear fit.
inline SweepResult run_sweep(const json& templ, const std::vector<SweepAxis>& axes,
                             int threads = 1) {
    if (!templ.is_object() || !templ.contains("task") ||
        templ["task"] != json("perturbation-sweep"))
        throw std::invalid_argument("sweep drives the perturbation-sweep task; "
                                    "set task accordingly in the template");
    auto configs = expand_template(templ, axes);

    SweepResult sw;
    sw.points.resize(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i)
        sw.points[i].config = configs[i];

    const int n_workers =
        std::max(1, std::min<int>(threads, static_cast<int>(configs.size())));
    std::atomic<std::size_t> cursor{0};
    auto work = [&]() {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= sw.points.size()) break;
            sw.points[i].result = run_task(sw.points[i].config);
        }
    };
    if (n_workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    // Pull L and ratio out of each point's config for the table.
    for (auto& p : sw.points) {
        p.L = p.config.contains("lattice") && p.config["lattice"].contains("L")
                  ? p.config["lattice"]["L"].get<int>()
                  : 0;
        double jx = 1.0, jy = 0.7;
        if (p.config.contains("model")) {
            const auto& m = p.config["model"];
            if (m.contains("Jx")) jx = m["Jx"].get<double>();
            if (m.contains("Jy")) jy = m["Jy"].get<double>();
        }
        p.ratio = jy / jx;
        if (sw.exit_code == 0 && p.result.exit_code != 0)
            sw.exit_code = p.result.exit_code;
    }

    // Per-ratio log-linear fit of spread vs L over the successful points.
    // The payload is deterministic JSON, so parsing it back is lossless.
    std::map<double, std::vector<std::pair<double, double>>> by_ratio;
    std::vector<double> spread_of(sw.points.size(),
                                  std::numeric_limits<double>::quiet_NaN());
    std::vector<long long> dim_of(sw.points.size(), -1);
    for (std::size_t i = 0; i < sw.points.size(); ++i) {
        const auto& p = sw.points[i];
        if (p.result.exit_code != 0) continue;
        json pay = json::parse(p.result.record.at("payload").dump());
        spread_of[i] = pay.at("spread").get<double>();
        dim_of[i] = pay.at("multiplet_dim").get<long long>();
        by_ratio[p.ratio].emplace_back(double(p.L), spread_of[i]);
    }
    std::map<double, double> slope_of;  // ratio -> fit slope (when computable)
    for (auto& [ratio, pts] : by_ratio) {
        std::vector<double> xs, ys;
        for (auto& [x, y] : pts) {
            xs.push_back(x);
            ys.push_back(y);
        }
        try {
            slope_of[ratio] = log_linear_slope(xs, ys);
        } catch (const std::invalid_argument&) {
            // fewer than two distinct L values or non-positive spreads: no fit
        }
    }

    std::string csv = "L,ratio,multiplet_dim,spread,fit_slope\n";
    JValue rows = JValue::array();
    for (std::size_t i = 0; i < sw.points.size(); ++i) {
        const auto& p = sw.points[i];
        JValue row = JValue::object();
        row.set("L", JValue::integer(p.L));
        row.set("ratio", JValue::number(p.ratio));
        csv += std::to_string(p.L) + "," + detail::csv_double(p.ratio) + ",";
        if (p.result.exit_code == 0) {
            csv += std::to_string(dim_of[i]) + "," + detail::csv_double(spread_of[i]) + ",";
            row.set("multiplet_dim", JValue::integer(dim_of[i]));
            row.set("spread", JValue::number(spread_of[i]));
            auto it = slope_of.find(p.ratio);
            if (it != slope_of.end()) {
                csv += detail::csv_double(it->second);
                row.set("fit_slope", JValue::number(it->second));
            } else {
                row.set("fit_slope", JValue::null());
            }
        } else {
            csv += ",,";  // failed point: cells stay empty, error kept in its record
            row.set("status", JValue::string("error"));
            row.set("exit_code", JValue::integer(p.result.exit_code));
        }
        csv += "\n";
        rows.push(row);
    }
    sw.csv = csv;
    sw.aggregate.set("rows", rows);
    sw.aggregate.set("n_points", JValue::integer(static_cast<long long>(sw.points.size())));
    return sw;
}

}  // namespace compasskit::runner
