// Tests for the seam-perturbation lab: multiplet projection structure,
// finite-size decrease of the seam splitting, cylinder ground bands, the
// free-fermion dispersion comparison (with its frozen chain spectrum), the
// selection-rule sparsity audit, and variational string states.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "compasskit/lattice.hpp"
#include "compasskit/model.hpp"
#include "compasskit/perturb.hpp"
#include "compasskit/solver.hpp"
#include "compasskit/symmetry.hpp"

using namespace compasskit;

TEST_CASE("seam projection: diagonal in the one-state-per-sector basis") {
    for (double r : {0.1, 0.5}) {
        auto z2 = zipper_perturbation(2, 1.0, r);
        auto z3 = zipper_perturbation(3, 1.0, r);
        for (auto& z : {z2, z3}) {
            REQUIRE(z.multiplet_dim == (1 << z.L));
            REQUIRE(z.e0_spread < 1e-12);           // sector grounds coincide
            REQUIRE(z.max_offdiag == 0.0);          // structurally forced zeros
            REQUIRE(std::abs(z.splitting - z.diag_spread) < 1e-12);
            REQUIRE(z.min_sector_gap > 1.0);        // extraction is well separated
            REQUIRE(z.diag_spread > 0.0);
        }
        // Finite-size decrease of both measures.
        REQUIRE(z3.diag_spread < z2.diag_spread);
        REQUIRE(z3.splitting < z2.splitting);
    }
    auto z = zipper_perturbation(2, 1.0, 0.5);
    REQUIRE(std::abs(z.e0 - (-2.0615528128)) < 1e-9);
    REQUIRE(std::abs(z.diag_spread - 2.42535625e-01) < 1e-8);
    auto z31 = zipper_perturbation(3, 1.0, 0.1);
    REQUIRE(std::abs(z31.diag_spread - 8.89937843e-04) < 1e-10);
}

TEST_CASE("seam projection is invariant under vector sign remixing") {
    auto setup = detail::strip_setup(2, 1.0, 0.5);
    auto h_zip = build_zipper(setup.lat, 1.0, 0.5, Frame::rotated);
    auto sp = detail::sector_ground_pairs(setup.h_open, setup.table, 1);
    auto g = ground_multiplet(sp, 1e-9);
    REQUIRE(g.dim() == 4);
    auto proj1 = project_operator(h_zip, sp, g);
    for (int i : {1, 3})
        for (auto& x : g.vectors[i]) x = -x;
    auto proj2 = project_operator(h_zip, sp, g);
    REQUIRE(std::abs(eigen_spread(proj1, 4) - eigen_spread(proj2, 4)) < 1e-13);
    for (int i = 0; i < 4; ++i)
        REQUIRE(std::abs(proj1[i * 4 + i] - proj2[i * 4 + i]) < 1e-13);
}

TEST_CASE("cylinder ground band: one state per sector, shrinking spread") {
    auto b2 = cylinder_band(2, 1.0, 0.7);
    auto b3 = cylinder_band(3, 1.0, 0.7);
    REQUIRE(b2.multiplet_dim == 4);
    REQUIRE(b3.multiplet_dim == 8);
    REQUIRE(std::abs(b2.e0 - (-4.2379240201)) < 1e-9);
    REQUIRE(std::abs(b2.spread - 2.37924020e-01) < 1e-8);
    REQUIRE(std::abs(b3.spread - 1.30791780e-01) < 1e-8);
    REQUIRE(b3.spread < b2.spread);
    REQUIRE(b2.spread < b2.min_sector_gap);

    // Cross-check the band floor against a full-space dense solve.
    LatticeSpec ls;
    ls.kind = LatticeKind::cylinder;
    ls.L = 2;
    auto lat = build(ls);
    auto h = build_model(lat, ModelKind::pcm, Couplings{}, Frame::rotated);
    auto m = dense_matrix(h);
    const int dim = 1 << h.n_sites;
    std::vector<double> a(static_cast<size_t>(dim) * dim);
    for (size_t k = 0; k < a.size(); ++k) a[k] = m[k].real();
    auto ev = sym_eigs(a, dim, false);
    REQUIRE(std::abs(ev.front() - b2.e0) < 1e-11);
}

TEST_CASE("log-linear slope helper") {
    std::vector<double> xs = {2, 3, 4};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(std::exp(-2.0 * x));
    REQUIRE(std::abs(log_linear_slope(xs, ys) + 2.0) < 1e-12);
    REQUIRE_THROWS_AS(log_linear_slope({1.0}, {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(log_linear_slope({1.0, 2.0}, {1.0, -1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(log_linear_slope({1.0, 1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("seam chain: frozen exact spectrum and the dispersion mismatch") {
    auto ff = zipper_free_fermion(2, 1.0);
    REQUIRE(ff.zero_mode_present);
    REQUIRE(ff.ed_gaps.size() == 16);
    REQUIRE(ff.formula_gaps.size() == 16);

    // The 4-site seam chain spectrum is {+-1, +-sqrt(5)} each 4-fold.
    const double s5 = std::sqrt(5.0);
    std::vector<double> want;
    for (int i = 0; i < 4; ++i) want.push_back(0.0);
    for (int i = 0; i < 4; ++i) want.push_back(s5 - 1.0);
    for (int i = 0; i < 4; ++i) want.push_back(s5 + 1.0);
    for (int i = 0; i < 4; ++i) want.push_back(2.0 * s5);
    for (size_t i = 0; i < want.size(); ++i)
        REQUIRE(std::abs(ff.ed_gaps[i] - want[i]) < 1e-10);

    // The candidate dispersion does not reproduce the chain: the deviation is
    // order one, not a numerical artifact.
    REQUIRE_FALSE(ff.multisets_match);
    REQUIRE(ff.max_gap_dev > 1.0);
    REQUIRE(std::abs(ff.max_gap_dev - (8.0 - 2.0 * s5)) < 1e-10);

    for (int L : {3, 4}) {
        auto f = zipper_free_fermion(L, 1.0);
        REQUIRE(f.zero_mode_present);
        REQUIRE_FALSE(f.multisets_match);
        REQUIRE(f.max_gap_dev > 1.0);
    }
    REQUIRE_THROWS_AS(zipper_free_fermion(5, 1.0), std::invalid_argument);
}

TEST_CASE("selection-rule sparsity: seam terms and a deliberate row flipper") {
    auto setup = detail::strip_setup(2, 1.0, 0.7);
    SolveOptions opt;
    opt.vectors = true;
    auto sp = solve_all_sectors(setup.h_open, setup.table, opt);

    auto h_zip = build_zipper(setup.lat, 1.0, 0.7, Frame::rotated);
    auto rep = wigner_eckart_sparsity(h_zip, setup.table, sp, setup.lat.n_sites());
    REQUIRE(rep.max_forbidden <= 1e-12);
    REQUIRE(rep.max_allowed > 0.1);
    REQUIRE(rep.checked_forbidden > 0);

    // A single sigma^x flips exactly one row parity: its allowed block is the
    // single-flip partner sector and everything else is forbidden.
    Hamiltonian flip;
    flip.n_sites = setup.lat.n_sites();
    flip.frame = Frame::rotated;
    flip.kind_label = "probe";
    flip.terms.push_back({1.0, single(0, Axis::X, flip.n_sites)});
    auto rep2 = wigner_eckart_sparsity(flip, setup.table, sp, setup.lat.n_sites());
    REQUIRE(rep2.max_forbidden <= 1e-12);
    REQUIRE(rep2.max_allowed > 0.1);
}

TEST_CASE("partner transport preserves eigenvalues and sub-Hamiltonian averages") {
    auto setup = detail::strip_setup(3, 1.0, 0.7);
    SolveOptions opt;
    opt.vectors = true;
    auto sp = solve_all_sectors(setup.h_open, setup.table, opt);
    auto cert = find_dual_sets(setup.lat, setup.h_open);

    std::map<std::uint32_t, int> by_code;
    for (size_t s = 0; s < sp.size(); ++s) by_code[sp[s].basis.code] = static_cast<int>(s);

    // Transport eigenstate 5 of the first sector through V_1.
    auto& src = sp[0];
    const int k = 5;
    auto img_code = sector_image_code(src.basis.code, cert.V[1].op, setup.table.row_masks);
    auto& dst = sp[by_code[img_code]];
    auto w = transport(src.basis, src.evecs[k], cert.V[1].op, dst.basis);
    REQUIRE(std::abs(expectation(setup.h_open, dst.basis, w) - src.evals[k]) < 1e-10);

    // Any bond subset has identical averages on the partner states.
    auto sub = sub_hamiltonian(setup.h_open, {0, 3, 7, 9});
    double a = expectation(sub, src.basis, src.evecs[k]);
    double b = expectation(sub, dst.basis, w);
    REQUIRE(std::abs(a - b) < 1e-11);

    REQUIRE_THROWS_AS(transport(src.basis, src.evecs[k],
                                single(0, Axis::Z, setup.lat.n_sites()), dst.basis),
                      std::invalid_argument);
}

TEST_CASE("variational strings: orthogonal, spanning, ordered by pattern energy") {
    auto vs = variational_strings(3, 1.0, 0.7);
    REQUIRE(std::abs(vs.e_cyl - (-9.4406075346)) < 1e-9);
    REQUIRE(vs.max_overlap <= 1e-12);
    std::set<std::uint32_t> pats(vs.pattern.begin(), vs.pattern.end());
    REQUIRE(pats.size() == 8);  // the flip patterns span all row-parity shifts
    REQUIRE(vs.uniform_is_min);
    REQUIRE(vs.staggered_is_max);
    REQUIRE(std::abs(vs.energy[vs.uniform_index] - vs.e_cyl) < 1e-12);
    REQUIRE(std::abs(vs.energy[vs.staggered_index] - (-8.7979502122)) < 1e-9);
    // Single-row flips cost one seam bond each.
    for (size_t i = 0; i < vs.pattern.size(); ++i)
        if (vs.pattern[i] == 1u)
            REQUIRE(std::abs(vs.energy[i] - (-9.1192788734)) < 1e-9);
}

TEST_CASE("site restriction relabels supports and rejects leakage") {
    LatticeSpec ls;
    ls.kind = LatticeKind::parallelogram;
    ls.L = 2;
    ls.shift = 1;
    auto lat = build(ls);
    auto zip = build_zipper(lat, 1.0, 1.0, Frame::rotated);
    BitMask acc(lat.n_sites());
    for (auto& t : zip.terms) acc |= t.op.support();
    auto support = acc.bits();
    REQUIRE(support.size() == 4);
    auto chain = restrict_to_sites(zip, support);
    REQUIRE(chain.n_sites == 4);
    REQUIRE(chain.terms.size() == zip.terms.size());

    auto h = build_model(lat, ModelKind::pcm, Couplings{}, Frame::rotated);
    REQUIRE_THROWS_AS(restrict_to_sites(h, {0, 1}), std::invalid_argument);
    REQUIRE_THROWS_AS(restrict_to_sites(h, {0, 0}), std::invalid_argument);
    REQUIRE_THROWS_AS(restrict_to_sites(h, {99}), std::out_of_range);
}
