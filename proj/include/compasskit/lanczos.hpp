#pragma once
// ============================================================================
// Lanczos iteration with full reorthogonalization for the lowest eigenpairs
// of a real symmetric operator given only through its matrix-vector product.
// Deterministic: the start vector comes from a caller-supplied seed.
// ============================================================================

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "dense.hpp"
#include "errors.hpp"

namespace compasskit {

struct LanczosOptions {
    int max_iter = 500;
    double tol = 1e-12;          // Ritz residual-bound target, relative to |theta|max
    std::uint64_t seed = 20240601;
};

struct LanczosResult {
    std::vector<double> evals;                // lowest k, ascending
    std::vector<std::vector<double>> evecs;   // matching Ritz vectors
    int iterations = 0;
    double max_residual = 0.0;                // explicit ||A x - theta x||_2, max over pairs
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Two-pass classical Gram-Schmidt against the whole basis.
inline void reorthogonalize(std::vector<double>& w,
                            const std::vector<std::vector<double>>& basis) {
    for (int pass = 0; pass < 2; ++pass)
        for (auto& v : basis) {
            double c = dot(v, w);
            for (size_t i = 0; i < w.size(); ++i) w[i] -= c * v[i];
        }
}

}  // namespace detail

// mv(in, out) must compute out = A * in for a symmetric A of dimension dim.
template <class MV>
LanczosResult lanczos_lowest(MV&& mv, int dim, int k, const LanczosOptions& opt = {}) {
    if (dim <= 0 || k <= 0 || k > dim)
        throw std::invalid_argument("lanczos_lowest: need 0 < k <= dim");

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    auto random_vec = [&] {
        std::vector<double> v(dim);
        for (auto& x : v) x = uni(rng);
        return v;
    };

    std::vector<std::vector<double>> V;  // Lanczos basis
    std::vector<double> alpha, beta;     // tridiagonal entries; beta[j] couples j and j+1

    std::vector<double> v0 = random_vec();
    {
        double n = detail::norm2(v0);
        for (auto& x : v0) x /= n;
    }
    V.push_back(std::move(v0));

    const int m_max = std::min(dim, opt.max_iter);
    std::vector<double> w(dim);

    auto tridiag_lowest = [&](bool vectors, std::vector<double>& theta,
                              std::vector<double>& z) {
        const int m = static_cast<int>(alpha.size());
        theta = alpha;
        std::vector<double> off(beta.begin(), beta.begin() + (m > 0 ? m - 1 : 0));
        z.assign(vectors ? static_cast<size_t>(m) * m : 1, 0.0);
        int info = LAPACKE_dstevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', m,
                                  theta.data(), off.data(), z.data(), m);
        if (info != 0) throw std::runtime_error("dstevd failed in lanczos");
    };

    bool converged = false;
    for (int j = 0; j < m_max; ++j) {
        mv(V[j].data(), w.data());
        double a = detail::dot(V[j], w);
        alpha.push_back(a);
        for (int i = 0; i < dim; ++i) w[i] -= a * V[j][i];
        if (j > 0)
            for (int i = 0; i < dim; ++i) w[i] -= beta[j - 1] * V[j - 1][i];
        detail::reorthogonalize(w, V);

        double b = detail::norm2(w);
        double scale = 1.0;
        for (double x : alpha) scale = std::max(scale, std::abs(x));

        if (static_cast<int>(V.size()) == dim) { converged = true; break; }

        if (b <= 1e-13 * scale) {
            // Invariant subspace found; restart with a fresh orthogonal vector.
            beta.push_back(0.0);
            std::vector<double> fresh = random_vec();
            detail::reorthogonalize(fresh, V);
            double n = detail::norm2(fresh);
            if (n <= 1e-10) { converged = true; break; }  // space exhausted
            for (auto& x : fresh) x /= n;
            V.push_back(std::move(fresh));
            continue;
        }

        beta.push_back(b);
        std::vector<double> next(dim);
        for (int i = 0; i < dim; ++i) next[i] = w[i] / b;
        V.push_back(std::move(next));

        // Periodic convergence test on the Ritz residual bounds |beta_j * z(m-1,i)|.
        const int m = static_cast<int>(alpha.size());
        if (m >= std::max(2 * k, 10) && (m % 10 == 0 || j == m_max - 1)) {
            std::vector<double> theta, z;
            tridiag_lowest(true, theta, z);
            bool all_ok = true;
            for (int i = 0; i < k; ++i) {
                double bound = std::abs(b * z[static_cast<size_t>(i) * m + (m - 1)]);
                if (bound > opt.tol * scale) { all_ok = false; break; }
            }
            if (all_ok) { converged = true; break; }
        }
    }

    if (!converged) {
        // One last check before giving up.
        std::vector<double> theta, z;
        tridiag_lowest(true, theta, z);
        const int m = static_cast<int>(alpha.size());
        double scale = 1.0;
        for (double x : alpha) scale = std::max(scale, std::abs(x));
        double tail = beta.empty() ? 0.0 : beta.back();
        converged = true;
        for (int i = 0; i < k; ++i)
            if (std::abs(tail * z[static_cast<size_t>(i) * m + (m - 1)]) > opt.tol * scale)
                converged = false;
        if (!converged)
            throw budget_error("lanczos did not converge within the iteration budget");
    }

    const int m = static_cast<int>(alpha.size());
    std::vector<double> theta, z;
    tridiag_lowest(true, theta, z);

    LanczosResult out;
    out.iterations = m;
    for (int i = 0; i < k; ++i) {
        out.evals.push_back(theta[i]);
        std::vector<double> x(dim, 0.0);
        for (int j = 0; j < m; ++j) {
            double c = z[static_cast<size_t>(i) * m + j];
            for (int r = 0; r < dim; ++r) x[r] += c * V[j][r];
        }
        double n = detail::norm2(x);
        for (auto& v : x) v /= n;
        out.evecs.push_back(std::move(x));
    }
    // Explicit residuals, not the Krylov bound.
    for (int i = 0; i < k; ++i) {
        mv(out.evecs[i].data(), w.data());
        double r2 = 0;
        for (int r = 0; r < dim; ++r) {
            double d = w[r] - out.evals[i] * out.evecs[i][r];
            r2 += d * d;
        }
        out.max_residual = std::max(out.max_residual, std::sqrt(r2));
    }
    return out;
}

}  // namespace compasskit
