#pragma once
// ============================================================================
// Thin wrappers around LAPACKE's divide-and-conquer symmetric/Hermitian
// eigensolvers, plus dense-matrix assembly of small Hamiltonians.
// Matrices are column-major (LAPACK native).
// ============================================================================

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <stdexcept>
#include <string>
#include <vector>

namespace compasskit {

// Eigenvalues (ascending) of a real symmetric matrix; `a` is overwritten,
// with the orthonormal eigenvectors in its columns when `vectors` is set.
inline std::vector<double> sym_eigs(std::vector<double>& a, int n, bool vectors) {
    if (static_cast<size_t>(n) * n != a.size())
        throw std::invalid_argument("sym_eigs: matrix size mismatch");
    std::vector<double> w(n);
    int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'U', n,
                              a.data(), n, w.data());
    if (info != 0)
        throw std::runtime_error("dsyevd failed, info=" + std::to_string(info));
    return w;
}

// Eigenvalues (ascending) of a complex Hermitian matrix.
inline std::vector<double> herm_eigs(std::vector<std::complex<double>>& a, int n,
                                     bool vectors) {
    if (static_cast<size_t>(n) * n != a.size())
        throw std::invalid_argument("herm_eigs: matrix size mismatch");
    std::vector<double> w(n);
    int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'U', n,
                              a.data(), n, w.data());
    if (info != 0)
        throw std::runtime_error("zheevd failed, info=" + std::to_string(info));
    return w;
}

}  // namespace compasskit
