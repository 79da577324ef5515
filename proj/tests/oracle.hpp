#pragma once
// ============================================================================
// Independent dense-matrix oracle for the unit tests.
//
// Deliberately implemented straight from the definition of the symplectic
// normal form: dense(P) = i^phase * kron_r(X or I) * kron_r(Z or I), with
// site 0 the least significant bit of the basis index.  No code is shared
// with the library's bit-mask algebra, so agreement is a real cross-check.
// ============================================================================

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <compasskit/pauli.hpp>

namespace oracle {

using cd = std::complex<double>;

struct Mat {
    int n = 0;                 // dimension
    std::vector<cd> a;         // row-major n*n

    Mat() = default;
    explicit Mat(int dim) : n(dim), a(static_cast<size_t>(dim) * dim, cd(0, 0)) {}

    cd& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
    const cd& at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
};

inline Mat eye(int n) {
    Mat m(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

inline Mat pauli2(char axis) {
    Mat m(2);
    switch (axis) {
        case 'i': m.at(0, 0) = 1; m.at(1, 1) = 1; break;
        case 'x': m.at(0, 1) = 1; m.at(1, 0) = 1; break;
        case 'y': m.at(0, 1) = cd(0, -1); m.at(1, 0) = cd(0, 1); break;
        case 'z': m.at(0, 0) = 1; m.at(1, 1) = -1; break;
        default: throw std::invalid_argument("pauli2: bad axis");
    }
    return m;
}

inline Mat kron(const Mat& A, const Mat& B) {
    Mat m(A.n * B.n);
    for (int ia = 0; ia < A.n; ++ia)
        for (int ja = 0; ja < A.n; ++ja)
            for (int ib = 0; ib < B.n; ++ib)
                for (int jb = 0; jb < B.n; ++jb)
                    m.at(ia * B.n + ib, ja * B.n + jb) = A.at(ia, ja) * B.at(ib, jb);
    return m;
}

inline Mat mul(const Mat& A, const Mat& B) {
    if (A.n != B.n) throw std::invalid_argument("mul: dim mismatch");
    Mat m(A.n);
    for (int i = 0; i < A.n; ++i)
        for (int k = 0; k < A.n; ++k) {
            const cd aik = A.at(i, k);
            if (aik == cd(0, 0)) continue;
            for (int j = 0; j < A.n; ++j) m.at(i, j) += aik * B.at(k, j);
        }
    return m;
}

inline Mat add(const Mat& A, const Mat& B, cd ca = 1.0, cd cb = 1.0) {
    if (A.n != B.n) throw std::invalid_argument("add: dim mismatch");
    Mat m(A.n);
    for (size_t k = 0; k < A.a.size(); ++k) m.a[k] = ca * A.a[k] + cb * B.a[k];
    return m;
}

inline Mat scale(const Mat& A, cd c) {
    Mat m = A;
    for (auto& v : m.a) v *= c;
    return m;
}

inline Mat dagger(const Mat& A) {
    Mat m(A.n);
    for (int i = 0; i < A.n; ++i)
        for (int j = 0; j < A.n; ++j) m.at(i, j) = std::conj(A.at(j, i));
    return m;
}

inline double max_abs_diff(const Mat& A, const Mat& B) {
    if (A.n != B.n) throw std::invalid_argument("max_abs_diff: dim mismatch");
    double d = 0;
    for (size_t k = 0; k < A.a.size(); ++k) d = std::max(d, std::abs(A.a[k] - B.a[k]));
    return d;
}

inline double max_abs(const Mat& A) {
    double d = 0;
    for (auto& v : A.a) d = std::max(d, std::abs(v));
    return d;
}

// dense(P) built from the normal-form definition (X factors left of Z).
inline Mat from_pauli(const compasskit::PauliString& P) {
    Mat xpart = eye(1), zpart = eye(1);
    xpart.at(0, 0) = 1;
    zpart.at(0, 0) = 1;
    for (int r = P.n_sites - 1; r >= 0; --r) {
        xpart = kron(xpart, pauli2(P.x_mask.get(r) ? 'x' : 'i'));
        zpart = kron(zpart, pauli2(P.z_mask.get(r) ? 'z' : 'i'));
    }
    return scale(mul(xpart, zpart), compasskit::i_power(P.phase_exp));
}

// Dense matrix of a term list sum_t coeff_t * P_t.
inline Mat from_terms(
    int n_sites,
    const std::vector<std::pair<double, compasskit::PauliString>>& terms) {
    Mat h(1 << n_sites);
    for (auto& [c, p] : terms) h = add(h, from_pauli(p), 1.0, c);
    return h;
}

inline Mat commutator(const Mat& A, const Mat& B) {
    return add(mul(A, B), mul(B, A), 1.0, -1.0);
}
inline Mat anticommutator(const Mat& A, const Mat& B) {
    return add(mul(A, B), mul(B, A), 1.0, 1.0);
}

}  // namespace oracle
