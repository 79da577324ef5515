#pragma once
// ============================================================================
// Exact algebra of multi-site Pauli operators in the symplectic bit-mask
// representation.
//
// A PauliString stores an operator of the form
//
//     i^phase_exp * prod_r X_r^{x_mask[r]} * prod_r Z_r^{z_mask[r]}
//
// i.e. the normal form "all X factors to the left of all Z factors", with a
// global prefactor tracked as an integer power of i.  A site with both bits
// set carries X*Z = -i*sigma^y, so a literal sigma^y factor is encoded as
// (x=1, z=1) together with a +1 contribution to phase_exp.
//
// All operations are pure integer/bit manipulation - no floating point - so
// products, commutators and Hermiticity checks are exact at any system size.
// Masks are multi-word, so symmetry-algebra checks run on thousands of sites
// without ever touching a Hilbert-space object.
// ============================================================================

#include <bit>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace compasskit {

// ----------------------------------------------------------------------------
// BitMask: fixed-width bit vector (width = number of lattice sites)
// ----------------------------------------------------------------------------
class BitMask {
public:
    BitMask() : n_bits_(0) {}
    explicit BitMask(int n_bits)
        : n_bits_(n_bits), w_((static_cast<size_t>(n_bits) + 63) / 64, 0) {
        if (n_bits < 0) throw std::invalid_argument("BitMask: negative width");
    }

    int size() const { return n_bits_; }

    bool get(int i) const {
        check_index(i);
        return (w_[static_cast<size_t>(i) / 64] >> (i % 64)) & 1u;
    }
    void set(int i, bool v = true) {
        check_index(i);
        const std::uint64_t bit = std::uint64_t(1) << (i % 64);
        if (v) w_[static_cast<size_t>(i) / 64] |= bit;
        else   w_[static_cast<size_t>(i) / 64] &= ~bit;
    }
    void flip(int i) { set(i, !get(i)); }

    BitMask& operator^=(const BitMask& o) {
        check_width(o);
        for (size_t k = 0; k < w_.size(); ++k) w_[k] ^= o.w_[k];
        return *this;
    }
    BitMask& operator|=(const BitMask& o) {
        check_width(o);
        for (size_t k = 0; k < w_.size(); ++k) w_[k] |= o.w_[k];
        return *this;
    }
    BitMask& operator&=(const BitMask& o) {
        check_width(o);
        for (size_t k = 0; k < w_.size(); ++k) w_[k] &= o.w_[k];
        return *this;
    }
    friend BitMask operator^(BitMask a, const BitMask& b) { return a ^= b; }
    friend BitMask operator|(BitMask a, const BitMask& b) { return a |= b; }
    friend BitMask operator&(BitMask a, const BitMask& b) { return a &= b; }

    bool operator==(const BitMask& o) const {
        return n_bits_ == o.n_bits_ && w_ == o.w_;
    }
    bool operator!=(const BitMask& o) const { return !(*this == o); }

    bool any() const {
        for (auto w : w_) if (w) return true;
        return false;
    }
    bool none() const { return !any(); }

    int popcount() const {
        int c = 0;
        for (auto w : w_) c += std::popcount(w);
        return c;
    }
    // popcount(a & b) without materializing the intersection
    static int overlap(const BitMask& a, const BitMask& b) {
        a.check_width(b);
        int c = 0;
        for (size_t k = 0; k < a.w_.size(); ++k)
            c += std::popcount(a.w_[k] & b.w_[k]);
        return c;
    }

    // Lowest set bit index, -1 if empty.
    int lowest() const {
        for (size_t k = 0; k < w_.size(); ++k)
            if (w_[k]) return static_cast<int>(k * 64 + std::countr_zero(w_[k]));
        return -1;
    }

    std::vector<int> bits() const {
        std::vector<int> out;
        for (int i = 0; i < n_bits_; ++i)
            if (get(i)) out.push_back(i);
        return out;
    }

    // Low 64 bits, for interop with Hilbert-space basis states (n_sites <= 64).
    std::uint64_t low64() const {
        if (n_bits_ > 64)
            throw std::logic_error("BitMask::low64 on mask wider than 64 bits");
        return w_.empty() ? 0 : w_[0];
    }
    static BitMask from_bits(int n_bits, std::uint64_t bits) {
        if (n_bits > 64) throw std::logic_error("BitMask::from_bits: width > 64");
        BitMask m(n_bits);
        if (!m.w_.empty()) m.w_[0] = bits;
        return m;
    }

    std::size_t hash() const {
        std::uint64_t h = 1469598103934665603ull;  // FNV-1a over words
        for (auto w : w_) { h ^= w; h *= 1099511628211ull; }
        return static_cast<std::size_t>(h ^ static_cast<std::uint64_t>(n_bits_));
    }

private:
    void check_index(int i) const {
        if (i < 0 || i >= n_bits_)
            throw std::out_of_range("BitMask: bit index out of range");
    }
    void check_width(const BitMask& o) const {
        if (n_bits_ != o.n_bits_)
            throw std::invalid_argument("BitMask: width mismatch");
    }

    int n_bits_;
    std::vector<std::uint64_t> w_;
};

// ----------------------------------------------------------------------------
// PauliString
// ----------------------------------------------------------------------------
enum class Axis { X, Y, Z };

inline char axis_name(Axis a) {
    switch (a) {
        case Axis::X: return 'x';
        case Axis::Y: return 'y';
        case Axis::Z: return 'z';
    }
    return '?';
}
inline Axis axis_from_char(char c) {
    switch (c) {
        case 'x': case 'X': return Axis::X;
        case 'y': case 'Y': return Axis::Y;
        case 'z': case 'Z': return Axis::Z;
    }
    throw std::invalid_argument(std::string("unknown Pauli axis '") + c + "'");
}

struct PauliString {
    int n_sites = 0;
    BitMask x_mask;   // bit r set  <=>  sigma^x factor at site r
    BitMask z_mask;   // bit r set  <=>  sigma^z factor at site r
    int phase_exp = 0;  // global prefactor i^phase_exp, in {0,1,2,3}

    PauliString() = default;
    explicit PauliString(int n)
        : n_sites(n), x_mask(n), z_mask(n), phase_exp(0) {
        if (n <= 0) throw std::invalid_argument("PauliString: n_sites must be positive");
    }

    bool is_identity() const {
        return x_mask.none() && z_mask.none() && phase_exp == 0;
    }
    // Support = sites carrying a non-identity factor.
    BitMask support() const { return x_mask | z_mask; }
    int weight() const { return support().popcount(); }

    bool operator==(const PauliString& o) const {
        return n_sites == o.n_sites && phase_exp == o.phase_exp &&
               x_mask == o.x_mask && z_mask == o.z_mask;
    }
};

inline PauliString identity_string(int n_sites) { return PauliString(n_sites); }

// Hermitian single-site Pauli operator; sigma^y = i * X * Z = (x=1,z=1,phase=1).
inline PauliString single(int site, Axis axis, int n_sites) {
    if (site < 0 || site >= n_sites)
        throw std::out_of_range("single: site out of range");
    PauliString p(n_sites);
    switch (axis) {
        case Axis::X: p.x_mask.set(site); break;
        case Axis::Z: p.z_mask.set(site); break;
        case Axis::Y:
            p.x_mask.set(site);
            p.z_mask.set(site);
            p.phase_exp = 1;
            break;
    }
    return p;
}

// Product P*Q.  Normal-form reordering: moving Q's X factors past P's Z
// factors contributes (-1) per overlapping site, tracked as +2 mod 4.
inline PauliString multiply(const PauliString& P, const PauliString& Q) {
    if (P.n_sites != Q.n_sites)
        throw std::invalid_argument("multiply: mismatched n_sites");
    PauliString r(P.n_sites);
    r.x_mask = P.x_mask ^ Q.x_mask;
    r.z_mask = P.z_mask ^ Q.z_mask;
    r.phase_exp = (P.phase_exp + Q.phase_exp +
                   2 * BitMask::overlap(P.z_mask, Q.x_mask)) % 4;
    return r;
}

// [P,Q] = 0 iff the symplectic overlap parity is even; Pauli strings either
// commute or anticommute, so `false` means {P,Q} = 0 exactly.
inline bool commutes(const PauliString& P, const PauliString& Q) {
    if (P.n_sites != Q.n_sites)
        throw std::invalid_argument("commutes: mismatched n_sites");
    return ((BitMask::overlap(P.x_mask, Q.z_mask) +
             BitMask::overlap(P.z_mask, Q.x_mask)) % 2) == 0;
}

// P is Hermitian iff P*P = +Identity, i.e. phase_exp and the number of
// sites carrying both X and Z (the sigma^y count) have equal parity.
inline bool is_hermitian(const PauliString& P) {
    return ((P.phase_exp + BitMask::overlap(P.x_mask, P.z_mask)) % 2) == 0;
}

inline std::complex<double> i_power(int p) {
    switch (((p % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

// Action on a computational z-basis state |b>:  P|b> = amp * |b ^ x_mask>,
// amp = i^phase_exp * (-1)^{|z_mask & b|}.  Only valid for n_sites <= 64.
struct BasisImage {
    std::uint64_t state;
    std::complex<double> amp;
};

inline BasisImage apply_to_basis_state(const PauliString& P, std::uint64_t b) {
    if (P.n_sites > 64)
        throw std::invalid_argument("apply_to_basis_state: n_sites > 64");
    if (P.n_sites < 64 && (b >> P.n_sites) != 0)
        throw std::invalid_argument("apply_to_basis_state: state wider than n_sites");
    const std::uint64_t x = P.x_mask.low64();
    const std::uint64_t z = P.z_mask.low64();
    const int sign = std::popcount(z & b) % 2;
    return {b ^ x, i_power(P.phase_exp + 2 * sign)};
}

// Text rendering "i^p · X(sites) Z(sites)" for logs and golden files.
inline std::string render(const PauliString& P) {
    std::string s = "i^" + std::to_string(P.phase_exp);
    auto list = [](const BitMask& m) {
        std::string o = "(";
        bool first = true;
        for (int i : m.bits()) {
            if (!first) o += ",";
            o += std::to_string(i);
            first = false;
        }
        return o + ")";
    };
    if (P.x_mask.any()) s += " · X" + list(P.x_mask);
    if (P.z_mask.any()) s += " · Z" + list(P.z_mask);
    if (!P.x_mask.any() && !P.z_mask.any()) s += " · I";
    return s;
}

// ----------------------------------------------------------------------------
// PauliPolynomial: complex-linear combination of Pauli strings, used for exact
// symbolic commutators ([H,S] collected term-by-term with cancellation).
// ----------------------------------------------------------------------------
class PauliPolynomial {
public:
    explicit PauliPolynomial(int n_sites) : n_(n_sites) {}

    int n_sites() const { return n_; }

    // Adds coeff * P, folding P's i^phase prefactor into the coefficient so
    // keys are phase-free (x,z) pairs and opposite-phase terms cancel.
    void add(std::complex<double> coeff, const PauliString& P) {
        if (P.n_sites != n_)
            throw std::invalid_argument("PauliPolynomial::add: size mismatch");
        Key k{P.x_mask, P.z_mask};
        terms_[k] += coeff * i_power(P.phase_exp);
    }

    double one_norm() const {
        double s = 0;
        for (auto& [k, c] : terms_) s += std::abs(c);
        return s;
    }
    bool is_zero(double tol = 0.0) const {
        for (auto& [k, c] : terms_)
            if (std::abs(c) > tol) return false;
        return true;
    }
    // Surviving terms (nonzero coefficient), rendered for diagnostics.
    std::vector<std::pair<std::complex<double>, std::string>> survivors(
        double tol = 0.0) const {
        std::vector<std::pair<std::complex<double>, std::string>> out;
        for (auto& [k, c] : terms_) {
            if (std::abs(c) <= tol) continue;
            PauliString p(n_);
            p.x_mask = k.x;
            p.z_mask = k.z;
            out.push_back({c, render(p)});
        }
        return out;
    }

private:
    struct Key {
        BitMask x, z;
        bool operator==(const Key& o) const { return x == o.x && z == o.z; }
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            return k.x.hash() * 1000003u ^ k.z.hash();
        }
    };
    int n_;
    std::unordered_map<Key, std::complex<double>, KeyHash> terms_;
};

}  // namespace compasskit
