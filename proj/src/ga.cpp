#include "unisg/ga.hpp"

#include <bit>
#include <cmath>
#include <sstream>

namespace unisg::ga {

AlgebraSignature::AlgebraSignature(std::vector<int> squares) : squares_(std::move(squares)) {
    if (squares_.empty() || squares_.size() > 6)
        throw Error("AlgebraSignature: supported dimensions are 1..6");
    for (int s : squares_)
        if (s != 1 && s != -1 && s != 0)
            throw Error("AlgebraSignature: basis squares must be +1, -1 or 0");
}

AlgebraSignature AlgebraSignature::pga() { return AlgebraSignature({0, 1, 1, 1}); }

AlgebraSignature AlgebraSignature::cga() { return AlgebraSignature({1, 1, 1, 1, -1}); }

AlgebraSignature AlgebraSignature::generic(int p, int q, int r) {
    std::vector<int> sq;
    sq.insert(sq.end(), p, 1);
    sq.insert(sq.end(), q, -1);
    sq.insert(sq.end(), r, 0);
    return AlgebraSignature(std::move(sq));
}

int AlgebraSignature::count_of(int square) const {
    int n = 0;
    for (int s : squares_) n += (s == square);
    return n;
}

bool AlgebraSignature::is_pga() const { return squares_ == std::vector<int>{0, 1, 1, 1}; }

bool AlgebraSignature::is_cga() const { return squares_ == std::vector<int>{1, 1, 1, 1, -1}; }

std::string AlgebraSignature::blade_name(int mask) const {
    if (mask == 0) return "1";
    std::string name = "e";
    for (int i = 0; i < dims(); ++i) {
        if (!(mask & (1 << i))) continue;
        // PGA counts its null vector as e0; CGA starts at e1.
        name += std::to_string(is_pga() ? i : i + 1);
    }
    return name;
}

int blade_product_sign(unsigned mask_a, unsigned mask_b, const AlgebraSignature& sig) {
    int sign = 1;
    unsigned a = mask_a;
    for (int i = 0; i < sig.dims(); ++i) {
        const unsigned bit = 1u << i;
        if (!(mask_b & bit)) continue;
        // Move e_i leftward past the factors of `a` above it.
        if (std::popcount(a >> (i + 1)) & 1) sign = -sign;
        if (a & bit) {
            sign *= sig.basis_square(i);
            if (sign == 0) return 0;
        }
        a ^= bit;
    }
    return sign;
}

Multivector::Multivector(AlgebraSignature sig, Eigen::VectorXd coeffs)
    : sig_(std::move(sig)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != sig_.blade_count())
        throw Error("Multivector: coefficient count does not match signature");
}

Multivector Multivector::scalar(const AlgebraSignature& sig, double value) {
    Multivector m(sig);
    m[0] = value;
    return m;
}

Multivector Multivector::basis_vector(const AlgebraSignature& sig, int i) {
    if (i < 0 || i >= sig.dims()) throw Error("basis_vector: index out of range");
    return blade(sig, 1u << i, 1.0);
}

Multivector Multivector::blade(const AlgebraSignature& sig, unsigned mask, double coeff) {
    if (mask >= static_cast<unsigned>(sig.blade_count()))
        throw Error("blade: mask out of range");
    Multivector m(sig);
    m[mask] = coeff;
    return m;
}

std::string Multivector::to_string() const {
    std::ostringstream os;
    bool any = false;
    for (int mask = 0; mask < sig_.blade_count(); ++mask) {
        if (coeffs_[mask] == 0.0) continue;
        if (any) os << " + ";
        os << coeffs_[mask];
        if (mask != 0) os << "*" << sig_.blade_name(mask);
        any = true;
    }
    return any ? os.str() : "0";
}

Multivector geometric_product(const Multivector& a, const Multivector& b) {
    if (a.sig() != b.sig()) throw Error("geometric_product: signature mismatch");
    const int n = a.sig().blade_count();
    Multivector out(a.sig());
    for (int i = 0; i < n; ++i) {
        const double ca = a[i];
        if (ca == 0.0) continue;
        for (int j = 0; j < n; ++j) {
            const double cb = b[j];
            if (cb == 0.0) continue;
            const int sign = blade_product_sign(i, j, a.sig());
            if (sign != 0) out[i ^ j] += sign * ca * cb;
        }
    }
    return out;
}

Multivector reverse(const Multivector& a) {
    Multivector out = a;
    for (int mask = 0; mask < a.sig().blade_count(); ++mask) {
        const int k = std::popcount(static_cast<unsigned>(mask));
        if ((k * (k - 1) / 2) & 1) out[mask] = -out[mask];
    }
    return out;
}

Multivector grade_project(const Multivector& a, int k) {
    if (k < 0 || k > a.sig().dims()) throw Error("grade_project: grade out of range");
    Multivector out(a.sig());
    for (int mask = 0; mask < a.sig().blade_count(); ++mask)
        if (std::popcount(static_cast<unsigned>(mask)) == k) out[mask] = a[mask];
    return out;
}

Multivector operator+(const Multivector& a, const Multivector& b) {
    if (a.sig() != b.sig()) throw Error("multivector add: signature mismatch");
    return Multivector(a.sig(), a.coeffs() + b.coeffs());
}

Multivector operator-(const Multivector& a, const Multivector& b) {
    if (a.sig() != b.sig()) throw Error("multivector sub: signature mismatch");
    return Multivector(a.sig(), a.coeffs() - b.coeffs());
}

Multivector operator*(double s, const Multivector& a) {
    return Multivector(a.sig(), s * a.coeffs());
}

Multivector operator*(const Multivector& a, double s) { return s * a; }

Multivector operator/(const Multivector& a, double s) {
    if (s == 0.0) throw Error("multivector divide: division by zero scalar");
    return Multivector(a.sig(), a.coeffs() / s);
}

Multivector operator*(const Multivector& a, const Multivector& b) {
    return geometric_product(a, b);
}

double norm(const Multivector& a) {
    const Multivector sq = geometric_product(a, reverse(a));
    return std::sqrt(std::abs(sq.scalar_part()));
}

double max_abs_diff(const Multivector& a, const Multivector& b) {
    if (a.sig() != b.sig()) throw Error("max_abs_diff: signature mismatch");
    return (a.coeffs() - b.coeffs()).cwiseAbs().maxCoeff();
}

bool is_even_grade(const Multivector& a, double tol) {
    for (int mask = 0; mask < a.sig().blade_count(); ++mask)
        if ((std::popcount(static_cast<unsigned>(mask)) & 1) && std::abs(a[mask]) > tol)
            return false;
    return true;
}

Multivector cga_no(const AlgebraSignature& sig) {
    if (!sig.is_cga()) throw Error("cga_no: CGA signature required");
    Multivector m(sig);
    m[1u << 4] = 0.5;   // e5
    m[1u << 3] = -0.5;  // e4
    return m;
}

Multivector cga_ninf(const AlgebraSignature& sig) {
    if (!sig.is_cga()) throw Error("cga_ninf: CGA signature required");
    Multivector m(sig);
    m[1u << 3] = 1.0;
    m[1u << 4] = 1.0;
    return m;
}

namespace {

// PGA dual-point blade masks (bit 0 = e0).
constexpr unsigned kE123 = 0b1110;
constexpr unsigned kE023 = 0b1101;
constexpr unsigned kE013 = 0b1011;
constexpr unsigned kE012 = 0b0111;

Multivector embed_point(const AlgebraSignature& sig, const Eigen::Vector3d& p) {
    Multivector P(sig);
    if (sig.is_pga()) {
        P[kE123] = 1.0;
        P[kE023] = -p.x();
        P[kE013] = p.y();
        P[kE012] = -p.z();
    } else {  // CGA
        P[1] = p.x();
        P[2] = p.y();
        P[4] = p.z();
        const double half_sq = 0.5 * p.squaredNorm();
        P[8] = -0.5 + half_sq;   // e4
        P[16] = 0.5 + half_sq;   // e5
    }
    return P;
}

Eigen::Vector3d extract_point(const Multivector& Q) {
    if (Q.sig().is_pga()) {
        const double w = Q[kE123];
        if (std::abs(w) < 1e-12) throw Error("sandwich_apply: point at infinity");
        return {-Q[kE023] / w, Q[kE013] / w, -Q[kE012] / w};
    }
    const double a = Q[16] - Q[8];  // n_o weight
    if (std::abs(a) < 1e-12) throw Error("sandwich_apply: point at infinity");
    return {Q[1] / a, Q[2] / a, Q[4] / a};
}

}  // namespace

Eigen::Vector3d sandwich_apply(const Multivector& m, const Eigen::Vector3d& point, double tol) {
    if (!m.sig().is_pga() && !m.sig().is_cga())
        throw Error("sandwich_apply: PGA or CGA preset required");
    if (!is_even_grade(m, tol)) throw Error("sandwich_apply: versor must be even grade");
    Multivector unit = geometric_product(m, reverse(m));
    unit[0] -= 1.0;
    if (unit.coeffs().cwiseAbs().maxCoeff() > tol)
        throw Error("sandwich_apply: versor is not normalized");
    const Multivector P = embed_point(m.sig(), point);
    const Multivector Q = geometric_product(geometric_product(m, P), reverse(m));
    return extract_point(Q);
}

}  // namespace unisg::ga
