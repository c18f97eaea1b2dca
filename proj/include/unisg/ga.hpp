#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "unisg/errors.hpp"

namespace unisg::ga {

/// Clifford algebra signature Cl(p,q,r): p basis vectors squaring to +1,
/// q squaring to -1, r squaring to 0. Basis storage order is explicit
/// (`squares[i]` is the metric square of basis vector i) so that the two
/// presets below can match their conventional namings:
///
///   PGA, Cl(3,0,1), 16 blades: bit 0 = e0 (e0^2 = 0), bits 1..3 = e1..e3 (+1).
///   CGA, Cl(4,1,0), 32 blades: bits 0..3 = e1..e4 (+1), bit 4 = e5 (-1).
///
/// Blades are indexed by bitmask: bit i set <=> basis vector i is a factor,
/// factors in ascending bit order.
class AlgebraSignature {
public:
    AlgebraSignature() = default;
    explicit AlgebraSignature(std::vector<int> squares);

    static AlgebraSignature pga();
    static AlgebraSignature cga();
    /// Generic Cl(p,q,r) with storage order +1...,-1...,0...
    static AlgebraSignature generic(int p, int q, int r);

    int dims() const { return static_cast<int>(squares_.size()); }
    int blade_count() const { return 1 << dims(); }
    int basis_square(int i) const { return squares_[i]; }

    /// Number of basis vectors with the given metric square (+1, -1 or 0).
    int count_of(int square) const;

    bool is_pga() const;
    bool is_cga() const;

    bool operator==(const AlgebraSignature& other) const { return squares_ == other.squares_; }
    bool operator!=(const AlgebraSignature& other) const { return !(*this == other); }

    /// Human-readable blade name under this signature's conventions, e.g. "e12".
    std::string blade_name(int mask) const;

private:
    std::vector<int> squares_;
};

/// Product of two basis blades: result bitmask is a XOR b, the sign counts
/// basis transpositions and applies the metric on repeated factors.
/// Returns 0, +1 or -1.
int blade_product_sign(unsigned mask_a, unsigned mask_b, const AlgebraSignature& sig);

/// Dense multivector over the 2^n blades of a signature.
class Multivector {
public:
    Multivector() = default;
    explicit Multivector(AlgebraSignature sig)
        : sig_(std::move(sig)), coeffs_(Eigen::VectorXd::Zero(sig_.blade_count())) {}
    Multivector(AlgebraSignature sig, Eigen::VectorXd coeffs);

    static Multivector scalar(const AlgebraSignature& sig, double value);
    static Multivector basis_vector(const AlgebraSignature& sig, int i);
    static Multivector blade(const AlgebraSignature& sig, unsigned mask, double coeff);

    const AlgebraSignature& sig() const { return sig_; }
    const Eigen::VectorXd& coeffs() const { return coeffs_; }
    Eigen::VectorXd& coeffs() { return coeffs_; }
    double operator[](unsigned mask) const { return coeffs_[mask]; }
    double& operator[](unsigned mask) { return coeffs_[mask]; }

    double scalar_part() const { return coeffs_[0]; }

    std::string to_string() const;

private:
    AlgebraSignature sig_;
    Eigen::VectorXd coeffs_;
};

Multivector geometric_product(const Multivector& a, const Multivector& b);
Multivector reverse(const Multivector& a);
Multivector grade_project(const Multivector& a, int k);

Multivector operator+(const Multivector& a, const Multivector& b);
Multivector operator-(const Multivector& a, const Multivector& b);
Multivector operator*(double s, const Multivector& a);
Multivector operator*(const Multivector& a, double s);
Multivector operator/(const Multivector& a, double s);
Multivector operator*(const Multivector& a, const Multivector& b);  // geometric product

/// sqrt(|scalar part of a * ~a|).
double norm(const Multivector& a);

/// Max absolute coefficient difference.
double max_abs_diff(const Multivector& a, const Multivector& b);

bool is_even_grade(const Multivector& a, double tol = 1e-9);

/// Applies the versor sandwich m P ~m to a Euclidean point and extracts the
/// transformed point. Point embeddings:
///   PGA: P = e123 - x e023 + y e013 - z e012  (dual point; e123 is the origin)
///   CGA: P = n_o + p + 0.5|p|^2 n_inf with n_o = 0.5(e5-e4), n_inf = e4+e5
/// m must be even grade and unit (|m ~m - 1| <= tol), else throws.
Eigen::Vector3d sandwich_apply(const Multivector& m, const Eigen::Vector3d& point,
                               double tol = 1e-9);

/// CGA null basis helpers (throw unless the signature is the CGA preset).
Multivector cga_no(const AlgebraSignature& sig);
Multivector cga_ninf(const AlgebraSignature& sig);

}  // namespace unisg::ga
