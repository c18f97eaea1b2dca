#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>

#include "unisg/errors.hpp"
#include "unisg/ga.hpp"

namespace unisg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Unit quaternion q = q0 + q1 i + q2 j + q3 k. The canonical sign is
/// q0 >= 0, tie broken by the first nonzero of (q1,q2,q3) being positive.
struct Quaternion {
    double q0 = 1.0, q1 = 0.0, q2 = 0.0, q3 = 0.0;

    static Quaternion identity() { return {}; }

    Vec3 vec() const { return {q1, q2, q3}; }
    double norm() const { return std::sqrt(q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3); }
    Quaternion conjugate() const { return {q0, -q1, -q2, -q3}; }
    Quaternion canonicalized() const;

    /// Rotates a vector (assumes unit norm).
    Vec3 rotate(const Vec3& v) const;
};

Quaternion qmul(const Quaternion& a, const Quaternion& b);
bool approx_equal(const Quaternion& a, const Quaternion& b, double tol);

struct AngleAxis {
    double angle = 0.0;  // radians, canonical range [0, pi]
    Vec3 axis = Vec3::UnitZ();
};

struct DualQuaternion {
    Quaternion real;  // rotation, unit norm
    Quaternion dual;  // 0.5 * (0, t) * real
};

enum class Form { Matrix, AngleAxisT, QuatT, DualQuat, PgaMotor, CgaMotor };

constexpr int kFormCount = 6;
const char* form_name(Form f);
Form form_from_name(const std::string& name);  // throws on unknown tag
bool is_ga_form(Form f);

/// One rigid pose in any of the six representation forms, plus a uniform
/// scale side channel. MATRIX is the only form that may carry non-uniform
/// scale, folded into the 4x4 payload (its side channel stays (1,1,1));
/// every other form keeps a rigid payload and stores scale as (s,s,s).
struct TransformRepr {
    struct AngleAxisPose { AngleAxis rot; Vec3 t = Vec3::Zero(); };
    struct QuatPose { Quaternion q; Vec3 t = Vec3::Zero(); };

    Form form = Form::Matrix;
    std::variant<Mat4, AngleAxisPose, QuatPose, DualQuaternion, ga::Multivector> payload =
        Mat4(Mat4::Identity());
    Vec3 scale = Vec3::Ones();

    static TransformRepr identity(Form f = Form::Matrix);
    static TransformRepr matrix(const Mat4& m);
    static TransformRepr angle_axis_t(const AngleAxis& rot, const Vec3& t,
                                      const Vec3& scale = Vec3::Ones());
    static TransformRepr quat_t(const Quaternion& q, const Vec3& t,
                                const Vec3& scale = Vec3::Ones());
    static TransformRepr dual_quat(const DualQuaternion& dq, const Vec3& scale = Vec3::Ones());
    static TransformRepr motor(Form f, const ga::Multivector& m,
                               const Vec3& scale = Vec3::Ones());

    const Mat4& as_matrix() const { return std::get<Mat4>(payload); }
    const AngleAxisPose& as_angle_axis() const { return std::get<AngleAxisPose>(payload); }
    const QuatPose& as_quat() const { return std::get<QuatPose>(payload); }
    const DualQuaternion& as_dual_quat() const { return std::get<DualQuaternion>(payload); }
    const ga::Multivector& as_motor() const { return std::get<ga::Multivector>(payload); }

    /// Numeric invariants (unit norms, orthogonality, uniform scale off-matrix).
    /// Returns an empty string when valid, else a description of the violation.
    std::string check_valid() const;
};

struct MatrixTRS {
    Mat3 rotation;
    Vec3 t;
    Vec3 scale;
};

/// Splits an affine matrix into rotation / translation / positive scale.
/// Throws ConversionError on shear, reflection or a singular block.
MatrixTRS decompose_matrix(const Mat4& m);
Mat4 compose_matrix(const Mat3& rotation, const Vec3& t, const Vec3& scale);

Quaternion quat_from_rotation(const Mat3& r);
Mat3 rotation_from_quat(const Quaternion& q);

Quaternion quat_from_angleaxis(const AngleAxis& a);
AngleAxis angleaxis_from_quat(const Quaternion& q);

DualQuaternion dq_from_qt(const Quaternion& q, const Vec3& t);
void qt_from_dq(const DualQuaternion& dq, Quaternion& q, Vec3& t);

enum class Algebra { Pga, Cga };
ga::AlgebraSignature signature_of(Algebra a);

/// T = 1 - 0.5 e0 (t1 e1 + t2 e2 + t3 e3) in PGA,
/// T = 1 - 0.5 (t1 e1 + t2 e2 + t3 e3) n_inf in CGA.
ga::Multivector translator_from_t(const Vec3& t, Algebra algebra);

/// Reads the translation back. Divides by the scalar part first, so scaled
/// translators extract the same vector as unit ones.
Vec3 t_from_translator(const ga::Multivector& T);

/// R = q0 - q3 e12 + q2 e13 - q1 e23 (same blade mapping in PGA and CGA).
ga::Multivector rotor_from_quat(const Quaternion& q, Algebra algebra);
Quaternion quat_from_rotor(const ga::Multivector& R);

/// Motor = T * R: rotation applied first, translation second, matching the
/// matrix composition M = T_mat * R_mat.
ga::Multivector motor_compose(const ga::Multivector& T, const ga::Multivector& R);

struct MotorParts {
    ga::Multivector translator;
    ga::Multivector rotor;
};

/// Splits a motor into translator and rotor. The input may be scaled by any
/// nonzero factor; it is normalized first. The rotor sign is canonicalized
/// through the quaternion convention.
MotorParts motor_decompose(const ga::Multivector& M);

/// Canonical conversion hub: every form maps to (q, t, scale) and back.
struct RigidHub {
    Quaternion q;
    Vec3 t = Vec3::Zero();
    Vec3 scale = Vec3::Ones();
};

RigidHub to_hub(const TransformRepr& x);
TransformRepr from_hub(const RigidHub& hub, Form target);

/// Converts between forms through the hub. Converting to the source form
/// returns the input unchanged. Non-uniform scale is only representable
/// under MATRIX; any other target raises ConversionError.
TransformRepr convert(const TransformRepr& x, Form target);

/// Applies the transform to a point: scale, then the rigid action.
Vec3 apply(const TransformRepr& x, const Vec3& p);

bool is_uniform_scale(const Vec3& scale, double tol = 1e-9);

/// Native payload widths: matrix 16 (row-major), angle/axis+t 7, quat+t 7,
/// dual quaternion 8, PGA motor 16, CGA motor 32.
int payload_arity(Form f);

/// Flattens the payload (without the scale channel) in the documented order.
Eigen::VectorXd payload_coeffs(const TransformRepr& x);

/// Rebuilds a payload from flattened coefficients. Performs arity checks
/// only; numeric invariants are checked separately (check_valid).
TransformRepr payload_from_coeffs(Form f, const Eigen::VectorXd& coeffs,
                                  const Vec3& scale = Vec3::Ones());

}  // namespace unisg
