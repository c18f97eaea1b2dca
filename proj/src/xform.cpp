#include "unisg/xform.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace unisg {

namespace {

constexpr double kUnitTol = 1e-9;

// PGA bivector blade masks (bit 0 = e0, bits 1..3 = e1..e3).
constexpr unsigned kPgaE01 = 0b0011, kPgaE02 = 0b0101, kPgaE03 = 0b1001;
constexpr unsigned kPgaE12 = 0b0110, kPgaE13 = 0b1010, kPgaE23 = 0b1100;
// CGA blade masks (bits 0..4 = e1..e5).
constexpr unsigned kCgaE12 = 0b00011, kCgaE13 = 0b00101, kCgaE23 = 0b00110;

bool pga_blade_contains_e0(unsigned mask) { return mask & 1u; }
bool cga_blade_touches_null(unsigned mask) { return mask & 0b11000u; }

}  // namespace

Quaternion Quaternion::canonicalized() const {
    Quaternion c = *this;
    bool flip = c.q0 < 0.0;
    if (c.q0 == 0.0) {
        if (c.q1 != 0.0) flip = c.q1 < 0.0;
        else if (c.q2 != 0.0) flip = c.q2 < 0.0;
        else flip = c.q3 < 0.0;
    }
    if (flip) { c.q0 = -c.q0; c.q1 = -c.q1; c.q2 = -c.q2; c.q3 = -c.q3; }
    return c;
}

Vec3 Quaternion::rotate(const Vec3& v) const {
    const Vec3 u = vec();
    return v + 2.0 * u.cross(u.cross(v) + q0 * v);
}

Quaternion qmul(const Quaternion& a, const Quaternion& b) {
    return {a.q0 * b.q0 - a.q1 * b.q1 - a.q2 * b.q2 - a.q3 * b.q3,
            a.q0 * b.q1 + a.q1 * b.q0 + a.q2 * b.q3 - a.q3 * b.q2,
            a.q0 * b.q2 - a.q1 * b.q3 + a.q2 * b.q0 + a.q3 * b.q1,
            a.q0 * b.q3 + a.q1 * b.q2 - a.q2 * b.q1 + a.q3 * b.q0};
}

bool approx_equal(const Quaternion& a, const Quaternion& b, double tol) {
    return std::abs(a.q0 - b.q0) <= tol && std::abs(a.q1 - b.q1) <= tol &&
           std::abs(a.q2 - b.q2) <= tol && std::abs(a.q3 - b.q3) <= tol;
}

const char* form_name(Form f) {
    switch (f) {
        case Form::Matrix: return "matrix";
        case Form::AngleAxisT: return "angle_axis_t";
        case Form::QuatT: return "quat_t";
        case Form::DualQuat: return "dual_quat";
        case Form::PgaMotor: return "pga_motor";
        case Form::CgaMotor: return "cga_motor";
    }
    return "?";
}

Form form_from_name(const std::string& name) {
    for (int i = 0; i < kFormCount; ++i) {
        const Form f = static_cast<Form>(i);
        if (name == form_name(f)) return f;
    }
    throw Error("unknown representation form tag: \"" + name + "\"");
}

bool is_ga_form(Form f) { return f == Form::PgaMotor || f == Form::CgaMotor; }

bool is_uniform_scale(const Vec3& scale, double tol) {
    const double lo = scale.minCoeff(), hi = scale.maxCoeff();
    return hi - lo <= tol * std::max(1.0, std::abs(hi));
}

TransformRepr TransformRepr::identity(Form f) {
    return from_hub(RigidHub{}, f);
}

TransformRepr TransformRepr::matrix(const Mat4& m) {
    return {Form::Matrix, m, Vec3::Ones()};
}

TransformRepr TransformRepr::angle_axis_t(const AngleAxis& rot, const Vec3& t, const Vec3& s) {
    return {Form::AngleAxisT, AngleAxisPose{rot, t}, s};
}

TransformRepr TransformRepr::quat_t(const Quaternion& q, const Vec3& t, const Vec3& s) {
    return {Form::QuatT, QuatPose{q, t}, s};
}

TransformRepr TransformRepr::dual_quat(const DualQuaternion& dq, const Vec3& s) {
    return {Form::DualQuat, dq, s};
}

TransformRepr TransformRepr::motor(Form f, const ga::Multivector& m, const Vec3& s) {
    if (!is_ga_form(f)) throw Error("TransformRepr::motor: GA form required");
    return {f, m, s};
}

std::string TransformRepr::check_valid() const {
    if (form != Form::Matrix) {
        if (!is_uniform_scale(scale))
            return "non-uniform scale is only representable under the matrix form";
        if (scale.minCoeff() <= 1e-12) return "scale must be positive";
    }
    switch (form) {
        case Form::Matrix: {
            const Mat4& m = as_matrix();
            if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12)
                return "matrix last row must be (0,0,0,1)";
            try {
                decompose_matrix(m);
            } catch (const Error& e) {
                return e.what();
            }
            break;
        }
        case Form::AngleAxisT: {
            const auto& p = as_angle_axis();
            if (std::abs(p.rot.axis.norm() - 1.0) > kUnitTol) return "axis is not unit length";
            if (p.rot.angle < -kUnitTol || p.rot.angle > std::numbers::pi + 1e-9)
                return "angle outside canonical range [0, pi]";
            break;
        }
        case Form::QuatT:
            if (std::abs(as_quat().q.norm() - 1.0) > kUnitTol)
                return "quaternion is not unit norm";
            break;
        case Form::DualQuat: {
            const auto& dq = as_dual_quat();
            if (std::abs(dq.real.norm() - 1.0) > kUnitTol)
                return "dual quaternion real part is not unit norm";
            const double dot = dq.real.q0 * dq.dual.q0 + dq.real.q1 * dq.dual.q1 +
                               dq.real.q2 * dq.dual.q2 + dq.real.q3 * dq.dual.q3;
            if (std::abs(dot) > kUnitTol) return "dual quaternion parts are not orthogonal";
            break;
        }
        case Form::PgaMotor:
        case Form::CgaMotor: {
            const auto& m = as_motor();
            const bool want_pga = form == Form::PgaMotor;
            if (want_pga ? !m.sig().is_pga() : !m.sig().is_cga())
                return "motor signature does not match form tag";
            try {
                motor_decompose(m);
            } catch (const Error& e) {
                return e.what();
            }
            break;
        }
    }
    return {};
}

MatrixTRS decompose_matrix(const Mat4& m) {
    if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12)
        throw ConversionError("decompose_matrix: last row must be (0,0,0,1)");
    const Mat3 block = m.topLeftCorner<3, 3>();
    MatrixTRS out;
    out.t = m.topRightCorner<3, 1>();
    Mat3 rot;
    for (int c = 0; c < 3; ++c) {
        const double len = block.col(c).norm();
        if (len < 1e-12) throw ConversionError("decompose_matrix: singular linear block");
        out.scale[c] = len;
        rot.col(c) = block.col(c) / len;
    }
    if ((rot.transpose() * rot - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6)
        throw ConversionError("decompose_matrix: non-TRS matrix (shear)");
    if (rot.determinant() < 0.0)
        throw ConversionError("decompose_matrix: non-TRS matrix (reflection)");
    out.rotation = rot;
    return out;
}

Mat4 compose_matrix(const Mat3& rotation, const Vec3& t, const Vec3& scale) {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation * scale.asDiagonal();
    m.topRightCorner<3, 1>() = t;
    return m;
}

Quaternion quat_from_rotation(const Mat3& r) {
    if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
        r.determinant() < 0.0)
        throw ConversionError("quat_from_rotation: invalid rotation matrix");
    // Shepperd extraction: take the numerically largest of the four candidates
    // so 180-degree rotations stay stable.
    const std::array<double, 4> b = {
        1.0 + r(0, 0) - r(1, 1) - r(2, 2),  // 4 q1^2
        1.0 - r(0, 0) + r(1, 1) - r(2, 2),  // 4 q2^2
        1.0 - r(0, 0) - r(1, 1) + r(2, 2),  // 4 q3^2
        1.0 + r(0, 0) + r(1, 1) + r(2, 2),  // 4 q0^2
    };
    int best = 0;
    for (int i = 1; i < 4; ++i)
        if (b[i] > b[best]) best = i;
    Quaternion q;
    const double s = 0.5 * std::sqrt(std::max(0.0, b[best]));
    const double f = 0.25 / s;
    switch (best) {
        case 3:
            q.q0 = s;
            q.q1 = (r(2, 1) - r(1, 2)) * f;
            q.q2 = (r(0, 2) - r(2, 0)) * f;
            q.q3 = (r(1, 0) - r(0, 1)) * f;
            break;
        case 0:
            q.q1 = s;
            q.q0 = (r(2, 1) - r(1, 2)) * f;
            q.q2 = (r(0, 1) + r(1, 0)) * f;
            q.q3 = (r(0, 2) + r(2, 0)) * f;
            break;
        case 1:
            q.q2 = s;
            q.q0 = (r(0, 2) - r(2, 0)) * f;
            q.q1 = (r(0, 1) + r(1, 0)) * f;
            q.q3 = (r(1, 2) + r(2, 1)) * f;
            break;
        default:
            q.q3 = s;
            q.q0 = (r(1, 0) - r(0, 1)) * f;
            q.q1 = (r(0, 2) + r(2, 0)) * f;
            q.q2 = (r(1, 2) + r(2, 1)) * f;
            break;
    }
    const double n = q.norm();
    q = {q.q0 / n, q.q1 / n, q.q2 / n, q.q3 / n};
    return q.canonicalized();
}

Mat3 rotation_from_quat(const Quaternion& q) {
    const double w = q.q0, x = q.q1, y = q.q2, z = q.q3;
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

Quaternion quat_from_angleaxis(const AngleAxis& a) {
    const double axis_norm = a.axis.norm();
    if (a.angle == 0.0) return Quaternion::identity();
    if (axis_norm < 1e-12)
        throw ConversionError("quat_from_angleaxis: zero axis with nonzero angle");
    if (std::abs(axis_norm - 1.0) > kUnitTol)
        throw ConversionError("quat_from_angleaxis: axis is not unit length");
    const double half = 0.5 * a.angle;
    const double s = std::sin(half);
    return {std::cos(half), s * a.axis.x(), s * a.axis.y(), s * a.axis.z()};
}

AngleAxis angleaxis_from_quat(const Quaternion& q_in) {
    const Quaternion q = q_in.canonicalized();
    const Vec3 u = q.vec();
    const double s = u.norm();
    AngleAxis out;
    out.angle = 2.0 * std::atan2(s, q.q0);  // q0 >= 0 puts the angle in [0, pi]
    out.axis = s > 1e-12 ? Vec3(u / s) : Vec3::UnitZ();
    return out;
}

DualQuaternion dq_from_qt(const Quaternion& q, const Vec3& t) {
    if (std::abs(q.norm() - 1.0) > kUnitTol)
        throw ConversionError("dq_from_qt: quaternion is not unit norm");
    const Quaternion tq{0.0, t.x(), t.y(), t.z()};
    const Quaternion d = qmul(tq, q);
    return {q, {0.5 * d.q0, 0.5 * d.q1, 0.5 * d.q2, 0.5 * d.q3}};
}

void qt_from_dq(const DualQuaternion& dq, Quaternion& q, Vec3& t) {
    if (std::abs(dq.real.norm() - 1.0) > kUnitTol)
        throw ConversionError("qt_from_dq: non-unit real part");
    q = dq.real;
    const Quaternion d = qmul(dq.dual, dq.real.conjugate());
    t = 2.0 * Vec3(d.q1, d.q2, d.q3);
}

ga::AlgebraSignature signature_of(Algebra a) {
    return a == Algebra::Pga ? ga::AlgebraSignature::pga() : ga::AlgebraSignature::cga();
}

ga::Multivector translator_from_t(const Vec3& t, Algebra algebra) {
    const ga::AlgebraSignature sig = signature_of(algebra);
    ga::Multivector T = ga::Multivector::scalar(sig, 1.0);
    if (algebra == Algebra::Pga) {
        T[kPgaE01] = -0.5 * t.x();
        T[kPgaE02] = -0.5 * t.y();
        T[kPgaE03] = -0.5 * t.z();
    } else {
        ga::Multivector tv(sig);
        tv[1] = t.x();
        tv[2] = t.y();
        tv[4] = t.z();
        T = T - 0.5 * (tv * ga::cga_ninf(sig));
    }
    return T;
}

Vec3 t_from_translator(const ga::Multivector& T) {
    const double s = T.scalar_part();
    if (std::abs(s) < 1e-12)
        throw ConversionError("t_from_translator: zero scalar part");
    const ga::Multivector U = T / s;
    Vec3 t;
    double residual = 0.0;
    if (T.sig().is_pga()) {
        t = {-2.0 * U[kPgaE01], -2.0 * U[kPgaE02], -2.0 * U[kPgaE03]};
        for (int mask = 1; mask < T.sig().blade_count(); ++mask)
            if (mask != kPgaE01 && mask != kPgaE02 && mask != kPgaE03)
                residual = std::max(residual, std::abs(U[mask]));
    } else if (T.sig().is_cga()) {
        // T = 1 - 0.5 t n_inf puts -t_i/2 on both e_i e4 and e_i e5.
        const unsigned e4 = 1u << 3, e5 = 1u << 4;
        const std::array<unsigned, 3> ei = {1u, 2u, 4u};
        for (int i = 0; i < 3; ++i) {
            t[i] = -(U[ei[i] | e4] + U[ei[i] | e5]);
            residual = std::max(residual, std::abs(U[ei[i] | e4] - U[ei[i] | e5]));
        }
        for (int mask = 1; mask < T.sig().blade_count(); ++mask) {
            const bool translator_blade =
                (mask == int(ei[0] | e4)) || (mask == int(ei[0] | e5)) ||
                (mask == int(ei[1] | e4)) || (mask == int(ei[1] | e5)) ||
                (mask == int(ei[2] | e4)) || (mask == int(ei[2] | e5));
            if (!translator_blade) residual = std::max(residual, std::abs(U[mask]));
        }
    } else {
        throw ConversionError("t_from_translator: PGA or CGA translator required");
    }
    if (residual > kUnitTol)
        throw ConversionError("t_from_translator: input does not have translator shape");
    return t;
}

ga::Multivector rotor_from_quat(const Quaternion& q, Algebra algebra) {
    if (std::abs(q.norm() - 1.0) > kUnitTol)
        throw ConversionError("rotor_from_quat: quaternion is not unit norm");
    const ga::AlgebraSignature sig = signature_of(algebra);
    ga::Multivector R = ga::Multivector::scalar(sig, q.q0);
    if (algebra == Algebra::Pga) {
        R[kPgaE12] = -q.q3;
        R[kPgaE13] = q.q2;
        R[kPgaE23] = -q.q1;
    } else {
        R[kCgaE12] = -q.q3;
        R[kCgaE13] = q.q2;
        R[kCgaE23] = -q.q1;
    }
    return R;
}

Quaternion quat_from_rotor(const ga::Multivector& R) {
    unsigned e12, e13, e23;
    if (R.sig().is_pga()) {
        e12 = kPgaE12; e13 = kPgaE13; e23 = kPgaE23;
    } else if (R.sig().is_cga()) {
        e12 = kCgaE12; e13 = kCgaE13; e23 = kCgaE23;
    } else {
        throw ConversionError("quat_from_rotor: PGA or CGA rotor required");
    }
    double residual = 0.0;
    for (int mask = 1; mask < R.sig().blade_count(); ++mask)
        if (mask != int(e12) && mask != int(e13) && mask != int(e23))
            residual = std::max(residual, std::abs(R[mask]));
    if (residual > kUnitTol)
        throw ConversionError("quat_from_rotor: input has non-rotor blades");
    const Quaternion q{R[0], -R[e23], R[e13], -R[e12]};
    const double n = q.norm();
    if (std::abs(n - 1.0) > 1e-6)
        throw ConversionError("quat_from_rotor: rotor is not unit norm");
    return Quaternion{q.q0 / n, q.q1 / n, q.q2 / n, q.q3 / n}.canonicalized();
}

ga::Multivector motor_compose(const ga::Multivector& T, const ga::Multivector& R) {
    if (T.sig() != R.sig()) throw ConversionError("motor_compose: mixed algebras");
    t_from_translator(T);   // shape checks
    quat_from_rotor(R);
    return T * R;
}

MotorParts motor_decompose(const ga::Multivector& M) {
    if (!M.sig().is_pga() && !M.sig().is_cga())
        throw ConversionError("motor_decompose: PGA or CGA motor required");
    if (!is_even_grade(M, 1e-9 * std::max(1.0, M.coeffs().cwiseAbs().maxCoeff())))
        throw ConversionError("motor_decompose: motor must be even grade");
    const double norm_sq = geometric_product(M, reverse(M)).scalar_part();
    if (norm_sq < 1e-18) throw ConversionError("motor_decompose: motor has zero norm");
    const ga::Multivector Mn = M / std::sqrt(norm_sq);

    // The rotor is the part free of the degenerate/null directions: e0 in PGA,
    // e4/e5 in CGA. T * R only adds blades touching those directions.
    ga::Multivector R(Mn.sig());
    for (int mask = 0; mask < Mn.sig().blade_count(); ++mask) {
        const bool carrier = Mn.sig().is_pga() ? pga_blade_contains_e0(mask)
                                               : cga_blade_touches_null(mask);
        if (!carrier) R[mask] = Mn[mask];
    }
    const double rnorm = ga::norm(R);
    if (rnorm < 1e-9) throw ConversionError("motor_decompose: degenerate rotor part");
    R = R / rnorm;
    const Quaternion q = quat_from_rotor(R);           // canonical sign
    R = rotor_from_quat(q, Mn.sig().is_pga() ? Algebra::Pga : Algebra::Cga);

    ga::Multivector T = geometric_product(Mn, reverse(R));
    const double ts = T.scalar_part();
    if (std::abs(ts) < 1e-9) throw ConversionError("motor_decompose: degenerate translator part");
    T = T / ts;

    const Vec3 t = t_from_translator(T);  // validates translator shape
    (void)t;
    ga::Multivector recomposed = T * R;
    const ga::Multivector target = Mn / (ts < 0 ? -1.0 : 1.0);
    if (ga::max_abs_diff(recomposed, target) > 1e-9)
        throw ConversionError("motor_decompose: input is not a motor");
    return {T, R};
}

RigidHub to_hub(const TransformRepr& x) {
    RigidHub hub;
    hub.scale = x.scale;
    switch (x.form) {
        case Form::Matrix: {
            const MatrixTRS trs = decompose_matrix(x.as_matrix());
            hub.q = quat_from_rotation(trs.rotation);
            hub.t = trs.t;
            hub.scale = trs.scale;
            break;
        }
        case Form::AngleAxisT: {
            const auto& p = x.as_angle_axis();
            hub.q = quat_from_angleaxis(p.rot);
            hub.t = p.t;
            break;
        }
        case Form::QuatT: {
            const auto& p = x.as_quat();
            if (std::abs(p.q.norm() - 1.0) > kUnitTol)
                throw ConversionError("convert: quaternion is not unit norm");
            hub.q = p.q.canonicalized();
            hub.t = p.t;
            break;
        }
        case Form::DualQuat: {
            Quaternion q;
            Vec3 t;
            qt_from_dq(x.as_dual_quat(), q, t);
            hub.q = q.canonicalized();
            hub.t = t;
            break;
        }
        case Form::PgaMotor:
        case Form::CgaMotor: {
            const MotorParts parts = motor_decompose(x.as_motor());
            hub.q = quat_from_rotor(parts.rotor);
            hub.t = t_from_translator(parts.translator);
            break;
        }
    }
    return hub;
}

TransformRepr from_hub(const RigidHub& hub, Form target) {
    if (target == Form::Matrix) {
        return TransformRepr::matrix(
            compose_matrix(rotation_from_quat(hub.q), hub.t, hub.scale));
    }
    if (!is_uniform_scale(hub.scale))
        throw ConversionError("convert: non-rigid transform not representable in form " +
                              std::string(form_name(target)));
    switch (target) {
        case Form::AngleAxisT:
            return TransformRepr::angle_axis_t(angleaxis_from_quat(hub.q), hub.t, hub.scale);
        case Form::QuatT:
            return TransformRepr::quat_t(hub.q.canonicalized(), hub.t, hub.scale);
        case Form::DualQuat:
            return TransformRepr::dual_quat(dq_from_qt(hub.q.canonicalized(), hub.t), hub.scale);
        case Form::PgaMotor:
        case Form::CgaMotor: {
            const Algebra alg = target == Form::PgaMotor ? Algebra::Pga : Algebra::Cga;
            const ga::Multivector motor = motor_compose(translator_from_t(hub.t, alg),
                                                        rotor_from_quat(hub.q.canonicalized(), alg));
            return TransformRepr::motor(target, motor, hub.scale);
        }
        default:
            throw ConversionError("convert: unsupported target form");
    }
}

TransformRepr convert(const TransformRepr& x, Form target) {
    if (x.form == target) return x;
    return from_hub(to_hub(x), target);
}

int payload_arity(Form f) {
    switch (f) {
        case Form::Matrix: return 16;
        case Form::AngleAxisT: return 7;
        case Form::QuatT: return 7;
        case Form::DualQuat: return 8;
        case Form::PgaMotor: return 16;
        case Form::CgaMotor: return 32;
    }
    return 0;
}

Eigen::VectorXd payload_coeffs(const TransformRepr& x) {
    Eigen::VectorXd v(payload_arity(x.form));
    switch (x.form) {
        case Form::Matrix: {
            const Mat4& m = x.as_matrix();
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) v[r * 4 + c] = m(r, c);
            break;
        }
        case Form::AngleAxisT: {
            const auto& p = x.as_angle_axis();
            v << p.rot.angle, p.rot.axis.x(), p.rot.axis.y(), p.rot.axis.z(), p.t.x(), p.t.y(),
                p.t.z();
            break;
        }
        case Form::QuatT: {
            const auto& p = x.as_quat();
            v << p.q.q0, p.q.q1, p.q.q2, p.q.q3, p.t.x(), p.t.y(), p.t.z();
            break;
        }
        case Form::DualQuat: {
            const auto& dq = x.as_dual_quat();
            v << dq.real.q0, dq.real.q1, dq.real.q2, dq.real.q3, dq.dual.q0, dq.dual.q1,
                dq.dual.q2, dq.dual.q3;
            break;
        }
        case Form::PgaMotor:
        case Form::CgaMotor:
            v = x.as_motor().coeffs();
            break;
    }
    return v;
}

TransformRepr payload_from_coeffs(Form f, const Eigen::VectorXd& coeffs, const Vec3& scale) {
    if (coeffs.size() != payload_arity(f))
        throw Error(std::string("payload for form \"") + form_name(f) + "\" expects " +
                    std::to_string(payload_arity(f)) + " coefficients, got " +
                    std::to_string(coeffs.size()));
    switch (f) {
        case Form::Matrix: {
            Mat4 m;
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) m(r, c) = coeffs[r * 4 + c];
            return TransformRepr::matrix(m);
        }
        case Form::AngleAxisT:
            return TransformRepr::angle_axis_t({coeffs[0], Vec3(coeffs[1], coeffs[2], coeffs[3])},
                                               Vec3(coeffs[4], coeffs[5], coeffs[6]), scale);
        case Form::QuatT:
            return TransformRepr::quat_t({coeffs[0], coeffs[1], coeffs[2], coeffs[3]},
                                         Vec3(coeffs[4], coeffs[5], coeffs[6]), scale);
        case Form::DualQuat:
            return TransformRepr::dual_quat({{coeffs[0], coeffs[1], coeffs[2], coeffs[3]},
                                             {coeffs[4], coeffs[5], coeffs[6], coeffs[7]}},
                                            scale);
        case Form::PgaMotor:
        case Form::CgaMotor: {
            const auto sig = f == Form::PgaMotor ? ga::AlgebraSignature::pga()
                                                 : ga::AlgebraSignature::cga();
            return TransformRepr::motor(f, ga::Multivector(sig, coeffs), scale);
        }
    }
    throw Error("payload_from_coeffs: unsupported form");
}

Vec3 apply(const TransformRepr& x, const Vec3& p) {
    if (x.form == Form::Matrix) {
        const Mat4& m = x.as_matrix();
        return m.topLeftCorner<3, 3>() * p + m.topRightCorner<3, 1>();
    }
    const Vec3 scaled = x.scale.cwiseProduct(p);
    switch (x.form) {
        case Form::AngleAxisT: {
            const auto& pose = x.as_angle_axis();
            return quat_from_angleaxis(pose.rot).rotate(scaled) + pose.t;
        }
        case Form::QuatT: {
            const auto& pose = x.as_quat();
            return pose.q.rotate(scaled) + pose.t;
        }
        case Form::DualQuat: {
            Quaternion q;
            Vec3 t;
            qt_from_dq(x.as_dual_quat(), q, t);
            return q.rotate(scaled) + t;
        }
        case Form::PgaMotor:
        case Form::CgaMotor:
            return ga::sandwich_apply(x.as_motor(), scaled);
        default:
            throw Error("apply: unsupported form");
    }
}

}  // namespace unisg
