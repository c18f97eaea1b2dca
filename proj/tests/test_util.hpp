#pragma once

#include <Eigen/Dense>

#include "unisg/rng.hpp"
#include "unisg/xform.hpp"

namespace unisg::test {

inline double max_abs(const Eigen::MatrixXd& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline Quaternion random_unit_quat(Rng& rng) {
    Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const double n = q.norm();
    return Quaternion{q.q0 / n, q.q1 / n, q.q2 / n, q.q3 / n}.canonicalized();
}

inline Vec3 random_vec3(Rng& rng, double radius = 5.0) {
    return {rng.uniform(-radius, radius), rng.uniform(-radius, radius),
            rng.uniform(-radius, radius)};
}

/// Random rigid transform in hub space.
inline RigidHub random_rigid(Rng& rng) {
    RigidHub hub;
    hub.q = random_unit_quat(rng);
    hub.t = random_vec3(rng);
    return hub;
}

}  // namespace unisg::test

#include "unisg/scene.hpp"

namespace unisg::test {

inline std::string random_name(Rng& rng) {
    static const char* const pool = "abcdefghijklmnopqrstuvwxyz_09";
    std::string s;
    const int len = rng.uniform_int(1, 10);
    for (int i = 0; i < len; ++i) s += pool[rng.uniform_int(0, 28)];
    // occasionally exercise string escaping
    if (rng.uniform() < 0.1) s += '"';
    if (rng.uniform() < 0.05) s += '\\';
    if (rng.uniform() < 0.05) s += '\n';
    return s;
}

/// Random but structurally valid scene: random tree, random component mix,
/// valid rigid TRS payloads in random forms.
inline Scene random_scene(Rng& rng) {
    Scene s;
    s.name = random_name(rng);
    if (rng.uniform() < 0.5) s.label = rng.uniform_int(0, 3);
    const int n = rng.uniform_int(1, 14);
    std::vector<int> ids;
    ids.push_back(s.add_root(random_name(rng), random_name(rng)));
    for (int i = 1; i < n; ++i) {
        const int parent = ids[rng.uniform_int(0, static_cast<int>(ids.size()) - 1)];
        ids.push_back(s.add_entity(parent, random_name(rng), random_name(rng)));
    }
    for (int id : ids) {
        if (rng.uniform() < 0.8) s.add_component(id, InfoComponent{});
        if (rng.uniform() < 0.8) {
            RigidHub hub = random_rigid(rng);
            const Form form = static_cast<Form>(rng.uniform_int(0, kFormCount - 1));
            if (form == Form::Matrix && rng.uniform() < 0.3)
                hub.scale = Vec3(rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.5, 2));
            else if (rng.uniform() < 0.3)
                hub.scale = Vec3::Ones() * rng.uniform(0.5, 2.0);
            s.add_component(id, TRSComponent{from_hub(hub, form)});
        }
        if (rng.uniform() < 0.3) {
            MeshFeatureComponent mesh;
            mesh.feature = rng.normal_matrix(kMeshFeatureDim, 1).col(0);
            s.add_component(id, std::move(mesh));
        }
        if (rng.uniform() < 0.2) {
            ActionDataComponent act;
            act.action_type = "insert";
            Eigen::VectorXd p(6);
            const Vec3 lo = random_vec3(rng, 2.0);
            p << lo.x(), lo.y(), lo.z(), lo.x() + rng.uniform(0, 2), lo.y() + rng.uniform(0, 2),
                lo.z() + rng.uniform(0, 2);
            act.params = p;
            act.refs = {ids[rng.uniform_int(0, static_cast<int>(ids.size()) - 1)]};
            s.add_component(id, std::move(act));
        }
    }
    return s;
}

}  // namespace unisg::test
