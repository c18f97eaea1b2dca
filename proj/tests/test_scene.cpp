#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <set>

#include "test_util.hpp"
#include "unisg/scene.hpp"

using namespace unisg;

namespace {

Scene two_level_scene() {
    Scene s;
    const int root = s.add_root("root", "Root");
    const int child = s.add_entity(root, "child", "Child");
    const int grand = s.add_entity(child, "grand", "Grand");
    RigidHub h1;
    h1.t = Vec3(1, 0, 0);
    RigidHub h2;
    h2.t = Vec3(0, 1, 0);
    s.add_component(child, TRSComponent{from_hub(h1, Form::Matrix)});
    s.add_component(grand, TRSComponent{from_hub(h2, Form::Matrix)});
    return s;
}

std::vector<Vec3> box_cloud(const Vec3& dims, int per_axis = 6) {
    std::vector<Vec3> pts;
    for (int i = 0; i < per_axis; ++i)
        for (int j = 0; j < per_axis; ++j) {
            const double u = -0.5 + double(i) / (per_axis - 1);
            const double v = -0.5 + double(j) / (per_axis - 1);
            pts.emplace_back(dims.x() * u, dims.y() * v, dims.z() * 0.5);
            pts.emplace_back(dims.x() * u, dims.y() * v, -dims.z() * 0.5);
            pts.emplace_back(dims.x() * u, dims.y() * 0.5, dims.z() * v);
            pts.emplace_back(dims.x() * u, -dims.y() * 0.5, dims.z() * v);
            pts.emplace_back(dims.x() * 0.5, dims.y() * u, dims.z() * v);
            pts.emplace_back(-dims.x() * 0.5, dims.y() * u, dims.z() * v);
        }
    return pts;
}

std::vector<Vec3> sphere_cloud(double radius, int n = 256) {
    std::vector<Vec3> pts;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        pts.emplace_back(radius * r * std::cos(phi), radius * r * std::sin(phi), radius * z);
    }
    return pts;
}

}  // namespace

TEST_CASE("tree building and mutation rules") {
    Scene s;
    const int root = s.add_root("root", "Root");
    const int child = s.add_entity(root, "child", "Child");
    CHECK(s.entity(child).parent == root);
    CHECK(s.entity(root).children == std::vector<int>{child});

    const int grand = s.add_entity(child, "grand", "Grand");
    CHECK_THROWS_AS(s.reparent(child, grand), Error);   // own descendant
    CHECK_THROWS_AS(s.reparent(root, child), Error);    // root fixed
    CHECK_THROWS_AS(s.add_entity(999, "x", "X"), Error);
    CHECK_THROWS_AS(s.add_root("second", "X"), Error);

    s.add_component(child, TRSComponent{TransformRepr::matrix(Mat4::Identity())});
    CHECK_THROWS_AS(s.add_component(child, TRSComponent{TransformRepr::matrix(Mat4::Identity())}),
                    Error);

    const int sibling = s.add_entity(root, "sibling", "Child");
    s.reparent(grand, sibling);
    CHECK(s.entity(grand).parent == sibling);
    CHECK(s.entity(child).children.empty());

    s.remove_entity(sibling);
    CHECK(!s.has_entity(sibling));
    CHECK(!s.has_entity(grand));
    CHECK_THROWS_AS(s.remove_entity(root), Error);
}

TEST_CASE("info census stays in sync under random mutations") {
    Rng rng(99);
    Scene s;
    const int root = s.add_root("root", "Root");
    s.add_component(root, InfoComponent{});
    std::vector<int> ids{root};

    for (int step = 0; step < 300; ++step) {
        const int pick = rng.uniform_int(0, 3);
        if (pick == 0 || ids.size() < 3) {
            const int parent = ids[rng.uniform_int(0, int(ids.size()) - 1)];
            const int id = s.add_entity(parent, "e" + std::to_string(step), "Cat");
            s.add_component(id, InfoComponent{});
            if (rng.uniform() < 0.5)
                s.add_component(id, TRSComponent{TransformRepr::matrix(Mat4::Identity())});
            ids.push_back(id);
        } else if (pick == 1) {
            const int id = ids[rng.uniform_int(0, int(ids.size()) - 1)];
            const int target = ids[rng.uniform_int(0, int(ids.size()) - 1)];
            try {
                s.reparent(id, target);
            } catch (const Error&) { /* cycle or root, fine */
            }
        } else if (pick == 2) {
            const int id = ids[rng.uniform_int(0, int(ids.size()) - 1)];
            if (id != root && rng.uniform() < 0.3) {
                s.remove_entity(id);
                std::erase_if(ids, [&](int e) { return !s.has_entity(e); });
            }
        } else {
            const int id = ids[rng.uniform_int(0, int(ids.size()) - 1)];
            if (!s.trs(id))
                s.add_component(id, TRSComponent{TransformRepr::matrix(Mat4::Identity())});
        }
        if (step % 29 != 0) continue;
        for (int id : ids) {
            const InfoComponent* cached = s.info(id);
            REQUIRE(cached != nullptr);
            CHECK(*cached == s.census(id));
        }
    }
    // tree invariant: parents and children agree, single root, no cycles
    int roots = 0;
    for (int id : ids) {
        const Entity& e = s.entity(id);
        if (!e.parent) {
            ++roots;
        } else {
            const auto& siblings = s.entity(*e.parent).children;
            CHECK(std::count(siblings.begin(), siblings.end(), id) == 1);
        }
        for (int c : e.children) CHECK(s.entity(c).parent == id);
    }
    CHECK(roots == 1);
    CHECK(int(s.dfs_order().size()) == s.entity_count());
}

TEST_CASE("world transforms chain through the hierarchy") {
    Scene s = two_level_scene();
    const auto order = s.dfs_order();
    const int grand = order[2];
    CHECK((world_position(s, grand) - Vec3(1, 1, 0)).norm() < 1e-12);
    CHECK(test::max_abs(world_transform(s, order[0]) - Mat4::Identity()) == 0.0);

    // mixed forms along the path agree with the all-matrix chain
    Scene mixed = two_level_scene();
    const auto ids = mixed.dfs_order();
    mixed.trs_mut(ids[1])->repr = convert(mixed.trs_mut(ids[1])->repr, Form::PgaMotor);
    CHECK(test::max_abs(world_transform(mixed, ids[2]) - world_transform(s, grand)) < 1e-9);
}

TEST_CASE("world transform is representation invariant") {
    Rng rng(7);
    Scene s;
    const int root = s.add_root("root", "Root");
    std::vector<int> ids{root};
    for (int i = 0; i < 12; ++i) {
        const int parent = ids[rng.uniform_int(0, int(ids.size()) - 1)];
        const int id = s.add_entity(parent, "e" + std::to_string(i), "Cat");
        RigidHub hub = test::random_rigid(rng);
        hub.scale = Vec3::Ones() * rng.uniform(0.5, 1.5);
        s.add_component(id, TRSComponent{from_hub(hub, Form::Matrix)});
        ids.push_back(id);
    }
    for (Form f : {Form::AngleAxisT, Form::QuatT, Form::DualQuat, Form::PgaMotor, Form::CgaMotor}) {
        Scene converted = s;
        for (int id : ids)
            if (auto* c = converted.trs_mut(id)) c->repr = convert(c->repr, f);
        for (int id : ids)
            CHECK(test::max_abs(world_transform(converted, id) - world_transform(s, id)) < 1e-9);
    }
}

TEST_CASE("insert action check and system traversal") {
    CHECK(insert_action_check(Vec3(0, 0, 0), Vec3(-1, -1, -1), Vec3(1, 1, 1)));
    CHECK(!insert_action_check(Vec3(2, 0, 0), Vec3(-1, -1, -1), Vec3(1, 1, 1)));
    CHECK(insert_action_check(Vec3(1, 0, 0), Vec3(-1, -1, -1), Vec3(1, 1, 1)));  // closed face
    CHECK_THROWS_AS(insert_action_check(Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(-1, -1, -1)), Error);

    Scene s;
    const int root = s.add_root("root", "Root");
    CHECK(run_action_system(s, "insert").empty());

    const int tool = s.add_entity(root, "tool", "Scalpel");
    RigidHub hub;
    hub.t = Vec3(0.5, 0, 0);
    s.add_component(tool, TRSComponent{from_hub(hub, Form::QuatT)});

    ActionDataComponent inside;
    inside.action_type = "insert";
    inside.params = (Eigen::VectorXd(6) << -1, -1, -1, 1, 1, 1).finished();
    inside.refs = {tool};
    s.add_component(root, inside);

    const int other = s.add_entity(root, "other", "Probe");
    ActionDataComponent outside = inside;
    outside.params = (Eigen::VectorXd(6) << 2, 2, 2, 3, 3, 3).finished();
    s.add_component(other, outside);

    auto results = run_action_system(s, "insert");
    REQUIRE(results.size() == 2);
    CHECK(results[0].entity_id == root);
    CHECK(results[0].satisfied);
    CHECK(results[1].entity_id == other);
    CHECK(!results[1].satisfied);
    CHECK(s.action(root)->satisfied);

    // idempotent on an unchanged scene
    auto again = run_action_system(s, "insert");
    CHECK(again.size() == results.size());
    for (std::size_t i = 0; i < again.size(); ++i)
        CHECK(again[i].satisfied == results[i].satisfied);

    // dangling ref yields an error entry but traversal continues
    s.action_mut(other)->refs = {4242};
    auto with_bad = run_action_system(s, "insert");
    REQUIRE(with_bad.size() == 2);
    CHECK(with_bad[0].ok);
    CHECK(!with_bad[1].ok);
    CHECK(!with_bad[1].message.empty());

    CHECK_THROWS_AS(run_action_system(s, "no_such_action"), Error);
}

TEST_CASE("action layout registry") {
    CHECK(action_param_len("insert") == 6);
    CHECK_THROWS_AS(action_param_len("warp"), Error);
    register_action_layout("warp", 4);
    CHECK(action_param_len("warp") == 4);

    Scene s;
    const int root = s.add_root("root", "Root");
    ActionDataComponent bad;
    bad.action_type = "insert";
    bad.params = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(s.add_component(root, bad), Error);
}

TEST_CASE("mesh feature stub") {
    const std::vector<Vec3> single{Vec3::Zero()};
    const Eigen::VectorXd f = mesh_feature_stub(single, 0);
    CHECK(f.size() == kMeshFeatureDim);
    CHECK(f[0] == 1.0);
    CHECK(f.tail(kMeshFeatureDim - 1).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(mesh_feature_stub(std::vector<Vec3>{}, 0), Error);

    // rigid translation leaves the feature unchanged
    auto cloud = box_cloud(Vec3(1, 2, 0.5));
    auto moved = cloud;
    for (Vec3& p : moved) p += Vec3(10, -3, 7);
    CHECK((mesh_feature_stub(cloud, 1) - mesh_feature_stub(moved, 1)).norm() == 0.0);

    // deterministic
    CHECK((mesh_feature_stub(cloud, 1) - mesh_feature_stub(cloud, 1)).norm() == 0.0);

    // cube vs sphere separate
    const Eigen::VectorXd fc = mesh_feature_stub(box_cloud(Vec3(1, 1, 1)), 2);
    const Eigen::VectorXd fs = mesh_feature_stub(sphere_cloud(1.0), 2);
    CHECK(fc.dot(fs) / (fc.norm() * fs.norm()) < 0.99);
}

TEST_CASE("graph view ordering is deterministic") {
    Scene s = two_level_scene();
    const auto ids = s.dfs_order();
    s.add_component(ids[0], InfoComponent{});
    const SceneGraphView v = graph_view(s);
    REQUIRE(v.nodes.size() == 6);  // 3 entities + info + 2 trs
    CHECK(v.nodes[0].kind == NodeKind::Entity);
    CHECK(v.nodes[1].kind == NodeKind::Info);
    CHECK(v.nodes[2].kind == NodeKind::Entity);
    CHECK(v.nodes[3].kind == NodeKind::Trs);
    std::set<std::pair<int, int>> seen;
    for (const auto& e : v.edges) {
        CHECK(e.src < e.dst);  // parents and owners precede
        seen.insert({e.src, e.dst});
    }
    CHECK(seen.size() == v.edges.size());
    CHECK(v.edges.size() == v.nodes.size() - 1);  // a tree
}
