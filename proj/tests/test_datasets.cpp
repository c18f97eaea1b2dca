#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "test_util.hpp"
#include "unisg/datasets.hpp"
#include "unisg/graph_export.hpp"
#include "unisg/scene_io.hpp"

using namespace unisg;

namespace {

int count_actions(const Scene& s) {
    int n = 0;
    for (int id : s.dfs_order())
        if (s.action(id)) ++n;
    return n;
}

bool on_top_oracle(const Vec3& upper, const Vec3& lower) {
    return std::abs(upper.z() - (lower.z() + 1.0)) < 1e-6 &&
           std::abs(upper.x() - lower.x()) < 1.0 && std::abs(upper.y() - lower.y()) < 1.0;
}

}  // namespace

TEST_CASE("template instantiation") {
    const Scene or_scene = instantiate(or_template(), 0);
    CHECK(or_scene.entity_count() == 12);
    CHECK(count_actions(or_scene) == 1);
    CHECK(or_scene.label == 0);

    const Scene lr = instantiate(living_room_template(), 0);
    CHECK(lr.label == 1);
    CHECK(count_actions(lr) == 0);

    // every entity carries trs + mesh + info
    for (int id : or_scene.dfs_order()) {
        CHECK(or_scene.trs(id) != nullptr);
        CHECK(or_scene.mesh(id) != nullptr);
        CHECK(or_scene.info_raw(id) != nullptr);
    }

    // determinism
    const Scene again = instantiate(or_template(), 0);
    CHECK(again == or_scene);
    const Scene other = instantiate(or_template(), 1);
    CHECK(!(other == or_scene));

    // serializes and reparses losslessly
    const SceneDocument doc{1, or_scene};
    CHECK(parse_scene(serialize_scene(doc)) == doc);
}

TEST_CASE("augmentation") {
    const Scene base = instantiate(or_template(), 7);

    AugmentationConfig zero;
    zero.translation_sigma = 0.0;
    zero.rotation_max_deg = 0.0;
    zero.mesh_jitter_sigma = 0.0;
    CHECK(augment(base, zero) == base);

    AugmentationConfig cfg;
    cfg.seed = 3;
    const Scene noisy = augment(base, cfg);
    CHECK(!(noisy == base));

    // topology, categories and actions untouched: adjacency equal in export
    CategoryVocab vocab;
    const GraphTensors a = export_tensors(base, {}, vocab);
    const GraphTensors b = export_tensors(noisy, {}, vocab);
    CHECK(a.A == b.A);
    CHECK(a.node_kinds == b.node_kinds);
    CHECK(a.categories == b.categories);
    CHECK((a.X - b.X).cwiseAbs().maxCoeff() > 0.0);

    // forms and scales preserved
    for (int id : base.dfs_order()) {
        CHECK(noisy.trs(id)->repr.form == base.trs(id)->repr.form);
        CHECK(noisy.trs(id)->repr.scale == base.trs(id)->repr.scale);
    }

    CHECK_THROWS_AS(augment(base, AugmentationConfig{0, -0.1, 5.0, 0.0}), Error);
}

TEST_CASE("classification dataset is balanced and deterministic") {
    const auto scenes = classification_dataset(20, 42);
    REQUIRE(scenes.size() == 20);
    int zeros = 0;
    for (const Scene& s : scenes) zeros += s.label == 0 ? 1 : 0;
    CHECK(zeros == 10);

    const auto again = classification_dataset(20, 42);
    for (std::size_t i = 0; i < scenes.size(); ++i) CHECK(scenes[i] == again[i]);

    CHECK_THROWS_AS(classification_dataset(7, 1), Error);
}

TEST_CASE("OR dataset: distinct scenes with the mandatory core") {
    const auto scenes = gen_or_dataset(60, 5);
    REQUIRE(scenes.size() == 60);
    std::set<std::string> serialized;
    for (const Scene& s : scenes) {
        serialized.insert(serialize_scene({1, s}));
        bool has_table = false, has_patient = false;
        for (int id : s.dfs_order()) {
            has_table |= s.entity(id).category == "OperatingTable";
            has_patient |= s.entity(id).category == "Patient";
        }
        CHECK(has_table);
        CHECK(has_patient);
    }
    CHECK(serialized.size() == scenes.size());  // pairwise distinct
}

TEST_CASE("cube stacks: generator edges match the brute-force oracle") {
    const CubeStack two = gen_cube_stack(2, 11);
    CHECK(two.scene.entity_count() == 3);  // ground + 2 cubes

    // hand fixtures: one on the other vs side by side
    {
        Scene s;
        const int root = s.add_root("ground", "Ground");
        RigidHub h1, h2;
        h1.t = Vec3(0, 0, 0.5);
        h2.t = Vec3(0.1, -0.1, 1.5);
        const int a = s.add_entity(root, "a", "Cube");
        const int b = s.add_entity(root, "b", "Cube");
        s.add_component(a, TRSComponent{from_hub(h1, Form::QuatT)});
        s.add_component(b, TRSComponent{from_hub(h2, Form::QuatT)});
        CHECK(on_top_oracle(world_position(s, b), world_position(s, a)));

        RigidHub h3;
        h3.t = Vec3(2.0, 0, 0.5);
        s.trs_mut(b)->repr = from_hub(h3, Form::QuatT);
        CHECK(!on_top_oracle(world_position(s, b), world_position(s, a)));
    }

    // oracle equality at n = 200
    const CubeStack stack = gen_cube_stack(200, 17);
    std::vector<int> cubes;
    for (int id : stack.scene.dfs_order())
        if (stack.scene.entity(id).category == "Cube") cubes.push_back(id);
    REQUIRE(cubes.size() == 200);

    std::set<std::pair<int, int>> oracle;
    for (int i : cubes)
        for (int j : cubes) {
            if (i == j) continue;
            if (on_top_oracle(world_position(stack.scene, i), world_position(stack.scene, j)))
                oracle.insert({i, j});
        }
    const std::set<std::pair<int, int>> generated(stack.on_top_edges.begin(),
                                                  stack.on_top_edges.end());
    CHECK(generated == oracle);

    // stacking is a DAG: antisymmetric and acyclic by level construction
    for (const auto& [upper, lower] : generated) {
        CHECK(!generated.count({lower, upper}));
        CHECK(world_position(stack.scene, upper).z() >
              world_position(stack.scene, lower).z());
    }

    CHECK_THROWS_AS(gen_cube_stack(1, 0), Error);

    // determinism
    const CubeStack again = gen_cube_stack(200, 17);
    CHECK(again.scene == stack.scene);
    CHECK(again.on_top_edges == stack.on_top_edges);
}

TEST_CASE("primitive clouds are deterministic and shaped") {
    const auto boxc = sample_primitive({MeshPrimitive::Kind::Box, Vec3(1, 2, 3)}, 128, 9);
    CHECK(boxc.size() == 128);
    for (const Vec3& p : boxc) {
        CHECK(std::abs(p.x()) <= 0.5 + 1e-12);
        CHECK(std::abs(p.y()) <= 1.0 + 1e-12);
        CHECK(std::abs(p.z()) <= 1.5 + 1e-12);
    }
    const auto sph = sample_primitive({MeshPrimitive::Kind::Sphere, Vec3(2, 0, 0)}, 64, 9);
    for (const Vec3& p : sph) CHECK(p.norm() == doctest::Approx(2.0).epsilon(1e-9));

    const auto c1 = sample_primitive({MeshPrimitive::Kind::Cylinder, Vec3(1, 2, 0)}, 64, 9);
    const auto c2 = sample_primitive({MeshPrimitive::Kind::Cylinder, Vec3(1, 2, 0)}, 64, 9);
    for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == c2[i]);
}
