#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"
#include "unisg/graph_export.hpp"

using namespace unisg;

namespace {

const std::array<Form, kFormCount> kAllForms = {Form::Matrix,   Form::AngleAxisT,
                                                Form::QuatT,    Form::DualQuat,
                                                Form::PgaMotor, Form::CgaMotor};

}  // namespace

TEST_CASE("trs_feature widths per form") {
    Rng rng(1);
    RigidHub hub = test::random_rigid(rng);
    hub.scale = Vec3::Ones() * 1.5;
    CHECK(trs_feature(from_hub(hub, Form::Matrix)).size() == 16);
    CHECK(trs_feature(from_hub(hub, Form::AngleAxisT)).size() == 10);
    CHECK(trs_feature(from_hub(hub, Form::QuatT)).size() == 10);
    CHECK(trs_feature(from_hub(hub, Form::DualQuat)).size() == 11);
    CHECK(trs_feature(from_hub(hub, Form::PgaMotor)).size() == 19);
    CHECK(trs_feature(from_hub(hub, Form::CgaMotor)).size() == 35);

    // identity PGA motor: 1 at blade 0, zeros elsewhere, unit scale
    const Eigen::VectorXd idm = trs_feature(TransformRepr::identity(Form::PgaMotor));
    CHECK(idm[0] == 1.0);
    CHECK(idm.segment(1, 15).cwiseAbs().maxCoeff() == 0.0);
    CHECK(idm.tail(3) == Vec3::Ones());

    // identity matrix flattens row-major
    const Eigen::VectorXd im = trs_feature(TransformRepr::matrix(Mat4::Identity()));
    CHECK(im.size() == 16);
    for (int i = 0; i < 16; ++i) CHECK(im[i] == (i % 5 == 0 ? 1.0 : 0.0));
}

TEST_CASE("single entity with one trs exports N=2 with one edge") {
    Scene s;
    const int root = s.add_root("root", "Widget");
    s.add_component(root, TRSComponent{TransformRepr::matrix(Mat4::Identity())});
    CategoryVocab vocab;
    const GraphTensors g = export_tensors(s, {}, vocab);
    CHECK(g.n() == 2);
    CHECK(g.A(0, 1) == 1.0);
    CHECK(g.A(1, 0) == 1.0);
    CHECK(g.A(0, 0) == 0.0);
    CHECK(g.node_kinds[0] == NodeKind::Entity);
    CHECK(g.node_kinds[1] == NodeKind::Trs);
    CHECK(vocab.name(g.categories[0]) == "Widget");
    CHECK(vocab.name(g.categories[1]) == ":trs");
    // kind one-hot prefix
    CHECK(g.X(0, 0) == 1.0);
    CHECK(g.X(1, int(NodeKind::Trs)) == 1.0);

    // determinism
    CategoryVocab vocab2;
    const GraphTensors g2 = export_tensors(s, {}, vocab2);
    CHECK(g.X == g2.X);
    CHECK(g.A == g2.A);
}

TEST_CASE("structure is invariant across representation forms") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const Scene s = test::random_scene(rng);
        CategoryVocab vocab;
        ExportOptions opts;
        opts.form = Form::Matrix;
        GraphTensors ref;
        bool have_ref = false;
        for (Form f : kAllForms) {
            opts.form = f;
            GraphTensors g;
            try {
                g = export_tensors(s, opts, vocab);
            } catch (const ConversionError&) {
                continue;  // non-uniform scale cannot reach GA/quaternion forms
            }
            if (!have_ref && f == Form::Matrix) {
                ref = g;
                have_ref = true;
                continue;
            }
            if (!have_ref) continue;
            CHECK(g.A == ref.A);
            CHECK(g.node_kinds == ref.node_kinds);
            CHECK(g.categories == ref.categories);
            CHECK(g.graph_label == ref.graph_label);
        }
    }
}

TEST_CASE("adjacency is symmetric with zero diagonal") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        CategoryVocab vocab;
        const GraphTensors g = export_tensors(test::random_scene(rng), {}, vocab);
        CHECK(test::max_abs(g.A - g.A.transpose()) == 0.0);
        CHECK(g.A.diagonal().cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("child insertion order permutes rows consistently") {
    const auto build = [&](bool swap) {
        Scene s;
        const int root = s.add_root("root", "Root");
        RigidHub h1, h2;
        h1.t = Vec3(1, 0, 0);
        h2.t = Vec3(0, 2, 0);
        const char* const names[2] = {"a", "b"};
        const int first = swap ? 1 : 0;
        const int second = swap ? 0 : 1;
        const int ia = s.add_entity(root, names[first], "Cat");
        const int ib = s.add_entity(root, names[second], "Cat");
        s.add_component(ia, TRSComponent{from_hub(first == 0 ? h1 : h2, Form::QuatT)});
        s.add_component(ib, TRSComponent{from_hub(second == 0 ? h1 : h2, Form::QuatT)});
        return s;
    };
    CategoryVocab vocab;
    const GraphTensors ga = export_tensors(build(false), {}, vocab);
    const GraphTensors gb = export_tensors(build(true), {}, vocab);
    REQUIRE(ga.n() == gb.n());
    // nodes: 0 root, 1 a-entity, 2 a-trs, 3 b-entity, 4 b-trs ... swapped
    const std::vector<int> perm = {0, 3, 4, 1, 2};  // index in gb of ga's node i
    for (int i = 0; i < ga.n(); ++i) {
        CHECK(ga.node_kinds[i] == gb.node_kinds[perm[i]]);
        CHECK(ga.X.row(i) == gb.X.row(perm[i]));
        for (int j = 0; j < ga.n(); ++j) CHECK(ga.A(i, j) == gb.A(perm[i], perm[j]));
    }
}

TEST_CASE("rigid pose information survives any form choice") {
    Rng rng(47);
    Scene s;
    const int root = s.add_root("root", "Root");
    for (int i = 0; i < 5; ++i) {
        const int id = s.add_entity(root, "e" + std::to_string(i), "Cat");
        s.add_component(id, TRSComponent{from_hub(test::random_rigid(rng), Form::QuatT)});
    }
    // reconstructing world transforms from converted scenes matches
    for (Form f : kAllForms) {
        Scene converted = s;
        for (int id : converted.dfs_order())
            if (auto* c = converted.trs_mut(id)) c->repr = convert(c->repr, f);
        for (int id : s.dfs_order())
            CHECK(test::max_abs(world_transform(converted, id) - world_transform(s, id)) < 1e-9);
    }
}

TEST_CASE("mesh truncation flag") {
    Scene s;
    const int root = s.add_root("root", "Root");
    MeshFeatureComponent mesh;
    mesh.feature = Eigen::VectorXd::LinSpaced(kMeshFeatureDim, 0.0, 1.0);
    s.add_component(root, mesh);
    CategoryVocab vocab;
    ExportOptions opts;
    opts.mesh_feature_width = 64;
    const GraphTensors g = export_tensors(s, opts, vocab);
    CHECK(g.f() == kNodeKindCount + 64);
    opts.mesh_feature_width = kMeshFeatureDim;
    const GraphTensors full = export_tensors(s, opts, vocab);
    CHECK(full.f() == kNodeKindCount + kMeshFeatureDim);
    opts.mesh_feature_width = 0;
    CHECK_THROWS_AS(export_tensors(s, opts, vocab), Error);
}
