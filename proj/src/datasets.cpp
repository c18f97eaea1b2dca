#include "unisg/datasets.hpp"

#include <cmath>
#include <numbers>

#include "unisg/rng.hpp"

namespace unisg {

std::vector<Vec3> sample_primitive(const MeshPrimitive& prim, int points, std::uint64_t seed) {
    std::vector<Vec3> cloud;
    cloud.reserve(points);
    Rng rng(seed);
    switch (prim.kind) {
        case MeshPrimitive::Kind::Box: {
            const Vec3 h = 0.5 * prim.dims;
            for (int i = 0; i < points; ++i) {
                // pick a face weighted by nothing fancy, then a point on it
                const int axis = rng.uniform_int(0, 2);
                const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
                Vec3 p(rng.uniform(-1, 1) * h.x(), rng.uniform(-1, 1) * h.y(),
                       rng.uniform(-1, 1) * h.z());
                p[axis] = side * h[axis];
                cloud.push_back(p);
            }
            break;
        }
        case MeshPrimitive::Kind::Sphere: {
            const double r = prim.dims.x();
            const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
            for (int i = 0; i < points; ++i) {
                const double z = 1.0 - 2.0 * (i + 0.5) / points;
                const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
                const double phi = golden * i;
                cloud.emplace_back(r * rad * std::cos(phi), r * rad * std::sin(phi), r * z);
            }
            break;
        }
        case MeshPrimitive::Kind::Cylinder: {
            const double r = prim.dims.x();
            const double h = prim.dims.y();
            for (int i = 0; i < points; ++i) {
                const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
                if (rng.uniform() < 0.8) {
                    cloud.emplace_back(r * std::cos(phi), rng.uniform(-0.5, 0.5) * h,
                                       r * std::sin(phi));
                } else {
                    const double rr = r * std::sqrt(rng.uniform());
                    const double y = rng.uniform() < 0.5 ? -0.5 * h : 0.5 * h;
                    cloud.emplace_back(rr * std::cos(phi), y, rr * std::sin(phi));
                }
            }
            break;
        }
    }
    return cloud;
}

namespace {

constexpr int kCloudPoints = 256;

EntityBlueprint bp(std::string name, std::string category, int parent, Vec3 pos, Vec3 zone,
                   MeshPrimitive prim, bool optional_prop = false,
                   std::optional<ActionBlueprint> action = std::nullopt) {
    EntityBlueprint e;
    e.name = std::move(name);
    e.category = std::move(category);
    e.parent_slot = parent;
    e.base_pos = pos;
    e.zone = zone;
    e.primitive = prim;
    e.optional_prop = optional_prop;
    e.action = std::move(action);
    return e;
}

MeshPrimitive box(double x, double y, double z) {
    return {MeshPrimitive::Kind::Box, Vec3(x, y, z)};
}
MeshPrimitive sphere(double r) { return {MeshPrimitive::Kind::Sphere, Vec3(r, 0, 0)}; }
MeshPrimitive cylinder(double r, double h) {
    return {MeshPrimitive::Kind::Cylinder, Vec3(r, h, 0)};
}

}  // namespace

SceneTemplate or_template() {
    SceneTemplate t;
    t.name = "operating_room";
    t.class_label = 0;
    auto& e = t.entities;
    e.push_back(bp("or_room", "OperatingRoom", -1, {0, 0, 0}, {0, 0, 0}, box(8, 3, 8)));
    e.push_back(bp("or_table", "OperatingTable", 0, {0, 0.9, 0}, {0.3, 0, 0.3},
                   box(2.0, 0.2, 0.8)));
    e.push_back(bp("patient", "Patient", 1, {0, 0.35, 0}, {0.1, 0, 0.05},
                   box(1.8, 0.35, 0.6)));
    e.push_back(bp("instrument_tray", "InstrumentTray", 0, {1.5, 1.0, 0.5}, {0.3, 0, 0.3},
                   box(0.6, 0.05, 0.4)));
    // the scalpel watches the patient region; bounds follow the patient
    ActionBlueprint insert;
    insert.type = "insert";
    insert.bounds_half = Vec3(1.0, 0.6, 0.5);
    insert.target_slot = 2;
    e.push_back(bp("scalpel", "Scalpel", 3, {0.12, 0.06, 0.0}, {0.05, 0, 0.05},
                   cylinder(0.012, 0.16), false, insert));
    e.push_back(bp("forceps", "Forceps", 3, {-0.12, 0.06, 0.08}, {0.05, 0, 0.05},
                   cylinder(0.015, 0.14), true));
    e.push_back(bp("surgical_lamp", "SurgicalLamp", 0, {0, 2.4, 0}, {0.4, 0.1, 0.4},
                   sphere(0.3), true));
    e.push_back(bp("vitals_monitor", "VitalsMonitor", 0, {-1.8, 1.4, -0.6}, {0.2, 0.1, 0.2},
                   box(0.5, 0.4, 0.15), true));
    e.push_back(bp("anesthesia_cart", "AnesthesiaCart", 0, {-1.6, 0.8, 0.9}, {0.2, 0, 0.2},
                   box(0.7, 1.4, 0.6), true));
    e.push_back(bp("iv_stand", "IvStand", 0, {0.9, 1.2, -1.1}, {0.2, 0, 0.2},
                   cylinder(0.02, 2.0), true));
    e.push_back(bp("supply_cart", "SupplyCart", 0, {2.2, 0.5, -1.4}, {0.3, 0, 0.3},
                   box(0.8, 0.9, 0.5), true));
    e.push_back(bp("scrub_sink", "ScrubSink", 0, {-2.6, 0.8, 1.8}, {0.1, 0, 0.1},
                   box(0.6, 0.9, 0.5), true));
    return t;
}

SceneTemplate living_room_template() {
    SceneTemplate t;
    t.name = "living_room";
    t.class_label = 1;
    auto& e = t.entities;
    e.push_back(bp("living_room", "LivingRoom", -1, {0, 0, 0}, {0, 0, 0}, box(6, 2.8, 5)));
    e.push_back(bp("sofa", "Sofa", 0, {0, 0.45, -1.6}, {0.3, 0, 0.1}, box(2.1, 0.9, 0.9)));
    e.push_back(bp("coffee_table", "CoffeeTable", 0, {0, 0.4, -0.3}, {0.2, 0, 0.2},
                   box(1.1, 0.08, 0.6)));
    e.push_back(bp("rug", "Rug", 0, {0, 0.01, -0.5}, {0.2, 0, 0.2}, box(2.5, 0.02, 1.8), true));
    e.push_back(bp("tv_stand", "TvStand", 0, {0, 0.3, 1.9}, {0.2, 0, 0.05},
                   box(1.6, 0.6, 0.4)));
    e.push_back(bp("television", "Television", 4, {0, 0.55, 0}, {0.05, 0, 0},
                   box(1.4, 0.8, 0.08)));
    e.push_back(bp("floor_lamp", "FloorLamp", 0, {-2.2, 1.5, -1.9}, {0.15, 0, 0.15},
                   cylinder(0.025, 3.0), true));
    e.push_back(bp("bookshelf", "Bookshelf", 0, {2.5, 1.0, 0.6}, {0.1, 0, 0.2},
                   box(0.9, 2.0, 0.35), true));
    e.push_back(bp("armchair", "Armchair", 0, {-1.9, 0.45, -0.4}, {0.2, 0, 0.2},
                   box(0.95, 0.9, 0.9), true));
    e.push_back(bp("potted_plant", "PottedPlant", 0, {2.3, 0.7, -2.0}, {0.15, 0, 0.15},
                   sphere(0.35), true));
    e.push_back(bp("speaker", "Speaker", 4, {-0.9, 0.45, 0}, {0.05, 0, 0.02},
                   box(0.25, 0.5, 0.3), true));
    e.push_back(bp("window_frame", "WindowFrame", 0, {0, 1.6, 2.45}, {0.3, 0, 0},
                   box(1.8, 1.4, 0.06), true));
    return t;
}

Scene instantiate(const SceneTemplate& tmpl, std::uint64_t seed, bool structural_variation) {
    Rng rng(seed);
    Scene scene;
    scene.name = tmpl.name + "_" + std::to_string(seed);
    scene.label = tmpl.class_label;

    std::vector<int> slot_to_id(tmpl.entities.size(), -1);
    std::vector<bool> kept(tmpl.entities.size(), false);
    for (std::size_t slot = 0; slot < tmpl.entities.size(); ++slot) {
        const EntityBlueprint& b = tmpl.entities[slot];
        // drop optional props under structural variation; parents must be kept
        bool keep = !structural_variation || !b.optional_prop || rng.uniform() >= 0.35;
        if (b.parent_slot >= 0 && !kept[b.parent_slot]) keep = false;
        kept[slot] = keep;
        if (!keep) continue;

        const int parent_id = b.parent_slot < 0 ? -1 : slot_to_id[b.parent_slot];
        const int id = b.parent_slot < 0 ? scene.add_root(b.name, b.category)
                                         : scene.add_entity(parent_id, b.name, b.category);
        slot_to_id[slot] = id;

        Vec3 pos = b.base_pos;
        for (int k = 0; k < 3; ++k) pos[k] += rng.uniform(-1.0, 1.0) * b.zone[k];
        const double yaw = rng.uniform(-0.26, 0.26);  // ~15 degrees
        const Quaternion q = quat_from_angleaxis({std::abs(yaw), Vec3::UnitY()});
        const Quaternion q_signed = yaw >= 0 ? q : q.conjugate();
        const RigidHub hub{q_signed.canonicalized(), pos, Vec3::Ones()};
        scene.add_component(id, TRSComponent{from_hub(hub, Form::Matrix)});

        MeshFeatureComponent mesh;
        const std::uint64_t cloud_seed = fnv1a(b.category);
        const auto cloud = sample_primitive(b.primitive, kCloudPoints, cloud_seed);
        mesh.feature = mesh_feature_stub(cloud, cloud_seed);
        scene.add_component(id, std::move(mesh));
        scene.add_component(id, InfoComponent{});
    }

    // actions second so refs resolve regardless of blueprint order
    for (std::size_t slot = 0; slot < tmpl.entities.size(); ++slot) {
        if (!kept[slot] || !tmpl.entities[slot].action) continue;
        const ActionBlueprint& ab = *tmpl.entities[slot].action;
        if (ab.target_slot >= 0 && !kept[ab.target_slot]) continue;
        ActionDataComponent act;
        act.action_type = ab.type;
        const Vec3 center = ab.target_slot < 0
                                ? Vec3::Zero()
                                : world_position(scene, slot_to_id[ab.target_slot]);
        Eigen::VectorXd params(6);
        params << (center - ab.bounds_half), (center + ab.bounds_half);
        act.params = params;
        act.refs = {slot_to_id[slot]};
        scene.add_component(slot_to_id[slot], std::move(act));
    }
    return scene;
}

namespace {

double scene_diameter(const Scene& scene) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int id : scene.dfs_order()) {
        const Vec3 p = world_position(scene, id);
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double d = (hi - lo).norm();
    return std::max(d, 1e-6);
}

}  // namespace

Scene augment(const Scene& scene, const AugmentationConfig& cfg) {
    if (cfg.translation_sigma < 0 || cfg.mesh_jitter_sigma < 0 || cfg.rotation_max_deg < 0 ||
        cfg.rotation_max_deg >= 180.0)
        throw Error("augment: invalid noise configuration");
    Rng rng(cfg.seed);
    Scene out = scene;
    const double tsigma = cfg.translation_sigma * scene_diameter(scene);
    const double max_angle = cfg.rotation_max_deg * std::numbers::pi / 180.0;

    for (int id : out.dfs_order()) {
        if (TRSComponent* trs = out.trs_mut(id)) {
            Vec3 dt = Vec3::Zero();
            Quaternion dq = Quaternion::identity();
            if (cfg.translation_sigma > 0)
                dt = Vec3(rng.normal(0, tsigma), rng.normal(0, tsigma), rng.normal(0, tsigma));
            if (cfg.rotation_max_deg > 0) {
                const Vec3 axis = rng.unit_vector();
                dq = quat_from_angleaxis({rng.uniform(0.0, max_angle), axis});
            }
            const bool identity_noise = dt.cwiseAbs().maxCoeff() == 0.0 && dq.q0 == 1.0 &&
                                        dq.q1 == 0.0 && dq.q2 == 0.0 && dq.q3 == 0.0;
            if (!identity_noise) {
                // compose the noise in the parent frame: x' = (dT dR) ∘ x
                const RigidHub hub = to_hub(trs->repr);
                RigidHub moved;
                moved.q = qmul(dq, hub.q).canonicalized();
                moved.t = dt + dq.rotate(hub.t);
                moved.scale = hub.scale;
                trs->repr = from_hub(moved, trs->repr.form);
            }
        }
        if (MeshFeatureComponent* mesh = out.mesh_mut(id); mesh && cfg.mesh_jitter_sigma > 0) {
            for (Eigen::Index i = 0; i < mesh->feature.size(); ++i)
                mesh->feature[i] += rng.normal(0, cfg.mesh_jitter_sigma);
        }
    }
    return out;
}

std::vector<Scene> classification_dataset(int count, std::uint64_t seed,
                                          const AugmentationConfig& noise) {
    if (count < 2 || count % 2 != 0)
        throw Error("classification_dataset: count must be even and >= 2");
    const SceneTemplate templates[2] = {or_template(), living_room_template()};
    std::vector<Scene> scenes;
    scenes.reserve(count);
    for (int t = 0; t < 2; ++t) {
        const Scene base = instantiate(templates[t], seed ^ std::uint64_t(t));
        for (int i = 0; i < count / 2; ++i) {
            AugmentationConfig cfg = noise;
            cfg.seed = seed ^ std::uint64_t(t * 1000003 + i * 2 + 1);
            Scene aug = augment(base, cfg);
            aug.name = base.name + "_aug" + std::to_string(i);
            scenes.push_back(std::move(aug));
        }
    }
    return scenes;
}

std::vector<Scene> gen_or_dataset(int n, std::uint64_t seed) {
    if (n < 1) throw Error("gen_or_dataset: n must be >= 1");
    const SceneTemplate tmpl = or_template();
    std::vector<Scene> scenes;
    scenes.reserve(n);
    for (int i = 0; i < n; ++i) {
        Scene s = instantiate(tmpl, seed ^ std::uint64_t(i), true);
        s.name = "or_" + std::to_string(i);
        scenes.push_back(std::move(s));
    }
    return scenes;
}

CubeStack gen_cube_stack(int n_cubes, std::uint64_t seed) {
    if (n_cubes < 2) throw Error("gen_cube_stack: need at least 2 cubes");
    Rng rng(seed);
    CubeStack out;
    out.scene.name = "cube_stack_" + std::to_string(seed);
    const int root = out.scene.add_root("ground", "Ground");

    constexpr double kPitch = 2.0;   // cell spacing; keeps stacks out of contact
    constexpr double kJitter = 0.2;  // xy jitter within a cell
    constexpr int kMaxHeight = 6;

    const int side = static_cast<int>(std::ceil(std::sqrt(double(n_cubes)))) + 1;
    std::vector<int> cells(side * side);
    for (int i = 0; i < side * side; ++i) cells[i] = i;
    rng.shuffle(cells);

    int placed = 0;
    int cell_idx = 0;
    int cube_no = 0;
    while (placed < n_cubes) {
        const int cell = cells[cell_idx++];
        const double cx = double(cell % side) * kPitch;
        const double cy = double(cell / side) * kPitch;
        const int height = std::min(rng.uniform_int(1, kMaxHeight), n_cubes - placed);
        int below = -1;
        for (int level = 0; level < height; ++level) {
            const Vec3 pos(cx + rng.uniform(-kJitter, kJitter),
                           cy + rng.uniform(-kJitter, kJitter), 0.5 + double(level));
            const int id =
                out.scene.add_entity(root, "cube_" + std::to_string(cube_no++), "Cube");
            RigidHub hub;
            hub.t = pos;
            out.scene.add_component(id, TRSComponent{from_hub(hub, Form::QuatT)});
            if (below >= 0) out.on_top_edges.emplace_back(id, below);
            below = id;
            ++placed;
        }
    }
    return out;
}

}  // namespace unisg
