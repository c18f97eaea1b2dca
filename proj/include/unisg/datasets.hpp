#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "unisg/scene.hpp"

namespace unisg {

/// Mesh stand-in primitives sampled into point clouds.
struct MeshPrimitive {
    enum class Kind { Box, Sphere, Cylinder };
    Kind kind = Kind::Box;
    Vec3 dims = Vec3::Ones();  // box extents, or (radius, height, -) for cylinder/sphere
};

std::vector<Vec3> sample_primitive(const MeshPrimitive& prim, int points, std::uint64_t seed);

struct ActionBlueprint {
    std::string type;       // registered action type
    Vec3 bounds_half;       // world box half-extents around the target entity
    int target_slot = -1;   // blueprint index whose position centers the bounds
};

struct EntityBlueprint {
    std::string name;
    std::string category;
    int parent_slot = -1;        // index into the blueprint list, -1 for the root
    Vec3 base_pos = Vec3::Zero();
    Vec3 zone = Vec3::Zero();    // uniform placement jitter half-extents
    MeshPrimitive primitive;
    bool optional_prop = false;  // may be dropped under structural variation
    std::optional<ActionBlueprint> action;
};

struct SceneTemplate {
    std::string name;
    int class_label = -1;
    std::vector<EntityBlueprint> entities;
};

/// The two behaviorally distinct templates: a surgical operating room (the
/// scalpel carries an "insert" action) and a living room.
SceneTemplate or_template();
SceneTemplate living_room_template();

/// Deterministic instantiation: every entity gets a TRS (stored as MATRIX),
/// a mesh feature and an info component; placements are drawn inside each
/// blueprint zone from the seed. `structural_variation` additionally drops
/// optional props at random (mandatory entities always remain).
Scene instantiate(const SceneTemplate& tmpl, std::uint64_t seed,
                  bool structural_variation = false);

struct AugmentationConfig {
    std::uint64_t seed = 0;
    double translation_sigma = 0.05;   // fraction of the scene diameter
    double rotation_max_deg = 5.0;
    double mesh_jitter_sigma = 0.01;
};

/// Gaussian translation noise, a small random rotation composed onto each
/// TRS (in the parent frame) and jitter on mesh features. Topology,
/// categories and actions are untouched; each TRS keeps its form and scale.
Scene augment(const Scene& scene, const AugmentationConfig& cfg);

/// 50/50 augmented instances of the two templates, labels 0 (OR) and
/// 1 (living room). `count` must be even.
std::vector<Scene> classification_dataset(int count, std::uint64_t seed,
                                          const AugmentationConfig& noise = {});

/// n structurally varied OR scenes, seeds derived as seed ^ index.
std::vector<Scene> gen_or_dataset(int n, std::uint64_t seed);

/// Unit cubes in random stacks on a coarse ground grid (cell pitch 2, xy
/// jitter 0.2, so only same-stack cubes can be in contact). The edge list
/// contains (upper, lower) pairs of entity ids where the upper cube rests
/// directly on the lower one: |z_u - (z_l + 1)| < 1e-6 with open horizontal
/// overlap (|dx| < 1 and |dy| < 1).
struct CubeStack {
    Scene scene;
    std::vector<std::pair<int, int>> on_top_edges;
};

CubeStack gen_cube_stack(int n_cubes, std::uint64_t seed);

}  // namespace unisg
