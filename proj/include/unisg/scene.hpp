#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unisg/errors.hpp"
#include "unisg/xform.hpp"

namespace unisg {

constexpr int kMeshFeatureDim = 1024;

/// Node kinds of the heterogeneous scene graph: entities plus the four
/// component families.
enum class NodeKind { Entity, Info, Trs, Mesh, Action };
const char* node_kind_name(NodeKind k);
constexpr int kNodeKindCount = 5;

struct Entity {
    int id = -1;
    std::string name;
    std::string category;
    std::optional<int> parent;
    std::vector<int> children;  // ordered
};

/// Census of the owner's children in the graph sense: child entities plus the
/// owner's trs/mesh/action components. Kept lazily in sync by the scene.
struct InfoComponent {
    int entity_count = 0;
    int trs_count = 0;
    int mesh_count = 0;
    int action_count = 0;

    Eigen::Vector4d as_vector() const {
        return {double(entity_count), double(trs_count), double(mesh_count),
                double(action_count)};
    }
    bool operator==(const InfoComponent&) const = default;
};

struct TRSComponent {
    TransformRepr repr;
};

struct MeshFeatureComponent {
    Eigen::VectorXd feature;  // always kMeshFeatureDim long
};

struct ActionDataComponent {
    std::string action_type;
    Eigen::VectorXd params;  // layout registered per action_type
    std::vector<int> refs;   // entity ids the action concerns
    bool satisfied = false;
};

/// Registered parameter layout widths per action type. "insert" is built in
/// with 6 params: bounds min (3) then bounds max (3), world coordinates.
void register_action_layout(const std::string& type, int param_len);
int action_param_len(const std::string& type);  // throws on unknown type
bool action_type_registered(const std::string& type);

/// Entity-component scene graph. The entity graph is a rooted tree; every
/// entity owns at most one component of each kind. Single writer; concurrent
/// readers are safe between mutations.
class Scene {
public:
    std::string name;
    int label = -1;  // optional class label

    int add_root(const std::string& name, const std::string& category);
    int add_entity(int parent_id, const std::string& name, const std::string& category);
    /// Adds an entity with a caller-chosen id (used by the parser). Throws if
    /// the id is taken. parent_id < 0 makes it the root.
    int add_entity_with_id(int id, int parent_id, const std::string& name,
                           const std::string& category);

    void add_component(int owner, InfoComponent c);
    void add_component(int owner, TRSComponent c);
    void add_component(int owner, MeshFeatureComponent c);
    void add_component(int owner, ActionDataComponent c);
    void remove_component(int owner, NodeKind kind);

    /// Moves an entity (with its subtree) under a new parent. Reparenting the
    /// root or creating a cycle throws.
    void reparent(int id, int new_parent);
    /// Removes an entity and its whole subtree. The root cannot be removed.
    void remove_entity(int id);

    bool has_entity(int id) const { return entities_.count(id) != 0; }
    const Entity& entity(int id) const;
    int root() const { return root_; }
    int entity_count() const { return static_cast<int>(entities_.size()); }
    bool empty() const { return entities_.empty(); }

    /// Depth-first document order (children in insertion order).
    std::vector<int> dfs_order() const;

    const TRSComponent* trs(int id) const;
    TRSComponent* trs_mut(int id);
    const MeshFeatureComponent* mesh(int id) const;
    MeshFeatureComponent* mesh_mut(int id);
    const ActionDataComponent* action(int id) const;
    ActionDataComponent* action_mut(int id);
    /// Refreshes stale counts before returning.
    const InfoComponent* info(int id) const;
    /// Stored counts without a refresh pass (lets validators compare parsed
    /// counts against the census).
    const InfoComponent* info_raw(int id) const;
    bool has_info(int id) const { return info_.count(id) != 0; }

    /// Sets info counts verbatim without marking them stale (used by the
    /// parser so a validator can compare file counts against the census).
    void set_info_unchecked(int owner, InfoComponent c);

    /// Brute-force census of an entity's children, independent of the cached
    /// counts.
    InfoComponent census(int id) const;

    bool operator==(const Scene& other) const;

private:
    void require_entity(int id) const;
    void refresh_info() const;

    std::map<int, Entity> entities_;
    mutable std::map<int, InfoComponent> info_;
    std::map<int, TRSComponent> trs_;
    std::map<int, MeshFeatureComponent> mesh_;
    std::map<int, ActionDataComponent> action_;
    int root_ = -1;
    int next_id_ = 0;
    mutable bool info_stale_ = false;
};

/// Product of the TRS matrices from the root down to the entity. Entities
/// without a TRS contribute the identity. Mixed representation forms along
/// the path are fine; everything is converted to matrices.
Mat4 world_transform(const Scene& scene, int entity_id);
Vec3 world_position(const Scene& scene, int entity_id);

struct ActionResult {
    int entity_id = -1;
    bool satisfied = false;
    bool ok = true;
    std::string message;
};

/// Visits every ActionDataComponent of the given type in depth-first order
/// (optionally restricted to a subtree), evaluates its condition against
/// current world transforms and updates `satisfied`. A failing action yields
/// an error entry; traversal continues.
std::vector<ActionResult> run_action_system(Scene& scene, const std::string& action_type,
                                            std::optional<int> subtree_root = std::nullopt);

/// Closed-bounds point-in-box test; the boundary counts as inside.
bool insert_action_check(const Vec3& tool_world_pos, const Vec3& bounds_min,
                         const Vec3& bounds_max);

/// Deterministic stand-in for a learned mesh encoder: centers the cloud,
/// scales by the max radius and histograms (radius bin, octant) occupancy
/// into 1024 bins (128 radius bins x 8 octants), L2-normalized. Clouds larger
/// than 4096 points are subsampled with the seed.
Eigen::VectorXd mesh_feature_stub(std::span<const Vec3> point_cloud, std::uint64_t seed);

/// Flattened heterogeneous graph view shared by the exporters: one node per
/// entity and per component, depth-first, components before child entities.
struct SceneGraphNode {
    NodeKind kind;
    int entity_id;  // owner for component nodes
};

enum class EdgeKind { ParentChild, EntityComponent };

struct SceneGraphEdge {
    int src;  // indices into the node list
    int dst;
    EdgeKind kind;
};

struct SceneGraphView {
    std::vector<SceneGraphNode> nodes;
    std::vector<SceneGraphEdge> edges;
    std::map<int, int> entity_node;  // entity id -> node index
};

SceneGraphView graph_view(const Scene& scene);

}  // namespace unisg
