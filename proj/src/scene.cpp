#include "unisg/scene.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>

#include "unisg/rng.hpp"

namespace unisg {

const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Entity: return "entity";
        case NodeKind::Info: return "info";
        case NodeKind::Trs: return "trs";
        case NodeKind::Mesh: return "mesh";
        case NodeKind::Action: return "action";
    }
    return "?";
}

namespace {

std::mutex g_action_registry_mutex;

std::map<std::string, int>& action_registry() {
    static std::map<std::string, int> registry{{"insert", 6}};
    return registry;
}

}  // namespace

void register_action_layout(const std::string& type, int param_len) {
    if (param_len < 0) throw Error("register_action_layout: negative length");
    std::lock_guard lock(g_action_registry_mutex);
    action_registry()[type] = param_len;
}

int action_param_len(const std::string& type) {
    std::lock_guard lock(g_action_registry_mutex);
    const auto& reg = action_registry();
    const auto it = reg.find(type);
    if (it == reg.end()) throw Error("unknown action type: \"" + type + "\"");
    return it->second;
}

bool action_type_registered(const std::string& type) {
    std::lock_guard lock(g_action_registry_mutex);
    return action_registry().count(type) != 0;
}

void Scene::require_entity(int id) const {
    if (!has_entity(id)) throw Error("scene: no entity with id " + std::to_string(id));
}

int Scene::add_root(const std::string& ename, const std::string& category) {
    return add_entity_with_id(next_id_, -1, ename, category);
}

int Scene::add_entity(int parent_id, const std::string& ename, const std::string& category) {
    return add_entity_with_id(next_id_, parent_id, ename, category);
}

int Scene::add_entity_with_id(int id, int parent_id, const std::string& ename,
                              const std::string& category) {
    if (id < 0) throw Error("scene: entity ids must be non-negative");
    if (has_entity(id)) throw Error("scene: duplicate entity id " + std::to_string(id));
    if (parent_id < 0) {
        if (root_ >= 0) throw Error("scene: already has a root entity");
    } else {
        require_entity(parent_id);
    }
    Entity e;
    e.id = id;
    e.name = ename;
    e.category = category;
    if (parent_id >= 0) {
        e.parent = parent_id;
        entities_[parent_id].children.push_back(id);
    } else {
        root_ = id;
    }
    entities_[id] = std::move(e);
    next_id_ = std::max(next_id_, id + 1);
    info_stale_ = true;
    return id;
}

void Scene::add_component(int owner, InfoComponent c) {
    require_entity(owner);
    if (info_.count(owner)) throw Error("scene: entity already owns an info component");
    info_[owner] = c;
    info_stale_ = true;
}

void Scene::add_component(int owner, TRSComponent c) {
    require_entity(owner);
    if (trs_.count(owner)) throw Error("scene: entity already owns a trs component");
    trs_[owner] = std::move(c);
    info_stale_ = true;
}

void Scene::add_component(int owner, MeshFeatureComponent c) {
    require_entity(owner);
    if (mesh_.count(owner)) throw Error("scene: entity already owns a mesh component");
    if (c.feature.size() != kMeshFeatureDim)
        throw Error("scene: mesh feature must have length " + std::to_string(kMeshFeatureDim));
    mesh_[owner] = std::move(c);
    info_stale_ = true;
}

void Scene::add_component(int owner, ActionDataComponent c) {
    require_entity(owner);
    if (action_.count(owner)) throw Error("scene: entity already owns an action component");
    const int want = action_param_len(c.action_type);
    if (c.params.size() != want)
        throw Error("scene: action \"" + c.action_type + "\" expects " + std::to_string(want) +
                    " params, got " + std::to_string(c.params.size()));
    for (int ref : c.refs) require_entity(ref);
    action_[owner] = std::move(c);
    info_stale_ = true;
}

void Scene::remove_component(int owner, NodeKind kind) {
    require_entity(owner);
    std::size_t erased = 0;
    switch (kind) {
        case NodeKind::Info: erased = info_.erase(owner); break;
        case NodeKind::Trs: erased = trs_.erase(owner); break;
        case NodeKind::Mesh: erased = mesh_.erase(owner); break;
        case NodeKind::Action: erased = action_.erase(owner); break;
        case NodeKind::Entity: throw Error("scene: use remove_entity for entities");
    }
    if (erased == 0) throw Error("scene: entity has no such component");
    info_stale_ = true;
}

void Scene::reparent(int id, int new_parent) {
    require_entity(id);
    require_entity(new_parent);
    if (id == root_) throw Error("scene: the root cannot be reparented");
    // walking up from new_parent must not reach id (no cycles)
    for (std::optional<int> cur = new_parent; cur; cur = entities_.at(*cur).parent)
        if (*cur == id) throw Error("scene: reparent would create a cycle");
    Entity& e = entities_.at(id);
    Entity& old_parent = entities_.at(*e.parent);
    std::erase(old_parent.children, id);
    entities_.at(new_parent).children.push_back(id);
    e.parent = new_parent;
    info_stale_ = true;
}

void Scene::remove_entity(int id) {
    require_entity(id);
    if (id == root_) throw Error("scene: the root cannot be removed");
    // gather the subtree
    std::vector<int> stack{id}, doomed;
    while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        doomed.push_back(cur);
        for (int c : entities_.at(cur).children) stack.push_back(c);
    }
    Entity& parent = entities_.at(*entities_.at(id).parent);
    std::erase(parent.children, id);
    for (int d : doomed) {
        info_.erase(d);
        trs_.erase(d);
        mesh_.erase(d);
        action_.erase(d);
        entities_.erase(d);
    }
    // drop dangling action refs elsewhere
    for (auto& [owner, act] : action_)
        std::erase_if(act.refs, [&](int r) { return !has_entity(r); });
    info_stale_ = true;
}

const Entity& Scene::entity(int id) const {
    require_entity(id);
    return entities_.at(id);
}

std::vector<int> Scene::dfs_order() const {
    std::vector<int> order;
    order.reserve(entities_.size());
    if (root_ < 0) return order;
    std::vector<int> stack{root_};
    while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        order.push_back(cur);
        const auto& children = entities_.at(cur).children;
        for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(*it);
    }
    return order;
}

const TRSComponent* Scene::trs(int id) const {
    const auto it = trs_.find(id);
    return it == trs_.end() ? nullptr : &it->second;
}

TRSComponent* Scene::trs_mut(int id) {
    const auto it = trs_.find(id);
    return it == trs_.end() ? nullptr : &it->second;
}

const MeshFeatureComponent* Scene::mesh(int id) const {
    const auto it = mesh_.find(id);
    return it == mesh_.end() ? nullptr : &it->second;
}

MeshFeatureComponent* Scene::mesh_mut(int id) {
    const auto it = mesh_.find(id);
    return it == mesh_.end() ? nullptr : &it->second;
}

const ActionDataComponent* Scene::action(int id) const {
    const auto it = action_.find(id);
    return it == action_.end() ? nullptr : &it->second;
}

ActionDataComponent* Scene::action_mut(int id) {
    const auto it = action_.find(id);
    return it == action_.end() ? nullptr : &it->second;
}

const InfoComponent* Scene::info(int id) const {
    if (info_stale_) refresh_info();
    const auto it = info_.find(id);
    return it == info_.end() ? nullptr : &it->second;
}

const InfoComponent* Scene::info_raw(int id) const {
    const auto it = info_.find(id);
    return it == info_.end() ? nullptr : &it->second;
}

void Scene::set_info_unchecked(int owner, InfoComponent c) {
    require_entity(owner);
    info_[owner] = c;
}

InfoComponent Scene::census(int id) const {
    require_entity(id);
    InfoComponent c;
    c.entity_count = static_cast<int>(entities_.at(id).children.size());
    c.trs_count = trs_.count(id) ? 1 : 0;
    c.mesh_count = mesh_.count(id) ? 1 : 0;
    c.action_count = action_.count(id) ? 1 : 0;
    return c;
}

void Scene::refresh_info() const {
    for (auto& [owner, comp] : info_) comp = census(owner);
    info_stale_ = false;
}

bool Scene::operator==(const Scene& other) const {
    if (name != other.name || label != other.label || root_ != other.root_) return false;
    if (entities_.size() != other.entities_.size()) return false;
    for (const auto& [id, e] : entities_) {
        if (!other.has_entity(id)) return false;
        const Entity& oe = other.entities_.at(id);
        if (e.name != oe.name || e.category != oe.category || e.parent != oe.parent ||
            e.children != oe.children)
            return false;
    }
    if (trs_.size() != other.trs_.size() || mesh_.size() != other.mesh_.size() ||
        action_.size() != other.action_.size() || info_.size() != other.info_.size())
        return false;
    for (const auto& [id, c] : trs_) {
        const TRSComponent* oc = other.trs(id);
        if (!oc || c.repr.form != oc->repr.form || c.repr.scale != oc->repr.scale) return false;
        bool same = true;
        switch (c.repr.form) {
            case Form::Matrix: same = c.repr.as_matrix() == oc->repr.as_matrix(); break;
            case Form::AngleAxisT: {
                const auto &a = c.repr.as_angle_axis(), &b = oc->repr.as_angle_axis();
                same = a.rot.angle == b.rot.angle && a.rot.axis == b.rot.axis && a.t == b.t;
                break;
            }
            case Form::QuatT: {
                const auto &a = c.repr.as_quat(), &b = oc->repr.as_quat();
                same = approx_equal(a.q, b.q, 0.0) && a.t == b.t;
                break;
            }
            case Form::DualQuat: {
                const auto &a = c.repr.as_dual_quat(), &b = oc->repr.as_dual_quat();
                same = approx_equal(a.real, b.real, 0.0) && approx_equal(a.dual, b.dual, 0.0);
                break;
            }
            case Form::PgaMotor:
            case Form::CgaMotor:
                same = c.repr.as_motor().coeffs() == oc->repr.as_motor().coeffs();
                break;
        }
        if (!same) return false;
    }
    for (const auto& [id, c] : mesh_) {
        const MeshFeatureComponent* oc = other.mesh(id);
        if (!oc || c.feature != oc->feature) return false;
    }
    for (const auto& [id, c] : action_) {
        // `satisfied` is transient system state, not structure
        const ActionDataComponent* oc = other.action(id);
        if (!oc || c.action_type != oc->action_type || c.params != oc->params ||
            c.refs != oc->refs)
            return false;
    }
    if (info_stale_) refresh_info();
    if (other.info_stale_) other.refresh_info();
    for (const auto& [id, c] : info_) {
        const auto it = other.info_.find(id);
        if (it == other.info_.end() || !(c == it->second)) return false;
    }
    return true;
}

Mat4 world_transform(const Scene& scene, int entity_id) {
    std::vector<int> chain;
    for (std::optional<int> cur = entity_id; cur; cur = scene.entity(*cur).parent)
        chain.push_back(*cur);
    Mat4 world = Mat4::Identity();
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        if (const TRSComponent* c = scene.trs(*it))
            world = world * convert(c->repr, Form::Matrix).as_matrix();
    }
    return world;
}

Vec3 world_position(const Scene& scene, int entity_id) {
    return world_transform(scene, entity_id).topRightCorner<3, 1>();
}

bool insert_action_check(const Vec3& pos, const Vec3& bmin, const Vec3& bmax) {
    if ((bmin.array() > bmax.array()).any())
        throw Error("insert_action_check: inverted bounds");
    return (pos.array() >= bmin.array()).all() && (pos.array() <= bmax.array()).all();
}

std::vector<ActionResult> run_action_system(Scene& scene, const std::string& action_type,
                                            std::optional<int> subtree_root) {
    if (!action_type_registered(action_type))
        throw Error("run_action_system: unregistered action type \"" + action_type + "\"");
    std::vector<int> order;
    if (subtree_root) {
        std::vector<int> stack{*subtree_root};
        scene.entity(*subtree_root);
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            order.push_back(cur);
            const auto& ch = scene.entity(cur).children;
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
        }
    } else {
        order = scene.dfs_order();
    }
    std::vector<ActionResult> results;
    for (int id : order) {
        ActionDataComponent* act = scene.action_mut(id);
        if (!act || act->action_type != action_type) continue;
        ActionResult res;
        res.entity_id = id;
        try {
            if (action_type == "insert") {
                if (act->refs.empty()) throw Error("insert action has no tool ref");
                const int tool = act->refs[0];
                if (!scene.has_entity(tool))
                    throw Error("insert action ref " + std::to_string(tool) +
                                " does not resolve");
                const Vec3 pos = world_position(scene, tool);
                res.satisfied = insert_action_check(pos, act->params.segment<3>(0),
                                                    act->params.segment<3>(3));
            } else {
                // Other registered types carry data but no built-in predicate.
                res.satisfied = act->satisfied;
            }
            act->satisfied = res.satisfied;
        } catch (const Error& e) {
            res.ok = false;
            res.message = e.what();
            res.satisfied = act->satisfied;
        }
        results.push_back(res);
    }
    return results;
}

Eigen::VectorXd mesh_feature_stub(std::span<const Vec3> cloud, std::uint64_t seed) {
    if (cloud.empty()) throw Error("mesh_feature_stub: empty point cloud");
    constexpr std::size_t kMaxPoints = 4096;
    std::vector<Vec3> points;
    if (cloud.size() > kMaxPoints) {
        Rng rng(seed);
        std::vector<int> idx = rng.permutation(static_cast<int>(cloud.size()));
        points.reserve(kMaxPoints);
        for (std::size_t i = 0; i < kMaxPoints; ++i) points.push_back(cloud[idx[i]]);
    } else {
        points.assign(cloud.begin(), cloud.end());
    }

    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : points) centroid += p;
    centroid /= double(points.size());

    double max_r = 0.0;
    for (const Vec3& p : points) max_r = std::max(max_r, (p - centroid).norm());

    Eigen::VectorXd hist = Eigen::VectorXd::Zero(kMeshFeatureDim);
    constexpr int kRadiusBins = 128;
    for (const Vec3& p : points) {
        const Vec3 d = p - centroid;
        const double r = max_r > 1e-12 ? d.norm() / max_r : 0.0;
        const int rbin = std::min(kRadiusBins - 1, static_cast<int>(r * kRadiusBins));
        const int octant = (d.x() < 0 ? 4 : 0) | (d.y() < 0 ? 2 : 0) | (d.z() < 0 ? 1 : 0);
        hist[rbin * 8 + octant] += 1.0;
    }
    const double n = hist.norm();
    return hist / n;
}

SceneGraphView graph_view(const Scene& scene) {
    SceneGraphView view;
    if (scene.empty()) return view;
    const auto add_node = [&](NodeKind kind, int entity_id) {
        view.nodes.push_back({kind, entity_id});
        return static_cast<int>(view.nodes.size()) - 1;
    };
    // recursive DFS: entity, its components (info/trs/mesh/action), then children
    const std::function<void(int, int)> visit = [&](int id, int parent_node) {
        const int self = add_node(NodeKind::Entity, id);
        view.entity_node[id] = self;
        if (parent_node >= 0) view.edges.push_back({parent_node, self, EdgeKind::ParentChild});
        if (scene.has_info(id))
            view.edges.push_back({self, add_node(NodeKind::Info, id), EdgeKind::EntityComponent});
        if (scene.trs(id))
            view.edges.push_back({self, add_node(NodeKind::Trs, id), EdgeKind::EntityComponent});
        if (scene.mesh(id))
            view.edges.push_back({self, add_node(NodeKind::Mesh, id), EdgeKind::EntityComponent});
        if (scene.action(id))
            view.edges.push_back({self, add_node(NodeKind::Action, id), EdgeKind::EntityComponent});
        for (int child : scene.entity(id).children) visit(child, self);
    };
    visit(scene.root(), -1);
    return view;
}

}  // namespace unisg
