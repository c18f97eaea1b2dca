#pragma once

#include <string>

#include "unisg/scene.hpp"

namespace unisg {

/// The `.unisg` text format.
///
///   document   := "unisg" INT scene
///   scene      := "scene" STRING "{" meta* entity "}"
///   meta       := IDENT "=" value
///   entity     := "entity" STRING "{" (component | entity | meta)* "}"
///   component  := ("info"|"trs"|"mesh"|"action") "{" (IDENT "=" value)* "}"
///   value      := STRING | NUMBER | "[" (NUMBER ("," NUMBER)*)? "]"
///
/// UTF-8, `#` starts a line comment, strings take \\ \" \n escapes. Scene
/// meta: `label` (integer class label, omitted when -1). Entity metas:
/// `id` (always written), `category` (written when non-empty). Component
/// keys: info `counts` [4]; trs `form` ("matrix","angle_axis_t","quat_t",
/// "dual_quat","pga_motor","cga_motor"), `coeffs` (16/7/7/8/16/32, matrices
/// row-major), `scale` [3]; mesh `feature` [1024]; action `type`, `params`,
/// `refs`. Action `satisfied` is transient system state and never serialized.
///
/// Serialization is canonical: two-space indent, metas and component keys
/// sorted, components in info/trs/mesh/action order before child entities,
/// numbers in shortest round-trip decimal capped at 17 significant digits,
/// -0 written as 0. parse(serialize(doc)) == doc structurally and
/// serialize(parse(serialize(doc))) == serialize(doc) byte for byte.
struct SceneDocument {
    int format_version = 1;
    Scene scene;

    bool operator==(const SceneDocument& other) const {
        return format_version == other.format_version && scene == other.scene;
    }
};

/// Parses a document, reporting the first error with line/column.
SceneDocument parse_scene(const std::string& text);

std::string serialize_scene(const SceneDocument& doc);

SceneDocument load_scene_file(const std::string& path);
void save_scene_file(const SceneDocument& doc, const std::string& path);

/// Flat interchange tables. nodes: `node_id,kind,category` (component nodes
/// carry their ":kind" pseudo-category). edges: `src,dst,edge_kind` with
/// edge_kind parent_child|entity_component. features: headerless rows
/// `node_id,v0,v1,...` for component nodes (info counts, trs coeffs plus
/// scale, full mesh feature, action params).
struct FlatExport {
    std::string nodes_csv;
    std::string edges_csv;
    std::string features_csv;
};

FlatExport export_flat(const SceneDocument& doc);

/// Shortest round-trip decimal for a double; -0 canonicalizes to "0".
std::string format_number(double v);

/// Pseudo-category assigned to component nodes in exports, e.g. ":trs".
std::string component_category(NodeKind kind);

}  // namespace unisg
