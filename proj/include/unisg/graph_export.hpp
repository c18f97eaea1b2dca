#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "unisg/scene.hpp"

namespace unisg {

/// Bidirectional category label <-> id map shared across a dataset so that
/// every graph uses the same integer vocabulary. Component nodes get the
/// ":kind" pseudo-labels from scene_io.
class CategoryVocab {
public:
    int get_or_add(const std::string& name);
    int get(const std::string& name) const;  // throws on unknown label
    bool contains(const std::string& name) const { return ids_.count(name) != 0; }
    int size() const { return static_cast<int>(names_.size()); }
    const std::string& name(int id) const;

private:
    std::map<std::string, int> ids_;
    std::vector<std::string> names_;
};

/// Fixed-shape tensors for the neural engine. Node order follows
/// graph_view: depth-first, components before child entities.
///
/// Every row of X starts with a 5-wide node-kind one-hot
/// (entity/info/trs/mesh/action) followed by the kind's payload, zero-padded
/// to the common width: entities have no payload, info rows carry the 4
/// counts, trs rows carry trs_feature under the chosen form, mesh rows the
/// (possibly truncated) mesh feature, action rows their params.
struct GraphTensors {
    Eigen::MatrixXd X;                  // N x F
    Eigen::MatrixXd A;                  // N x N, {0,1}, symmetric, zero diagonal
    std::vector<NodeKind> node_kinds;   // length N
    std::vector<int> categories;        // length N, ids into the vocab
    int graph_label = -1;

    int n() const { return static_cast<int>(node_kinds.size()); }
    int f() const { return static_cast<int>(X.cols()); }
};

struct ExportOptions {
    Form form = Form::Matrix;
    /// Mesh features are truncated to this many leading values to keep F
    /// desk-scale; set to kMeshFeatureDim for the full vector.
    int mesh_feature_width = 64;
};

/// Native TRS feature: the flattened payload, plus the 3 scale channels for
/// every form except MATRIX (which folds scale into the 16 coefficients).
/// Widths: 16 / 10 / 10 / 11 / 19 / 35.
Eigen::VectorXd trs_feature(const TransformRepr& repr);

GraphTensors export_tensors(const Scene& scene, const ExportOptions& opts,
                            CategoryVocab& vocab);

/// Writes the dense tensors as comma-separated blocks: X.csv, A.csv,
/// labels.csv (graph label plus per-node kind/category ids) and vocab.csv
/// (category id -> name). Complements the export_flat tables.
void dump_tensors(const GraphTensors& g, const CategoryVocab& vocab,
                  const std::string& out_dir);

/// Entity-level tensors for the topology prediction task: one node per
/// non-root entity (ordered by dfs), X rows are trs_feature under the given
/// form, A is the symmetrized relation given by `edges` (pairs of entity
/// ids). Node kinds are all Entity.
GraphTensors relation_tensors(const Scene& scene,
                              const std::vector<std::pair<int, int>>& edges, Form form,
                              CategoryVocab& vocab);

}  // namespace unisg
