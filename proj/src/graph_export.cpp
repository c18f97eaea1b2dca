#include "unisg/graph_export.hpp"

#include <filesystem>
#include <fstream>

#include "unisg/scene_io.hpp"

namespace unisg {

int CategoryVocab::get_or_add(const std::string& name) {
    const auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    const int id = size();
    ids_.emplace(name, id);
    names_.push_back(name);
    return id;
}

int CategoryVocab::get(const std::string& name) const {
    const auto it = ids_.find(name);
    if (it == ids_.end()) throw Error("unknown category \"" + name + "\"");
    return it->second;
}

const std::string& CategoryVocab::name(int id) const {
    if (id < 0 || id >= size()) throw Error("category id out of range");
    return names_[id];
}

Eigen::VectorXd trs_feature(const TransformRepr& repr) {
    const Eigen::VectorXd coeffs = payload_coeffs(repr);
    if (repr.form == Form::Matrix) return coeffs;
    Eigen::VectorXd out(coeffs.size() + 3);
    out << coeffs, repr.scale;
    return out;
}

GraphTensors export_tensors(const Scene& scene, const ExportOptions& opts,
                            CategoryVocab& vocab) {
    if (opts.mesh_feature_width < 1 || opts.mesh_feature_width > kMeshFeatureDim)
        throw Error("export_tensors: mesh_feature_width out of range");
    const SceneGraphView view = graph_view(scene);
    const int n = static_cast<int>(view.nodes.size());

    GraphTensors g;
    g.graph_label = scene.label;
    g.node_kinds.reserve(n);
    g.categories.reserve(n);

    std::vector<Eigen::VectorXd> payloads(n);
    int max_payload = 0;
    for (int i = 0; i < n; ++i) {
        const SceneGraphNode& node = view.nodes[i];
        g.node_kinds.push_back(node.kind);
        switch (node.kind) {
            case NodeKind::Entity:
                g.categories.push_back(vocab.get_or_add(scene.entity(node.entity_id).category));
                break;
            case NodeKind::Info:
                g.categories.push_back(vocab.get_or_add(component_category(node.kind)));
                payloads[i] = scene.info(node.entity_id)->as_vector();
                break;
            case NodeKind::Trs:
                g.categories.push_back(vocab.get_or_add(component_category(node.kind)));
                payloads[i] =
                    trs_feature(convert(scene.trs(node.entity_id)->repr, opts.form));
                break;
            case NodeKind::Mesh:
                g.categories.push_back(vocab.get_or_add(component_category(node.kind)));
                payloads[i] = scene.mesh(node.entity_id)->feature.head(opts.mesh_feature_width);
                break;
            case NodeKind::Action:
                g.categories.push_back(vocab.get_or_add(component_category(node.kind)));
                payloads[i] = scene.action(node.entity_id)->params;
                break;
        }
        max_payload = std::max(max_payload, static_cast<int>(payloads[i].size()));
    }

    const int f = kNodeKindCount + max_payload;
    g.X = Eigen::MatrixXd::Zero(n, f);
    for (int i = 0; i < n; ++i) {
        g.X(i, static_cast<int>(g.node_kinds[i])) = 1.0;
        if (payloads[i].size() > 0)
            g.X.row(i).segment(kNodeKindCount, payloads[i].size()) = payloads[i];
    }

    g.A = Eigen::MatrixXd::Zero(n, n);
    for (const SceneGraphEdge& e : view.edges) {
        g.A(e.src, e.dst) = 1.0;
        g.A(e.dst, e.src) = 1.0;
    }
    return g;
}

GraphTensors relation_tensors(const Scene& scene,
                              const std::vector<std::pair<int, int>>& edges, Form form,
                              CategoryVocab& vocab) {
    GraphTensors g;
    std::map<int, int> row_of;
    std::vector<int> entities;
    for (int id : scene.dfs_order()) {
        if (id == scene.root()) continue;
        row_of[id] = static_cast<int>(entities.size());
        entities.push_back(id);
    }
    const int n = static_cast<int>(entities.size());
    if (n == 0) throw Error("relation_tensors: scene has no non-root entities");

    Eigen::VectorXd first;
    for (int i = 0; i < n; ++i) {
        const TRSComponent* trs = scene.trs(entities[i]);
        if (!trs) throw Error("relation_tensors: entity without TRS");
        const Eigen::VectorXd feat = trs_feature(convert(trs->repr, form));
        if (i == 0) {
            g.X = Eigen::MatrixXd::Zero(n, feat.size());
            first = feat;
        }
        g.X.row(i) = feat;
        g.node_kinds.push_back(NodeKind::Entity);
        g.categories.push_back(vocab.get_or_add(scene.entity(entities[i]).category));
    }
    g.A = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [a, b] : edges) {
        const auto ia = row_of.find(a), ib = row_of.find(b);
        if (ia == row_of.end() || ib == row_of.end())
            throw Error("relation_tensors: edge references unknown entity");
        g.A(ia->second, ib->second) = 1.0;
        g.A(ib->second, ia->second) = 1.0;
    }
    return g;
}

void dump_tensors(const GraphTensors& g, const CategoryVocab& vocab,
                  const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto write = [&](const std::string& name, const std::string& contents) {
        std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
        if (!out) throw Error("cannot write \"" + name + "\" in \"" + out_dir + "\"");
        out << contents;
    };

    std::string x;
    for (int i = 0; i < g.n(); ++i) {
        for (int j = 0; j < g.f(); ++j) {
            if (j) x += ",";
            x += format_number(g.X(i, j));
        }
        x += "\n";
    }
    write("X.csv", x);

    std::string a;
    for (int i = 0; i < g.n(); ++i) {
        for (int j = 0; j < g.n(); ++j) {
            if (j) a += ",";
            a += format_number(g.A(i, j));
        }
        a += "\n";
    }
    write("A.csv", a);

    std::string labels = "graph_label," + std::to_string(g.graph_label) + "\n";
    labels += "node_id,kind,category_id\n";
    for (int i = 0; i < g.n(); ++i)
        labels += std::to_string(i) + "," + node_kind_name(g.node_kinds[i]) + "," +
                  std::to_string(g.categories[i]) + "\n";
    write("labels.csv", labels);

    std::string vocab_csv = "category_id,name\n";
    for (int i = 0; i < vocab.size(); ++i)
        vocab_csv += std::to_string(i) + "," + vocab.name(i) + "\n";
    write("vocab.csv", vocab_csv);
}

}  // namespace unisg
