#include "unisg/scene_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <variant>
#include <vector>

namespace unisg {

std::string format_number(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string component_category(NodeKind kind) {
    return std::string(":") + node_kind_name(kind);
}

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok {
    KwUnisg, KwScene, KwEntity, KwInfo, KwTrs, KwMesh, KwAction,
    Ident, String, Number,
    LBrace, RBrace, LBracket, RBracket, Comma, Equals,
    End,
};

const char* tok_name(Tok t) {
    switch (t) {
        case Tok::KwUnisg: return "'unisg'";
        case Tok::KwScene: return "'scene'";
        case Tok::KwEntity: return "'entity'";
        case Tok::KwInfo: return "'info'";
        case Tok::KwTrs: return "'trs'";
        case Tok::KwMesh: return "'mesh'";
        case Tok::KwAction: return "'action'";
        case Tok::Ident: return "identifier";
        case Tok::String: return "string";
        case Tok::Number: return "number";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::LBracket: return "'['";
        case Tok::RBracket: return "']'";
        case Tok::Comma: return "','";
        case Tok::Equals: return "'='";
        case Tok::End: return "end of input";
    }
    return "?";
}

struct Token {
    Tok kind = Tok::End;
    std::string text;   // identifier or unescaped string contents
    double number = 0;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    Token next() {
        skip_ws_and_comments();
        Token t;
        t.line = line_;
        t.col = col_;
        if (eof()) {
            t.kind = Tok::End;
            return t;
        }
        const char c = peek();
        switch (c) {
            case '{': advance(); t.kind = Tok::LBrace; return t;
            case '}': advance(); t.kind = Tok::RBrace; return t;
            case '[': advance(); t.kind = Tok::LBracket; return t;
            case ']': advance(); t.kind = Tok::RBracket; return t;
            case ',': advance(); t.kind = Tok::Comma; return t;
            case '=': advance(); t.kind = Tok::Equals; return t;
            case '"': return lex_string(t);
            default: break;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return lex_ident(t);
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.')
            return lex_number(t);
        throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
    }

private:
    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_ws_and_comments() {
        while (!eof()) {
            const char c = peek();
            if (c == '#') {
                while (!eof() && peek() != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else {
                break;
            }
        }
    }

    Token lex_string(Token t) {
        advance();  // opening quote
        std::string out;
        while (true) {
            if (eof() || peek() == '\n')
                throw ParseError("unterminated string", t.line, t.col);
            char c = peek();
            advance();
            if (c == '"') break;
            if (c == '\\') {
                if (eof()) throw ParseError("unterminated string escape", t.line, t.col);
                const char esc = peek();
                advance();
                switch (esc) {
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    case 'n': out += '\n'; break;
                    default:
                        throw ParseError(std::string("unknown string escape '\\") + esc + "'",
                                         line_, col_);
                }
            } else {
                out += c;
            }
        }
        t.kind = Tok::String;
        t.text = std::move(out);
        return t;
    }

    Token lex_ident(Token t) {
        std::string out;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
            out += peek();
            advance();
        }
        static const std::map<std::string, Tok> kw = {
            {"unisg", Tok::KwUnisg}, {"scene", Tok::KwScene},   {"entity", Tok::KwEntity},
            {"info", Tok::KwInfo},   {"trs", Tok::KwTrs},       {"mesh", Tok::KwMesh},
            {"action", Tok::KwAction}};
        const auto it = kw.find(out);
        t.kind = it == kw.end() ? Tok::Ident : it->second;
        t.text = std::move(out);
        return t;
    }

    Token lex_number(Token t) {
        std::string out;
        const auto take = [&] { out += peek(); advance(); };
        if (!eof() && (peek() == '-' || peek() == '+')) take();
        bool digits = false;
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) { take(); digits = true; }
        if (!eof() && peek() == '.') {
            take();
            while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) { take(); digits = true; }
        }
        if (!digits) throw ParseError("malformed number", t.line, t.col);
        if (!eof() && (peek() == 'e' || peek() == 'E')) {
            take();
            if (!eof() && (peek() == '-' || peek() == '+')) take();
            bool exp_digits = false;
            while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) { take(); exp_digits = true; }
            if (!exp_digits) throw ParseError("malformed number exponent", t.line, t.col);
        }
        const char* begin = out.c_str();
        if (*begin == '+') ++begin;
        double value = 0;
        const auto res = std::from_chars(begin, out.c_str() + out.size(), value);
        if (res.ec != std::errc{} || res.ptr != out.c_str() + out.size())
            throw ParseError("malformed number", t.line, t.col);
        t.kind = Tok::Number;
        t.number = value;
        return t;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

using ValuePayload = std::variant<std::string, double, std::vector<double>>;

struct Value {
    ValuePayload payload;
    int line = 0, col = 0;

    bool is_string() const { return payload.index() == 0; }
    bool is_number() const { return payload.index() == 1; }
    bool is_list() const { return payload.index() == 2; }
    const std::string& str() const { return std::get<std::string>(payload); }
    double num() const { return std::get<double>(payload); }
    const std::vector<double>& list() const { return std::get<std::vector<double>>(payload); }
};

struct RawComponent {
    NodeKind kind;
    std::map<std::string, Value> keys;
    int line = 0, col = 0;
};

struct RawEntity {
    std::string name;
    std::map<std::string, Value> metas;
    std::vector<RawComponent> components;
    std::vector<RawEntity> children;
    int line = 0, col = 0;
};

class Parser {
public:
    explicit Parser(const std::string& text) : lexer_(text) { bump(); }

    SceneDocument parse_document() {
        expect(Tok::KwUnisg);
        const Token version = expect(Tok::Number);
        if (version.number != std::floor(version.number))
            throw ParseError("format version must be an integer", version.line, version.col);
        SceneDocument doc;
        doc.format_version = static_cast<int>(version.number);

        expect(Tok::KwScene);
        const Token name = expect(Tok::String);
        doc.scene.name = name.text;
        open_brace();
        std::map<std::string, Value> metas;
        while (cur_.kind == Tok::Ident) parse_meta(metas);
        for (const auto& [key, value] : metas) {
            if (key == "label") {
                doc.scene.label = require_int(value, "label");
            } else {
                throw ParseError("unknown scene meta key \"" + key + "\"", value.line, value.col);
            }
        }
        if (cur_.kind != Tok::KwEntity)
            throw ParseError(std::string("expected 'entity', got ") + tok_name(cur_.kind),
                             cur_.line, cur_.col);
        RawEntity root = parse_entity();
        close_brace();
        if (cur_.kind != Tok::End)
            throw ParseError(std::string("expected end of input, got ") + tok_name(cur_.kind),
                             cur_.line, cur_.col);

        materialize(doc.scene, root);
        return doc;
    }

private:
    void bump() { cur_ = lexer_.next(); }

    Token expect(Tok kind) {
        if (cur_.kind != kind) {
            if (cur_.kind == Tok::End && !open_braces_.empty())
                throw ParseError("unclosed '{'", open_braces_.back().first,
                                 open_braces_.back().second);
            throw ParseError(std::string("expected ") + tok_name(kind) + ", got " +
                                 tok_name(cur_.kind),
                             cur_.line, cur_.col);
        }
        Token t = cur_;
        bump();
        return t;
    }

    void open_brace() {
        const Token t = expect(Tok::LBrace);
        open_braces_.emplace_back(t.line, t.col);
    }

    void close_brace() {
        expect(Tok::RBrace);
        open_braces_.pop_back();
    }

    Value parse_value() {
        Value v;
        v.line = cur_.line;
        v.col = cur_.col;
        if (cur_.kind == Tok::String) {
            v.payload = expect(Tok::String).text;
        } else if (cur_.kind == Tok::Number) {
            v.payload = expect(Tok::Number).number;
        } else if (cur_.kind == Tok::LBracket) {
            bump();
            std::vector<double> items;
            if (cur_.kind != Tok::RBracket) {
                items.push_back(expect(Tok::Number).number);
                while (cur_.kind == Tok::Comma) {
                    bump();
                    items.push_back(expect(Tok::Number).number);
                }
            }
            expect(Tok::RBracket);
            v.payload = std::move(items);
        } else {
            throw ParseError(std::string("expected a value, got ") + tok_name(cur_.kind),
                             cur_.line, cur_.col);
        }
        return v;
    }

    void parse_meta(std::map<std::string, Value>& into) {
        const Token key = expect(Tok::Ident);
        expect(Tok::Equals);
        Value v = parse_value();
        if (!into.emplace(key.text, std::move(v)).second)
            throw ParseError("duplicate key \"" + key.text + "\"", key.line, key.col);
    }

    RawComponent parse_component(NodeKind kind) {
        RawComponent c;
        c.kind = kind;
        c.line = cur_.line;
        c.col = cur_.col;
        bump();  // component keyword
        open_brace();
        while (cur_.kind == Tok::Ident) parse_meta(c.keys);
        close_brace();
        return c;
    }

    RawEntity parse_entity() {
        RawEntity e;
        e.line = cur_.line;
        e.col = cur_.col;
        expect(Tok::KwEntity);
        e.name = expect(Tok::String).text;
        open_brace();
        while (cur_.kind != Tok::RBrace) {
            switch (cur_.kind) {
                case Tok::KwEntity: e.children.push_back(parse_entity()); break;
                case Tok::KwInfo: add_component(e, parse_component(NodeKind::Info)); break;
                case Tok::KwTrs: add_component(e, parse_component(NodeKind::Trs)); break;
                case Tok::KwMesh: add_component(e, parse_component(NodeKind::Mesh)); break;
                case Tok::KwAction: add_component(e, parse_component(NodeKind::Action)); break;
                case Tok::Ident: parse_meta(e.metas); break;
                case Tok::End:
                    throw ParseError("unclosed '{'", open_braces_.back().first,
                                     open_braces_.back().second);
                default:
                    throw ParseError(std::string("expected component, entity, meta or '}', got ") +
                                         tok_name(cur_.kind),
                                     cur_.line, cur_.col);
            }
        }
        close_brace();
        return e;
    }

    static void add_component(RawEntity& e, RawComponent c) {
        for (const auto& existing : e.components)
            if (existing.kind == c.kind)
                throw ParseError(std::string("duplicate ") + node_kind_name(c.kind) +
                                     " component",
                                 c.line, c.col);
        e.components.push_back(std::move(c));
    }

    static int require_int(const Value& v, const std::string& what) {
        if (!v.is_number() || v.num() != std::floor(v.num()) || std::abs(v.num()) > 1e9)
            throw ParseError("key \"" + what + "\" must be an integer", v.line, v.col);
        return static_cast<int>(v.num());
    }

    static const Value& require_key(const RawComponent& c, const std::string& key) {
        const auto it = c.keys.find(key);
        if (it == c.keys.end())
            throw ParseError(std::string(node_kind_name(c.kind)) + " component is missing key \"" +
                                 key + "\"",
                             c.line, c.col);
        return it->second;
    }

    static std::vector<double> require_list(const Value& v, int arity, const std::string& what) {
        if (!v.is_list())
            throw ParseError("key \"" + what + "\" must be a vector", v.line, v.col);
        if (arity >= 0 && static_cast<int>(v.list().size()) != arity)
            throw ParseError("key \"" + what + "\" expects " + std::to_string(arity) +
                                 " values, got " + std::to_string(v.list().size()),
                             v.line, v.col);
        return v.list();
    }

    // ---- materialization ---------------------------------------------------

    void collect_explicit_ids(const RawEntity& e, std::set<int>& ids) const {
        const auto it = e.metas.find("id");
        if (it != e.metas.end()) {
            const int id = require_int(it->second, "id");
            if (id < 0)
                throw ParseError("entity ids must be non-negative", it->second.line,
                                 it->second.col);
            if (!ids.insert(id).second)
                throw ParseError("duplicate entity id " + std::to_string(id), it->second.line,
                                 it->second.col);
        }
        for (const auto& c : e.children) collect_explicit_ids(c, ids);
    }

    void assign_ids(RawEntity& e, std::set<int>& used, int& next) {
        if (!e.metas.count("id")) {
            while (used.count(next)) ++next;
            Value v;
            v.payload = double(next);
            used.insert(next);
            e.metas.emplace("id", v);
        }
        for (auto& c : e.children) assign_ids(c, used, next);
    }

    void add_entities(Scene& scene, const RawEntity& e, int parent) const {
        const int id = require_int(e.metas.at("id"), "id");
        std::string category;
        for (const auto& [key, value] : e.metas) {
            if (key == "id") continue;
            if (key == "category") {
                if (!value.is_string())
                    throw ParseError("key \"category\" must be a string", value.line, value.col);
                category = value.str();
            } else {
                throw ParseError("unknown entity meta key \"" + key + "\"", value.line,
                                 value.col);
            }
        }
        scene.add_entity_with_id(id, parent, e.name, category);
        for (const auto& c : e.children) add_entities(scene, c, id);
    }

    void add_components(Scene& scene, const RawEntity& e) const {
        const int id = require_int(e.metas.at("id"), "id");
        for (const auto& c : e.components) {
            try {
                switch (c.kind) {
                    case NodeKind::Info: add_info(scene, id, c); break;
                    case NodeKind::Trs: add_trs(scene, id, c); break;
                    case NodeKind::Mesh: add_mesh(scene, id, c); break;
                    case NodeKind::Action: add_action(scene, id, c); break;
                    default: break;
                }
            } catch (const ParseError&) {
                throw;
            } catch (const Error& err) {
                throw ParseError(err.what(), c.line, c.col);
            }
        }
        for (const auto& child : e.children) add_components(scene, child);
    }

    void add_info(Scene& scene, int id, const RawComponent& c) const {
        check_keys(c, {"counts"});
        InfoComponent info;
        const auto counts = require_list(require_key(c, "counts"), 4, "counts");
        const Value& v = c.keys.at("counts");
        for (double d : counts)
            if (d != std::floor(d) || d < 0)
                throw ParseError("counts must be non-negative integers", v.line, v.col);
        info.entity_count = static_cast<int>(counts[0]);
        info.trs_count = static_cast<int>(counts[1]);
        info.mesh_count = static_cast<int>(counts[2]);
        info.action_count = static_cast<int>(counts[3]);
        // stored verbatim so a validator can diff them against the census
        scene.set_info_unchecked(id, info);
    }

    void add_trs(Scene& scene, int id, const RawComponent& c) const {
        check_keys(c, {"form", "coeffs", "scale"});
        const Value& form_v = require_key(c, "form");
        if (!form_v.is_string())
            throw ParseError("key \"form\" must be a string", form_v.line, form_v.col);
        Form form;
        try {
            form = form_from_name(form_v.str());
        } catch (const Error& err) {
            throw ParseError(err.what(), form_v.line, form_v.col);
        }
        const auto coeffs =
            require_list(require_key(c, "coeffs"), payload_arity(form), "coeffs");
        Vec3 scale = Vec3::Ones();
        if (c.keys.count("scale")) {
            const auto s = require_list(c.keys.at("scale"), 3, "scale");
            scale = Vec3(s[0], s[1], s[2]);
        }
        const Eigen::VectorXd cv =
            Eigen::Map<const Eigen::VectorXd>(coeffs.data(), coeffs.size());
        scene.add_component(id, TRSComponent{payload_from_coeffs(form, cv, scale)});
    }

    void add_mesh(Scene& scene, int id, const RawComponent& c) const {
        check_keys(c, {"feature"});
        const auto f = require_list(require_key(c, "feature"), kMeshFeatureDim, "feature");
        MeshFeatureComponent mesh;
        mesh.feature = Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
        scene.add_component(id, std::move(mesh));
    }

    void add_action(Scene& scene, int id, const RawComponent& c) const {
        check_keys(c, {"type", "params", "refs"});
        const Value& type_v = require_key(c, "type");
        if (!type_v.is_string())
            throw ParseError("key \"type\" must be a string", type_v.line, type_v.col);
        ActionDataComponent act;
        act.action_type = type_v.str();
        if (!action_type_registered(act.action_type))
            throw ParseError("unknown action type \"" + act.action_type + "\"", type_v.line,
                             type_v.col);
        const auto params = require_list(require_key(c, "params"),
                                         action_param_len(act.action_type), "params");
        act.params = Eigen::Map<const Eigen::VectorXd>(params.data(), params.size());
        const Value& refs_v = require_key(c, "refs");
        for (double d : require_list(refs_v, -1, "refs")) {
            if (d != std::floor(d))
                throw ParseError("refs must be integer entity ids", refs_v.line, refs_v.col);
            act.refs.push_back(static_cast<int>(d));
        }
        scene.add_component(id, std::move(act));
    }

    static void check_keys(const RawComponent& c, std::initializer_list<const char*> allowed) {
        for (const auto& [key, value] : c.keys) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok)
                throw ParseError(std::string("unknown ") + node_kind_name(c.kind) + " key \"" +
                                     key + "\"",
                                 value.line, value.col);
        }
    }

    void materialize(Scene& scene, RawEntity& root) {
        std::set<int> ids;
        collect_explicit_ids(root, ids);
        int next = 0;
        assign_ids(root, ids, next);
        add_entities(scene, root, -1);
        add_components(scene, root);
    }

    Lexer lexer_;
    Token cur_;
    std::vector<std::pair<int, int>> open_braces_;
};

// ---------------------------------------------------------------------------
// Serializer
// ---------------------------------------------------------------------------

void write_list(std::string& out, const Eigen::VectorXd& v) {
    out += '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_number(v[i]);
    }
    out += ']';
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"') out += "\\\"";
        else if (c == '\\') out += "\\\\";
        else if (c == '\n') out += "\\n";
        else out += c;
    }
    return out;
}

void serialize_entity(const Scene& scene, int id, int depth, std::string& out) {
    const std::string pad(2 * depth, ' ');
    const Entity& e = scene.entity(id);
    out += pad + "entity \"" + escape(e.name) + "\" {\n";
    const std::string inner(2 * depth + 2, ' ');
    if (!e.category.empty()) out += inner + "category = \"" + escape(e.category) + "\"\n";
    out += inner + "id = " + std::to_string(e.id) + "\n";
    if (const InfoComponent* info = scene.info(id)) {
        out += inner + "info { counts = ";
        write_list(out, info->as_vector());
        out += " }\n";
    }
    if (const TRSComponent* trs = scene.trs(id)) {
        out += inner + "trs { coeffs = ";
        write_list(out, payload_coeffs(trs->repr));
        out += " form = \"" + std::string(form_name(trs->repr.form)) + "\" scale = ";
        write_list(out, trs->repr.scale);
        out += " }\n";
    }
    if (const MeshFeatureComponent* mesh = scene.mesh(id)) {
        out += inner + "mesh { feature = ";
        write_list(out, mesh->feature);
        out += " }\n";
    }
    if (const ActionDataComponent* act = scene.action(id)) {
        out += inner + "action { params = ";
        write_list(out, act->params);
        out += " refs = [";
        for (std::size_t i = 0; i < act->refs.size(); ++i) {
            if (i) out += ", ";
            out += std::to_string(act->refs[i]);
        }
        out += "] type = \"" + escape(act->action_type) + "\" }\n";
    }
    for (int child : e.children) serialize_entity(scene, child, depth + 1, out);
    out += pad + "}\n";
}

}  // namespace

SceneDocument parse_scene(const std::string& text) {
    Parser parser(text);
    return parser.parse_document();
}

std::string serialize_scene(const SceneDocument& doc) {
    std::string out = "unisg " + std::to_string(doc.format_version) + "\n";
    out += "scene \"" + escape(doc.scene.name) + "\" {\n";
    if (doc.scene.label != -1) out += "  label = " + std::to_string(doc.scene.label) + "\n";
    if (!doc.scene.empty()) serialize_entity(doc.scene, doc.scene.root(), 1, out);
    out += "}\n";
    return out;
}

SceneDocument load_scene_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open \"" + path + "\"");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str());
}

void save_scene_file(const SceneDocument& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write \"" + path + "\"");
    out << serialize_scene(doc);
}

FlatExport export_flat(const SceneDocument& doc) {
    const Scene& scene = doc.scene;
    const SceneGraphView view = graph_view(scene);
    FlatExport out;
    out.nodes_csv = "node_id,kind,category\n";
    out.edges_csv = "src,dst,edge_kind\n";
    for (std::size_t i = 0; i < view.nodes.size(); ++i) {
        const SceneGraphNode& n = view.nodes[i];
        const std::string category = n.kind == NodeKind::Entity
                                         ? scene.entity(n.entity_id).category
                                         : component_category(n.kind);
        out.nodes_csv += std::to_string(i) + "," + node_kind_name(n.kind) + "," + category + "\n";

        Eigen::VectorXd feature;
        switch (n.kind) {
            case NodeKind::Entity: break;
            case NodeKind::Info: feature = scene.info(n.entity_id)->as_vector(); break;
            case NodeKind::Trs: {
                const TransformRepr& r = scene.trs(n.entity_id)->repr;
                const Eigen::VectorXd coeffs = payload_coeffs(r);
                feature.resize(coeffs.size() + 3);
                feature << coeffs, r.scale;
                break;
            }
            case NodeKind::Mesh: feature = scene.mesh(n.entity_id)->feature; break;
            case NodeKind::Action: feature = scene.action(n.entity_id)->params; break;
        }
        if (feature.size() > 0) {
            out.features_csv += std::to_string(i);
            for (Eigen::Index k = 0; k < feature.size(); ++k)
                out.features_csv += "," + format_number(feature[k]);
            out.features_csv += "\n";
        }
    }
    for (const SceneGraphEdge& e : view.edges) {
        out.edges_csv += std::to_string(e.src) + "," + std::to_string(e.dst) + "," +
                         (e.kind == EdgeKind::ParentChild ? "parent_child" : "entity_component") +
                         "\n";
    }
    return out;
}

}  // namespace unisg
