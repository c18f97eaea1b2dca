// unisg: scene conversion, validation, generation, tensor export and the
// three learning experiments on the .unisg scene format.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "unisg/datasets.hpp"
#include "unisg/graph_export.hpp"
#include "unisg/nn/train.hpp"
#include "unisg/scene_io.hpp"

namespace fs = std::filesystem;
using namespace unisg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitParse = 2;
constexpr int kExitConversion = 3;
constexpr int kExitTraining = 4;

const std::array<Form, kFormCount> kAllForms = {Form::Matrix,   Form::AngleAxisT,
                                                Form::QuatT,    Form::DualQuat,
                                                Form::PgaMotor, Form::CgaMotor};

std::string entity_path(const Scene& scene, int id) {
    std::vector<std::string> names;
    for (std::optional<int> cur = id; cur; cur = scene.entity(*cur).parent)
        names.push_back(scene.entity(*cur).name);
    std::string out;
    for (auto it = names.rbegin(); it != names.rend(); ++it) out += "/" + *it;
    return out;
}

/// Echoes the effective configuration as `key = value` lines, reusable via
/// --config.
void write_config_echo(const std::string& out_dir,
                       const std::map<std::string, std::string>& kv) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "config.txt", std::ios::binary);
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

std::vector<Form> forms_from_flag(const std::string& flag) {
    if (flag == "all")
        return std::vector<Form>(kAllForms.begin(), kAllForms.end());
    return {form_from_name(flag)};
}

void pad_to_common_width(std::vector<GraphTensors>& graphs) {
    int f = 0;
    for (const GraphTensors& g : graphs) f = std::max(f, g.f());
    for (GraphTensors& g : graphs) {
        if (g.f() == f) continue;
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(g.n(), f);
        x.leftCols(g.f()) = g.X;
        g.X = std::move(x);
    }
}

// ---------------------------------------------------------------------------
// convert
// ---------------------------------------------------------------------------

int cmd_convert(const std::string& in_file, const std::string& to_form,
                const std::string& out_file) {
    const Form target = form_from_name(to_form);
    SceneDocument doc = load_scene_file(in_file);
    std::vector<std::string> failures;
    for (int id : doc.scene.dfs_order()) {
        if (TRSComponent* trs = doc.scene.trs_mut(id)) {
            try {
                trs->repr = convert(trs->repr, target);
            } catch (const Error& e) {
                failures.push_back(entity_path(doc.scene, id) + ": " + e.what());
            }
        }
    }
    if (!failures.empty()) {
        std::cerr << "conversion to " << to_form << " failed for " << failures.size()
                  << " transform(s):\n";
        for (const std::string& f : failures) std::cerr << "  " << f << "\n";
        return kExitConversion;
    }
    save_scene_file(doc, out_file);
    std::cout << "wrote " << out_file << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& in_file, double tolerance) {
    const SceneDocument doc = load_scene_file(in_file);
    const Scene& scene = doc.scene;
    std::vector<std::string> issues;
    double max_dev = 0.0;

    const std::array<Vec3, 5> probes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0),
                                        Vec3(0, 0, 1), Vec3(0.3, -0.7, 0.9)};
    for (int id : scene.dfs_order()) {
        if (const InfoComponent* info = scene.info_raw(id)) {
            if (!(*info == scene.census(id)))
                issues.push_back(entity_path(scene, id) + ": info counts disagree with census");
        }
        const TRSComponent* trs = scene.trs(id);
        if (!trs) continue;
        const std::string err = trs->repr.check_valid();
        if (!err.empty()) {
            issues.push_back(entity_path(scene, id) + ": " + err);
            continue;
        }
        // six-way apply agreement (matrix-only when the scale is non-uniform)
        try {
            std::vector<TransformRepr> reprs;
            if (trs->repr.form == Form::Matrix &&
                !is_uniform_scale(decompose_matrix(trs->repr.as_matrix()).scale)) {
                reprs.push_back(trs->repr);
            } else {
                for (Form f : kAllForms) reprs.push_back(convert(trs->repr, f));
            }
            for (const Vec3& p : probes) {
                const Vec3 ref = apply(trs->repr, p);
                for (const TransformRepr& r : reprs)
                    max_dev = std::max(max_dev, (apply(r, p) - ref).norm());
            }
        } catch (const Error& e) {
            issues.push_back(entity_path(scene, id) + ": " + e.what());
        }
    }

    std::cout << "entities: " << scene.entity_count() << "\n";
    std::cout << "max apply deviation: " << format_number(max_dev) << "\n";
    if (max_dev > tolerance)
        issues.push_back("apply deviation " + format_number(max_dev) + " exceeds " +
                         format_number(tolerance));
    if (issues.empty()) {
        std::cout << "valid\n";
        return kExitOk;
    }
    for (const std::string& i : issues) std::cerr << "violation: " << i << "\n";
    return kExitValidation;
}

// ---------------------------------------------------------------------------
// scene-gen
// ---------------------------------------------------------------------------

struct SceneGenOptions {
    std::string template_name;
    int count = 1;
    int classify_count = 0;
    int cubes = 0;
    std::uint64_t seed = 0;
    std::string out = "out";
    double noise_translation = 0.05;
    double noise_rotation_deg = 5.0;
    double noise_mesh = 0.01;
};

int cmd_scene_gen(const SceneGenOptions& opt) {
    fs::create_directories(opt.out);
    if (opt.cubes > 0) {
        const CubeStack stack = gen_cube_stack(opt.cubes, opt.seed);
        save_scene_file({1, stack.scene}, (fs::path(opt.out) / "cubes.unisg").string());
        std::ofstream edges(fs::path(opt.out) / "on_top_edges.csv", std::ios::binary);
        edges << "upper,lower\n";
        for (const auto& [u, l] : stack.on_top_edges)
            edges << u << "," << l << "\n";
        std::cout << "wrote cubes.unisg + on_top_edges.csv (" << stack.on_top_edges.size()
                  << " edges)\n";
        return kExitOk;
    }
    if (opt.classify_count > 0) {
        AugmentationConfig noise;
        noise.translation_sigma = opt.noise_translation;
        noise.rotation_max_deg = opt.noise_rotation_deg;
        noise.mesh_jitter_sigma = opt.noise_mesh;
        const auto scenes = classification_dataset(opt.classify_count, opt.seed, noise);
        for (std::size_t i = 0; i < scenes.size(); ++i)
            save_scene_file({1, scenes[i]},
                            (fs::path(opt.out) / (scenes[i].name + ".unisg")).string());
        std::cout << "wrote " << scenes.size() << " scenes\n";
        return kExitOk;
    }
    if (opt.template_name.empty())
        throw Error("scene-gen: pass --template, --classify-count or --cubes");
    const SceneTemplate tmpl =
        opt.template_name == "or"
            ? or_template()
            : (opt.template_name == "living" ? living_room_template()
                                             : throw Error("unknown template \"" +
                                                           opt.template_name + "\""));
    if (opt.count == 1) {
        const Scene s = instantiate(tmpl, opt.seed);
        save_scene_file({1, s}, (fs::path(opt.out) / (s.name + ".unisg")).string());
        std::cout << "wrote " << s.name << ".unisg\n";
        return kExitOk;
    }
    for (int i = 0; i < opt.count; ++i) {
        Scene s = instantiate(tmpl, opt.seed ^ std::uint64_t(i), true);
        s.name = tmpl.name + "_" + std::to_string(i);
        save_scene_file({1, s}, (fs::path(opt.out) / (s.name + ".unisg")).string());
    }
    std::cout << "wrote " << opt.count << " scenes\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// export
// ---------------------------------------------------------------------------

int cmd_export(const std::string& in_file, const std::string& form, int mesh_width,
               const std::string& out_dir) {
    const SceneDocument doc = load_scene_file(in_file);
    fs::create_directories(out_dir);
    const FlatExport flat = export_flat(doc);
    const auto write = [&](const char* name, const std::string& body) {
        std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
        out << body;
    };
    write("nodes.csv", flat.nodes_csv);
    write("edges.csv", flat.edges_csv);
    write("features.csv", flat.features_csv);

    CategoryVocab vocab;
    ExportOptions opts;
    opts.form = form_from_name(form);
    opts.mesh_feature_width = mesh_width;
    const GraphTensors tensors = export_tensors(doc.scene, opts, vocab);
    dump_tensors(tensors, vocab, out_dir);
    std::cout << "wrote flat tables and tensors (" << tensors.n() << " nodes, F="
              << tensors.f() << ") to " << out_dir << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

struct ExperimentOptions {
    std::string task;
    std::string form = "matrix";
    std::uint64_t seed = 0;
    int epochs = -1;  // task default when negative
    int repeats = 1;
    int count = -1;   // dataset size; task default when negative
    int cubes = 1000;
    int mesh_width = 64;
    std::string out = "out";
    std::string agg = "mean";
};

void write_mean_metrics(const std::string& path,
                        const std::vector<std::vector<nn::EpochMetric>>& runs) {
    // average loss and metric per (epoch, split) position across runs
    std::vector<nn::EpochMetric> mean = runs.front();
    for (std::size_t r = 1; r < runs.size(); ++r) {
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i].loss += runs[r][i].loss;
            mean[i].metric += runs[r][i].metric;
        }
    }
    for (nn::EpochMetric& m : mean) {
        m.loss /= double(runs.size());
        m.metric /= double(runs.size());
    }
    nn::write_metrics_csv(path, mean);
}

int cmd_experiment(const ExperimentOptions& opt) {
    fs::create_directories(opt.out);
    const std::vector<Form> forms = forms_from_flag(opt.form);
    std::ofstream summary(fs::path(opt.out) / "summary.csv", std::ios::binary);
    summary << "task,form,run,seed,final_loss,final_metric_train,final_metric_eval\n";

    for (Form form : forms) {
        std::vector<std::vector<nn::EpochMetric>> runs;
        for (int rep = 0; rep < opt.repeats; ++rep) {
            const std::uint64_t seed = opt.seed ^ std::uint64_t(rep);
            const std::string stem =
                opt.task + "_" + form_name(form) + "_run" + std::to_string(rep);
            if (opt.task == "classify") {
                const int count = opt.count > 0 ? opt.count : 100;
                const auto scenes = classification_dataset(count, seed);
                CategoryVocab vocab;
                ExportOptions eopts;
                eopts.form = form;
                eopts.mesh_feature_width = opt.mesh_width;
                std::vector<GraphTensors> data;
                for (const Scene& s : scenes) data.push_back(export_tensors(s, eopts, vocab));
                pad_to_common_width(data);
                nn::ClassifyConfig cfg;
                cfg.seed = seed;
                if (opt.epochs > 0) cfg.epochs = opt.epochs;
                cfg.agg = opt.agg == "attention" ? nn::Aggregator::Attention
                                                 : nn::Aggregator::Mean;
                const nn::ClassifyResult res = nn::train_classifier(data, cfg);
                nn::write_metrics_csv((fs::path(opt.out) / (stem + ".csv")).string(),
                                      res.metrics);
                nn::save_checkpoint((fs::path(opt.out) / (stem + ".ckpt")).string(),
                                    res.model.params());
                summary << "classify," << form_name(form) << "," << rep << "," << seed << ","
                        << format_number(res.metrics.back().loss) << ","
                        << format_number(res.final_train_accuracy) << ","
                        << format_number(res.final_test_accuracy) << "\n";
                runs.push_back(res.metrics);
            } else if (opt.task == "generate") {
                const int count = opt.count > 0 ? opt.count : 1000;
                const auto scenes = gen_or_dataset(count, seed);
                CategoryVocab vocab;
                ExportOptions eopts;
                eopts.form = form;
                eopts.mesh_feature_width = opt.mesh_width;
                std::vector<GraphTensors> data;
                for (const Scene& s : scenes) data.push_back(export_tensors(s, eopts, vocab));
                pad_to_common_width(data);
                nn::CgvaeTrainConfig cfg;
                cfg.seed = seed;
                if (opt.epochs > 0) cfg.epochs = opt.epochs;
                const nn::CgvaeResult res = nn::train_cgvae(data, vocab.size(), cfg);
                nn::write_metrics_csv((fs::path(opt.out) / (stem + ".csv")).string(),
                                      res.metrics);
                nn::save_checkpoint((fs::path(opt.out) / (stem + ".ckpt")).string(),
                                    res.model.params());
                // one conditional sample on the first training scene's categories
                Rng sample_rng(seed);
                const nn::GeneratedScene sample =
                    generate_scene(res.model, data.front().categories, sample_rng);
                std::ofstream gen(fs::path(opt.out) / (stem + "_sample_adjacency.csv"),
                                  std::ios::binary);
                for (Eigen::Index i = 0; i < sample.adjacency.rows(); ++i) {
                    for (Eigen::Index j = 0; j < sample.adjacency.cols(); ++j) {
                        if (j) gen << ",";
                        gen << sample.adjacency(i, j);
                    }
                    gen << "\n";
                }
                summary << "generate," << form_name(form) << "," << rep << "," << seed << ","
                        << format_number(res.metrics.back().loss) << ",,\n";
                runs.push_back(res.metrics);
            } else if (opt.task == "linkpred") {
                if (opt.cubes > 10000) throw Error("linkpred: --cubes is capped at 10000");
                const CubeStack stack = gen_cube_stack(opt.cubes, seed);
                CategoryVocab vocab;
                const GraphTensors g =
                    relation_tensors(stack.scene, stack.on_top_edges, form, vocab);
                nn::LinkpredConfig cfg;
                cfg.seed = seed;
                if (opt.epochs > 0) cfg.epochs = opt.epochs;
                const nn::LinkpredResult res = nn::train_linkpred(g, cfg);
                nn::write_metrics_csv((fs::path(opt.out) / (stem + ".csv")).string(),
                                      res.metrics);
                nn::save_checkpoint((fs::path(opt.out) / (stem + ".ckpt")).string(),
                                    res.model.params());
                std::ofstream scores(fs::path(opt.out) / (stem + "_heldout_scores.csv"),
                                     std::ios::binary);
                scores << "src,dst,score,positive\n";
                for (const nn::EdgeScore& s : res.heldout_scores)
                    scores << s.src << "," << s.dst << "," << format_number(s.score) << ","
                           << (s.positive ? 1 : 0) << "\n";
                summary << "linkpred," << form_name(form) << "," << rep << "," << seed << ","
                        << format_number(res.metrics.back().loss) << ",,"
                        << format_number(res.final_auc) << "\n";
                runs.push_back(res.metrics);
            } else {
                throw Error("unknown task \"" + opt.task + "\"");
            }
        }
        write_mean_metrics(
            (fs::path(opt.out) / (opt.task + "_" + form_name(form) + "_mean.csv")).string(),
            runs);
    }
    std::cout << "experiment \"" << opt.task << "\" done; metrics in " << opt.out << "\n";
    return kExitOk;
}

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t seed_value) {
    if (seed_opt->count() > 0) return seed_value;
    if (const char* env = std::getenv("UNISG_SEED")) return std::strtoull(env, nullptr, 10);
    return seed_value;
}

std::string strip_quotes(std::string v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
        return v.substr(1, v.size() - 2);
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

/// Expands `--config FILE` into `--key value` pairs at the position of the
/// flag, so explicit command-line flags (parsed later, "take last") override
/// config values, and unknown config keys are rejected like unknown flags.
std::vector<std::string> expand_config_args(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a != "--config") {
            args.push_back(a);
            continue;
        }
        if (i + 1 >= argc) throw Error("--config expects a file path");
        const std::string path = argv[++i];
        std::ifstream in(path);
        if (!in) throw Error("cannot open config file \"" + path + "\"");
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos || t[0] == '[')
                throw Error("config file " + path + ":" + std::to_string(lineno) +
                            ": expected `key = value`");
            args.push_back("--" + trim(t.substr(0, eq)));
            args.push_back(strip_quotes(trim(t.substr(eq + 1))));
        }
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"unisg: geometric-algebra scenegraph toolkit"};
    app.require_subcommand(1);

    // convert
    auto* convert_cmd = app.add_subcommand("convert", "convert every TRS to a target form");
    std::string conv_in, conv_to, conv_out;
    convert_cmd->add_option("--in", conv_in, "input .unisg file")->required();
    convert_cmd->add_option("--to", conv_to, "target form")->required();
    convert_cmd->add_option("--out", conv_out, "output .unisg file")->required();

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "check invariants and form agreement");
    std::string val_in;
    double val_tol = 1e-9;
    validate_cmd->add_option("--in", val_in, "input .unisg file")->required();
    validate_cmd->add_option("--tolerance", val_tol, "max apply deviation");

    // scene-gen
    auto* gen_cmd = app.add_subcommand("scene-gen", "generate template/cube-stack scenes");
    SceneGenOptions gen_opt;
    gen_cmd->add_option("--template", gen_opt.template_name, "or | living");
    gen_cmd->add_option("--count", gen_opt.count, "number of varied scenes");
    gen_cmd->add_option("--classify-count", gen_opt.classify_count,
                        "size of the 50/50 augmented classification dataset");
    gen_cmd->add_option("--cubes", gen_opt.cubes, "cube-stack scene with ground-truth edges");
    auto* gen_seed = gen_cmd->add_option("--seed", gen_opt.seed, "random seed");
    gen_cmd->add_option("--out", gen_opt.out, "output directory");
    gen_cmd->add_option("--noise-translation", gen_opt.noise_translation,
                        "augmentation translation sigma (fraction of diameter)");
    gen_cmd->add_option("--noise-rotation", gen_opt.noise_rotation_deg,
                        "augmentation rotation limit, degrees");
    gen_cmd->add_option("--noise-mesh", gen_opt.noise_mesh, "mesh feature jitter sigma");

    // export
    auto* export_cmd = app.add_subcommand("export", "flat tables plus GNN tensors");
    std::string exp_in, exp_form = "matrix", exp_out = "out";
    int exp_mesh_width = 64;
    export_cmd->add_option("--in", exp_in, "input .unisg file")->required();
    export_cmd->add_option("--form", exp_form, "TRS representation form");
    export_cmd->add_option("--mesh-width", exp_mesh_width, "mesh feature truncation width");
    export_cmd->add_option("--out", exp_out, "output directory");

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "run classify | generate | linkpred");
    ExperimentOptions eo;
    exp_cmd->add_option("--task", eo.task, "classify | generate | linkpred")->required();
    exp_cmd->add_option("--form", eo.form, "representation form or \"all\"");
    auto* exp_seed = exp_cmd->add_option("--seed", eo.seed, "random seed");
    exp_cmd->add_option("--epochs", eo.epochs, "training epochs (task default when omitted)");
    exp_cmd->add_option("--repeats", eo.repeats, "seeded repeats; emits per-run + mean files");
    exp_cmd->add_option("--count", eo.count, "dataset size (task default when omitted)");
    exp_cmd->add_option("--cubes", eo.cubes, "cube count for linkpred (max 10000)");
    exp_cmd->add_option("--mesh-width", eo.mesh_width, "mesh feature truncation width");
    exp_cmd->add_option("--out", eo.out, "output directory");
    exp_cmd->add_option("--agg", eo.agg, "classifier aggregator: mean | attention");

    app.footer("Every subcommand also accepts --config FILE with `key = value` lines\n"
               "(long flag names without the leading dashes); explicit flags override\n"
               "config values, and UNISG_SEED is the seed fallback.");

    // config-injected values may be overridden by explicit flags
    for (CLI::App* sub : app.get_subcommands({}))
        for (CLI::Option* o : sub->get_options())
            o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    try {
        std::vector<std::string> args = expand_config_args(argc, argv);
        std::reverse(args.begin(), args.end());  // CLI11 consumes in reverse
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitParse;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }

    try {
        if (*convert_cmd) return cmd_convert(conv_in, conv_to, conv_out);
        if (*validate_cmd) return cmd_validate(val_in, val_tol);
        if (*gen_cmd) {
            gen_opt.seed = resolve_seed(gen_seed, gen_opt.seed);
            std::map<std::string, std::string> echo = {
                {"template", gen_opt.template_name},
                {"count", std::to_string(gen_opt.count)},
                {"classify-count", std::to_string(gen_opt.classify_count)},
                {"cubes", std::to_string(gen_opt.cubes)},
                {"seed", std::to_string(gen_opt.seed)},
                {"noise-translation", format_number(gen_opt.noise_translation)},
                {"noise-rotation", format_number(gen_opt.noise_rotation_deg)},
                {"noise-mesh", format_number(gen_opt.noise_mesh)},
            };
            write_config_echo(gen_opt.out, echo);
            return cmd_scene_gen(gen_opt);
        }
        if (*export_cmd) {
            write_config_echo(exp_out, {{"in", exp_in},
                                        {"form", exp_form},
                                        {"mesh-width", std::to_string(exp_mesh_width)}});
            return cmd_export(exp_in, exp_form, exp_mesh_width, exp_out);
        }
        if (*exp_cmd) {
            eo.seed = resolve_seed(exp_seed, eo.seed);
            std::map<std::string, std::string> echo = {
                {"task", eo.task},
                {"form", eo.form},
                {"seed", std::to_string(eo.seed)},
                {"epochs", std::to_string(eo.epochs)},
                {"repeats", std::to_string(eo.repeats)},
                {"count", std::to_string(eo.count)},
                {"cubes", std::to_string(eo.cubes)},
                {"mesh-width", std::to_string(eo.mesh_width)},
                {"agg", eo.agg},
            };
            write_config_echo(eo.out, echo);
            return cmd_experiment(eo);
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const ConversionError& e) {
        std::cerr << "conversion error: " << e.what() << "\n";
        return kExitConversion;
    } catch (const TrainError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return kExitTraining;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
