#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"
#include "unisg/datasets.hpp"
#include "unisg/nn/train.hpp"

using namespace unisg;
using namespace unisg::nn;

namespace {

std::vector<GraphTensors> classify_tensors(const std::vector<Scene>& scenes, Form form,
                                           CategoryVocab& vocab) {
    ExportOptions opts;
    opts.form = form;
    std::vector<GraphTensors> out;
    out.reserve(scenes.size());
    for (const Scene& s : scenes) out.push_back(export_tensors(s, opts, vocab));
    return out;
}

}  // namespace

TEST_CASE("classifier reaches full accuracy on the two templates") {
    const auto scenes = classification_dataset(40, 7);
    CategoryVocab vocab;
    const auto data = classify_tensors(scenes, Form::PgaMotor, vocab);

    ClassifyConfig cfg;
    cfg.seed = 7;
    const ClassifyResult result = train_classifier(data, cfg);
    CHECK(result.final_train_accuracy == 1.0);
    CHECK(result.final_test_accuracy == 1.0);

    // loss at the final epoch is below the baseline
    double first_loss = -1, last_loss = -1;
    for (const EpochMetric& m : result.metrics) {
        if (m.split != "train") continue;
        if (m.epoch == 0) first_loss = m.loss;
        last_loss = m.loss;
    }
    CHECK(last_loss < first_loss);

    // determinism: same seed, identical metric tables
    const ClassifyResult again = train_classifier(data, cfg);
    CHECK(metrics_to_csv(again.metrics) == metrics_to_csv(result.metrics));

    // single-class dataset rejected
    std::vector<GraphTensors> mono(data.begin(), data.begin() + 3);
    for (GraphTensors& g : mono) g.graph_label = 0;
    CHECK_THROWS_AS(train_classifier(mono, cfg), TrainError);
}

TEST_CASE("classifier works with the attention aggregator") {
    const auto scenes = classification_dataset(16, 3);
    CategoryVocab vocab;
    const auto data = classify_tensors(scenes, Form::Matrix, vocab);
    ClassifyConfig cfg;
    cfg.seed = 3;
    cfg.agg = Aggregator::Attention;
    const ClassifyResult result = train_classifier(data, cfg);
    CHECK(result.final_train_accuracy == 1.0);
}

TEST_CASE("cgvae training halves the loss and stays finite") {
    const auto scenes = gen_or_dataset(24, 11);
    CategoryVocab vocab;
    ExportOptions opts;
    opts.form = Form::CgaMotor;
    std::vector<GraphTensors> graphs;
    for (const Scene& s : scenes) graphs.push_back(export_tensors(s, opts, vocab));

    // pad to a common width: scenes vary structurally but kinds are shared,
    // so F only differs when a scene lacks some kind entirely
    int f = 0;
    for (const auto& g : graphs) f = std::max(f, g.f());
    for (auto& g : graphs) {
        if (g.f() < f) {
            Eigen::MatrixXd x = Eigen::MatrixXd::Zero(g.n(), f);
            x.leftCols(g.f()) = g.X;
            g.X = x;
        }
    }

    CgvaeTrainConfig cfg;
    cfg.seed = 11;
    cfg.epochs = 40;
    const CgvaeResult result = train_cgvae(graphs, vocab.size(), cfg);

    REQUIRE(result.metrics.size() == 41);
    const double first = result.metrics.front().loss;
    const double last = result.metrics.back().loss;
    for (const EpochMetric& m : result.metrics) CHECK(std::isfinite(m.loss));
    CHECK(last < 0.5 * first);

    // conditional sampling: same categories, different seeds, different probs
    const std::vector<int>& cats = graphs.front().categories;
    Rng g1(1), g2(2);
    const GeneratedScene s1 = generate_scene(result.model, cats, g1);
    const GeneratedScene s2 = generate_scene(result.model, cats, g2);
    CHECK(s1.adjacency.rows() == int(cats.size()));
    CHECK((s1.probabilities - s2.probabilities).cwiseAbs().maxCoeff() > 0.0);
    CHECK((s1.adjacency - s1.adjacency.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(s1.adjacency.diagonal().cwiseAbs().maxCoeff() == 0.0);

    // reconstruction of a training scene beats an untrained model
    Rng init_rng(999);
    const Cgvae fresh = Cgvae::init(f, vocab.size(), cfg.hidden, cfg.z_dim, cfg.embed_dim,
                                    init_rng);
    Tape t1, t2;
    Rng n1(5), n2(5);
    const double trained_bce =
        cgvae_forward(t1, result.model, graphs[0], 1.0, n1, false, false).bce.value()(0, 0);
    const double fresh_bce =
        cgvae_forward(t2, fresh, graphs[0], 1.0, n2, false, false).bce.value()(0, 0);
    CHECK(trained_bce < fresh_bce);

    // vocabulary mismatch rejected
    CHECK_THROWS_AS(train_cgvae(graphs, 1, cfg), TrainError);
}

TEST_CASE("link prediction on a cube stack") {
    const CubeStack stack = gen_cube_stack(220, 13);
    CategoryVocab vocab;
    const GraphTensors g =
        relation_tensors(stack.scene, stack.on_top_edges, Form::DualQuat, vocab);
    CHECK(g.n() == 220);
    CHECK(test::max_abs(g.A - g.A.transpose()) == 0.0);

    LinkpredConfig cfg;
    cfg.seed = 13;
    cfg.epochs = 60;
    const LinkpredResult result = train_linkpred(g, cfg);
    CHECK(result.final_auc > 0.9);

    double epoch0 = -1, epoch15 = -1;
    for (const EpochMetric& m : result.metrics) {
        if (m.split != "train") continue;
        if (m.epoch == 0) epoch0 = m.loss;
        if (m.epoch == 15) epoch15 = m.loss;
    }
    CHECK(epoch15 < epoch0);

    // deterministic reruns
    const LinkpredResult again = train_linkpred(g, cfg);
    CHECK(metrics_to_csv(again.metrics) == metrics_to_csv(result.metrics));
    CHECK(again.final_auc == result.final_auc);

    // no positive edges -> error
    GraphTensors empty = g;
    empty.A.setZero();
    CHECK_THROWS_AS(train_linkpred(empty, cfg), TrainError);
}

TEST_CASE("metrics csv layout") {
    std::vector<EpochMetric> ms = {{0, "train", 1.25, 0.5, true}, {1, "train", 0.5, 0, false}};
    CHECK(metrics_to_csv(ms) ==
          "epoch,split,loss,accuracy_or_auc\n0,train,1.25,0.5\n1,train,0.5,\n");
}

TEST_CASE("roc auc on hand scores") {
    std::vector<EdgeScore> scores = {
        {0, 1, 0.9, true}, {0, 2, 0.8, true}, {1, 2, 0.3, false}, {2, 3, 0.1, false}};
    CHECK(roc_auc(scores) == 1.0);
    scores[2].score = 0.95;  // beats both positives: two inversions out of four pairs
    CHECK(roc_auc(scores) == 0.5);
    scores[2].score = 0.9;  // ties one positive, beats the other
    CHECK(roc_auc(scores) == doctest::Approx(0.625));
}
