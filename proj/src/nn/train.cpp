#include "unisg/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "unisg/scene_io.hpp"

namespace unisg::nn {

std::string metrics_to_csv(const std::vector<EpochMetric>& metrics) {
    std::string out = "epoch,split,loss,accuracy_or_auc\n";
    for (const EpochMetric& m : metrics) {
        out += std::to_string(m.epoch) + "," + m.split + "," + format_number(m.loss) + ",";
        if (m.has_metric) out += format_number(m.metric);
        out += "\n";
    }
    return out;
}

void write_metrics_csv(const std::string& path, const std::vector<EpochMetric>& metrics) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write metrics file \"" + path + "\"");
    out << metrics_to_csv(metrics);
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

namespace {

int argmax_row(const Matrix& row) {
    int best = 0;
    for (Eigen::Index c = 1; c < row.cols(); ++c)
        if (row(0, c) > row(0, best)) best = static_cast<int>(c);
    return best;
}

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

EvalResult evaluate_classifier(const SageClassifier& model,
                               const std::vector<GraphTensors>& data,
                               const std::vector<int>& indices) {
    EvalResult res;
    if (indices.empty()) return res;
    int correct = 0;
    for (int i : indices) {
        Tape tape;
        const ClassifierForward fwd = classifier_forward(tape, model, data[i], false);
        res.loss += cross_entropy_loss(fwd.logits, {data[i].graph_label}).value()(0, 0);
        if (argmax_row(fwd.logits.value()) == data[i].graph_label) ++correct;
    }
    res.loss /= double(indices.size());
    res.accuracy = double(correct) / double(indices.size());
    return res;
}

}  // namespace

ClassifyResult train_classifier(const std::vector<GraphTensors>& dataset,
                                const ClassifyConfig& cfg) {
    if (dataset.empty()) throw TrainError("train_classifier: empty dataset");
    std::set<int> classes;
    for (const GraphTensors& g : dataset) {
        if (g.graph_label < 0) throw TrainError("train_classifier: graph without label");
        if (g.f() != dataset.front().f())
            throw TrainError("train_classifier: graphs disagree on feature width");
        classes.insert(g.graph_label);
    }
    if (classes.size() < 2) throw TrainError("train_classifier: single-class dataset");
    const int num_classes = *classes.rbegin() + 1;

    Rng rng(cfg.seed);
    std::vector<int> order = rng.permutation(static_cast<int>(dataset.size()));
    const int train_n =
        std::clamp(static_cast<int>(std::lround(cfg.train_ratio * double(dataset.size()))), 1,
                   static_cast<int>(dataset.size()) - 1);
    std::vector<int> train_idx(order.begin(), order.begin() + train_n);
    std::vector<int> test_idx(order.begin() + train_n, order.end());

    ClassifyResult result;
    result.model = SageClassifier::init(dataset.front().f(), cfg.hidden, num_classes, cfg.agg,
                                        rng);
    AdamState adam;
    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.lr;

    const auto record = [&](int epoch, double train_loss) {
        const EvalResult train_eval = evaluate_classifier(result.model, dataset, train_idx);
        const EvalResult test_eval = evaluate_classifier(result.model, dataset, test_idx);
        result.metrics.push_back({epoch, "train", epoch == 0 ? train_eval.loss : train_loss,
                                  train_eval.accuracy, true});
        result.metrics.push_back({epoch, "test", test_eval.loss, test_eval.accuracy, true});
        result.final_train_accuracy = train_eval.accuracy;
        result.final_test_accuracy = test_eval.accuracy;
    };

    record(0, 0.0);
    const std::vector<ParamRef> params = result.model.params();
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(train_idx);
        double loss_sum = 0.0;
        for (int i : train_idx) {
            Tape tape;
            const ClassifierForward fwd = classifier_forward(tape, result.model, dataset[i], true);
            const Tensor loss = cross_entropy_loss(fwd.logits, {dataset[i].graph_label});
            loss_sum += loss.value()(0, 0);
            tape.backward(loss);
            std::vector<Matrix> grads;
            grads.reserve(params.size());
            for (const Tensor& leaf : fwd.leaves) grads.push_back(leaf.grad());
            adam_step(params, grads, adam, adam_cfg);
        }
        record(epoch, loss_sum / double(train_idx.size()));
    }
    return result;
}

// ---------------------------------------------------------------------------
// CGVAE
// ---------------------------------------------------------------------------

CgvaeResult train_cgvae(const std::vector<GraphTensors>& graphs, int vocab_size,
                        const CgvaeTrainConfig& cfg) {
    if (graphs.empty()) throw TrainError("train_cgvae: empty dataset");
    const int f = graphs.front().f();
    for (const GraphTensors& g : graphs) {
        if (g.f() != f) throw TrainError("train_cgvae: graphs disagree on feature width");
        for (int c : g.categories)
            if (c < 0 || c >= vocab_size)
                throw TrainError("train_cgvae: category vocabulary mismatch");
    }

    Rng rng(cfg.seed);
    CgvaeResult result;
    result.model = Cgvae::init(f, vocab_size, cfg.hidden, cfg.z_dim, cfg.embed_dim, rng);
    AdamState adam;
    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.lr;
    const std::vector<ParamRef> params = result.model.params();

    std::vector<int> order(graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
        if (epoch > 0) rng.shuffle(order);
        double loss_sum = 0.0;
        for (int i : order) {
            Tape tape;
            const CgvaeForward fwd =
                cgvae_forward(tape, result.model, graphs[i], cfg.beta, rng, epoch > 0);
            const double loss_v = fwd.loss.value()(0, 0);
            if (!std::isfinite(loss_v))
                throw TrainError("train_cgvae: non-finite loss at epoch " +
                                 std::to_string(epoch));
            loss_sum += loss_v;
            if (epoch == 0) continue;  // baseline evaluation only
            tape.backward(fwd.loss);
            std::vector<Matrix> grads;
            grads.reserve(params.size());
            for (const Tensor& leaf : fwd.leaves) grads.push_back(leaf.grad());
            adam_step(params, grads, adam, adam_cfg);
        }
        result.metrics.push_back({epoch, "train", loss_sum / double(graphs.size()), 0.0, false});
    }
    return result;
}

// ---------------------------------------------------------------------------
// Link prediction
// ---------------------------------------------------------------------------

double roc_auc(const std::vector<EdgeScore>& scores) {
    double pos = 0.0, neg = 0.0, u = 0.0;
    for (const EdgeScore& a : scores) (a.positive ? pos : neg) += 1.0;
    if (pos == 0.0 || neg == 0.0) throw TrainError("roc_auc: need both classes");
    for (const EdgeScore& p : scores) {
        if (!p.positive) continue;
        for (const EdgeScore& n : scores) {
            if (n.positive) continue;
            if (p.score > n.score)
                u += 1.0;
            else if (p.score == n.score)
                u += 0.5;
        }
    }
    return u / (pos * neg);
}

namespace {

Matrix standardize_columns(const Matrix& x) {
    Matrix out = x;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double mean = x.col(c).mean();
        const double var = (x.col(c).array() - mean).square().sum() / double(x.rows());
        const double sd = std::sqrt(var);
        if (sd > 1e-12)
            out.col(c) = (x.col(c).array() - mean) / sd;
        else
            out.col(c).setZero();
    }
    return out;
}

std::pair<int, int> sample_non_edge(Rng& rng, int n, const Matrix& a,
                                    std::set<std::pair<int, int>>& taken) {
    while (true) {
        int i = rng.uniform_int(0, n - 1);
        int j = rng.uniform_int(0, n - 1);
        if (i == j) continue;
        if (i > j) std::swap(i, j);
        if (a(i, j) != 0.0) continue;
        if (!taken.insert({i, j}).second) continue;
        return {i, j};
    }
}

}  // namespace

LinkpredResult train_linkpred(const GraphTensors& graph, const LinkpredConfig& cfg) {
    const int n = graph.n();
    std::vector<std::pair<int, int>> positives;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (graph.A(i, j) != 0.0) positives.emplace_back(i, j);
    if (positives.empty()) throw TrainError("train_linkpred: no positive edges");

    Rng rng(cfg.seed);
    rng.shuffle(positives);
    const int heldout_n = std::max(
        1, static_cast<int>(std::lround(cfg.holdout_fraction * double(positives.size()))));
    if (heldout_n >= static_cast<int>(positives.size()))
        throw TrainError("train_linkpred: holdout would consume every edge");
    const std::vector<std::pair<int, int>> eval_pos(positives.begin(),
                                                    positives.begin() + heldout_n);
    const std::vector<std::pair<int, int>> train_pos(positives.begin() + heldout_n,
                                                     positives.end());

    // observed graph: training positives only
    Matrix a_obs = Matrix::Zero(n, n);
    for (const auto& [i, j] : train_pos) {
        a_obs(i, j) = 1.0;
        a_obs(j, i) = 1.0;
    }

    // negatives: matched count for evaluation, plus a fixed set for the
    // baseline loss row; all distinct, never colliding with a true edge
    std::set<std::pair<int, int>> eval_taken;
    std::vector<std::pair<int, int>> eval_neg;
    for (int k = 0; k < heldout_n; ++k)
        eval_neg.push_back(sample_non_edge(rng, n, graph.A, eval_taken));
    std::set<std::pair<int, int>> baseline_taken = eval_taken;
    std::vector<std::pair<int, int>> train_neg_fixed;
    for (std::size_t k = 0; k < train_pos.size(); ++k)
        train_neg_fixed.push_back(sample_non_edge(rng, n, graph.A, baseline_taken));

    const Matrix x = standardize_columns(graph.X);

    LinkpredResult result;
    result.model = Gae::init(static_cast<int>(x.cols()), cfg.hidden, cfg.z_dim, rng);
    AdamState adam;
    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.lr;
    const std::vector<ParamRef> params = result.model.params();

    const auto pair_loss = [&](const GaeForward& fwd,
                               const std::vector<std::pair<int, int>>& pos,
                               const std::vector<std::pair<int, int>>& neg) {
        std::vector<int> src, dst;
        Matrix labels(static_cast<Eigen::Index>(pos.size() + neg.size()), 1);
        Eigen::Index row = 0;
        for (const auto& [i, j] : pos) {
            src.push_back(i);
            dst.push_back(j);
            labels(row++, 0) = 1.0;
        }
        for (const auto& [i, j] : neg) {
            src.push_back(i);
            dst.push_back(j);
            labels(row++, 0) = 0.0;
        }
        const Tensor probs = gae_pair_probs(fwd, src, dst);
        return bce_loss(probs, fwd.codes.tape()->leaf(labels, false));
    };

    // held-out evaluation: pair scores of the current model, no gradients
    const auto evaluate = [&](int epoch, double train_loss) {
        Tape tape;
        const GaeForward fwd = gae_encode(tape, result.model, x, a_obs, false);
        const double eval_bce = pair_loss(fwd, eval_pos, eval_neg).value()(0, 0);
        std::vector<int> src, dst;
        for (const auto& [i, j] : eval_pos) {
            src.push_back(i);
            dst.push_back(j);
        }
        for (const auto& [i, j] : eval_neg) {
            src.push_back(i);
            dst.push_back(j);
        }
        const Matrix probs = gae_pair_probs(fwd, src, dst).value();
        result.heldout_scores.clear();
        for (std::size_t k = 0; k < src.size(); ++k)
            result.heldout_scores.push_back(
                {src[k], dst[k], probs(static_cast<Eigen::Index>(k), 0),
                 k < eval_pos.size()});
        result.final_auc = roc_auc(result.heldout_scores);
        if (epoch == 0) {
            // baseline training loss of the untrained model
            Tape t0;
            const GaeForward f0 = gae_encode(t0, result.model, x, a_obs, false);
            train_loss = pair_loss(f0, train_pos, train_neg_fixed).value()(0, 0);
        }
        result.metrics.push_back({epoch, "train", train_loss, 0.0, false});
        result.metrics.push_back({epoch, "heldout", eval_bce, result.final_auc, true});
    };

    evaluate(0, 0.0);
    std::vector<std::pair<int, int>> order = train_pos;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        // one pass over the training positives in pair batches; negatives are
        // resampled uniformly (equal count) every batch
        rng.shuffle(order);
        double loss_sum = 0.0;
        int steps = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_pairs) {
            const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_pairs));
            const std::vector<std::pair<int, int>> batch_pos(order.begin() + start,
                                                             order.begin() + end);
            std::set<std::pair<int, int>> batch_taken = eval_taken;
            std::vector<std::pair<int, int>> batch_neg;
            for (std::size_t k = 0; k < batch_pos.size(); ++k)
                batch_neg.push_back(sample_non_edge(rng, n, graph.A, batch_taken));

            // global-offset augmentation: shifts every node identically
            Matrix xb = x;
            if (cfg.offset_sigma > 0) {
                Eigen::RowVectorXd offset(x.cols());
                for (Eigen::Index c = 0; c < x.cols(); ++c)
                    offset[c] = rng.normal(0, cfg.offset_sigma);
                xb.rowwise() += offset;
            }

            Tape tape;
            const GaeForward fwd = gae_encode(tape, result.model, xb, a_obs, true);
            const Tensor loss = pair_loss(fwd, batch_pos, batch_neg);
            const double loss_v = loss.value()(0, 0);
            if (!std::isfinite(loss_v))
                throw TrainError("train_linkpred: non-finite loss at epoch " +
                                 std::to_string(epoch));
            loss_sum += loss_v;
            ++steps;
            tape.backward(loss);
            std::vector<Matrix> grads;
            grads.reserve(params.size());
            for (const Tensor& leaf : fwd.leaves) grads.push_back(leaf.grad());
            adam_step(params, grads, adam, adam_cfg);
        }
        evaluate(epoch, loss_sum / double(steps));
    }
    return result;
}

}  // namespace unisg::nn
