#pragma once

#include <string>
#include <vector>

#include "unisg/nn/models.hpp"

namespace unisg::nn {

/// One metrics row. Epoch 0 is the untrained baseline (evaluation only);
/// epochs 1..E follow each training epoch. `metric` is accuracy or AUC
/// depending on the task and may be absent.
struct EpochMetric {
    int epoch = 0;
    std::string split;  // "train", "test" or "heldout"
    double loss = 0.0;
    double metric = 0.0;
    bool has_metric = false;
};

/// CSV rows `epoch,split,loss,accuracy_or_auc` (blank metric when absent).
std::string metrics_to_csv(const std::vector<EpochMetric>& metrics);
void write_metrics_csv(const std::string& path, const std::vector<EpochMetric>& metrics);

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

struct ClassifyConfig {
    int epochs = 20;
    double lr = 1e-3;
    double train_ratio = 0.7;
    int hidden = 64;
    Aggregator agg = Aggregator::Mean;
    std::uint64_t seed = 0;
};

struct ClassifyResult {
    SageClassifier model;
    std::vector<EpochMetric> metrics;
    double final_train_accuracy = 0.0;
    double final_test_accuracy = 0.0;
};

/// Seeded shuffled split, one Adam step per training graph per epoch.
/// Throws TrainError when fewer than two classes are present.
ClassifyResult train_classifier(const std::vector<GraphTensors>& dataset,
                                const ClassifyConfig& cfg);

// ---------------------------------------------------------------------------
// Conditional generative model
// ---------------------------------------------------------------------------

struct CgvaeTrainConfig {
    int epochs = 100;
    double lr = 1e-3;
    double beta = 1.0;
    int hidden = 64;
    int z_dim = 32;
    int embed_dim = 16;
    std::uint64_t seed = 0;
};

struct CgvaeResult {
    Cgvae model;
    std::vector<EpochMetric> metrics;  // mean epoch loss on the train split
};

/// All graphs must share the feature width and the category vocabulary.
CgvaeResult train_cgvae(const std::vector<GraphTensors>& graphs, int vocab_size,
                        const CgvaeTrainConfig& cfg);

// ---------------------------------------------------------------------------
// Link prediction
// ---------------------------------------------------------------------------

struct LinkpredConfig {
    int epochs = 100;
    double lr = 1e-2;
    double holdout_fraction = 0.1;
    int hidden = 64;
    int z_dim = 8;          // small latent: wide codes memorize seen pairs
    int batch_pairs = 128;  // training positives per step; negatives matched
    /// Augmentation: every batch adds one random offset vector to all node
    /// features. Pair differences are untouched, so labels stay consistent,
    /// while absolute feature values stop identifying individual pairs.
    double offset_sigma = 2.0;
    std::uint64_t seed = 0;
};

struct EdgeScore {
    int src = 0;
    int dst = 0;
    double score = 0.0;
    bool positive = false;
};

struct LinkpredResult {
    Gae model;
    std::vector<EpochMetric> metrics;
    double final_auc = 0.0;
    std::vector<EdgeScore> heldout_scores;
};

/// Holds out a seeded fraction of the positive edges with matched uniformly
/// sampled negatives. Each epoch is one pass over the remaining positives in
/// pair batches with fresh equal-count negatives per batch, training the
/// adjacency-reconstruction BCE (features are standardized per column
/// first). Reports the mean train BCE and the held-out BCE/AUC per epoch.
/// Throws TrainError when the graph has no positive edge.
LinkpredResult train_linkpred(const GraphTensors& graph, const LinkpredConfig& cfg);

/// Mann-Whitney ROC-AUC with ties counted as half.
double roc_auc(const std::vector<EdgeScore>& scores);

}  // namespace unisg::nn
