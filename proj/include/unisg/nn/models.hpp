#pragma once

#include <string>
#include <vector>

#include "unisg/graph_export.hpp"
#include "unisg/nn/tape.hpp"

namespace unisg::nn {

/// Row-normalized neighbor averaging operator D^-1 A; isolated nodes get a
/// zero row, so an empty neighborhood contributes a zero vector.
Matrix mean_neighbor_operator(const Matrix& A);

/// GraphSAGE convolution H = relu(X W_self + meanNeighbors(X, A) W_neigh).
/// The final layer of an encoder passes relu_activation = false.
Tensor sage_conv(const Tensor& X, const Matrix& A, const Tensor& w_self,
                 const Tensor& w_neigh, bool relu_activation = true);

/// Same layer with a single-head dot-product attention aggregator instead of
/// the neighbor mean: weights = softmax over neighbors of (X Wq)(X Wk)^T / sqrt(d).
Tensor sage_conv_attention(const Tensor& X, const Matrix& A, const Tensor& w_self,
                           const Tensor& w_neigh, const Tensor& wq, const Tensor& wk,
                           bool relu_activation = true);

enum class Aggregator { Mean, Attention };

struct ParamRef {
    std::string name;
    Matrix* value;
};

/// Xavier-uniform initialization.
Matrix glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng);

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

/// Two GraphSAGE layers, global mean pooling, linear classifier head.
struct SageClassifier {
    Aggregator agg = Aggregator::Mean;
    Matrix w1_self, w1_neigh, w2_self, w2_neigh;
    Matrix w_out, b_out;
    Matrix wq1, wk1, wq2, wk2;  // attention aggregator only

    static SageClassifier init(int in_dim, int hidden, int num_classes, Aggregator agg,
                               Rng& rng);
    std::vector<ParamRef> params();
    std::vector<ParamRef> params() const;
};

struct ClassifierForward {
    Tensor logits;                // 1 x C
    std::vector<Tensor> leaves;   // aligned with params()
};

ClassifierForward classifier_forward(Tape& tape, const SageClassifier& model,
                                     const GraphTensors& g, bool train);

/// Conditional graph VAE: graph-conv encoder over concat(X, embed(categories))
/// to per-node (mu, logvar); decoder MLPs over concat(Z, embed(categories))
/// reconstruct node features (MSE) and adjacency (BCE, sigmoid of pairwise
/// inner products of decoded node codes).
struct Cgvae {
    int f = 0;           // node feature width
    int categories = 0;  // vocabulary size
    int hidden = 64;
    int z_dim = 32;
    int embed_dim = 16;

    Matrix embed;                    // C x E, learned
    Matrix enc1_self, enc1_neigh;    // (F+E) x H
    Matrix enc2_self, enc2_neigh;    // H x 2Z -> split mu | logvar
    Matrix fdec_w1, fdec_b1, fdec_w2, fdec_b2;  // (Z+E) -> H -> F
    Matrix adec_w1, adec_b1, adec_w2, adec_b2;  // (Z+E) -> H -> Z

    static Cgvae init(int f, int categories, int hidden, int z_dim, int embed_dim, Rng& rng);
    std::vector<ParamRef> params();
    std::vector<ParamRef> params() const;
};

struct CgvaeForward {
    Tensor mu, logvar, z;
    Tensor xhat;    // N x F
    Tensor aprob;   // N x N adjacency probabilities
    Tensor mse, bce, kl, loss;
    std::vector<Tensor> leaves;
};

/// `beta` weighs the KL term; the adjacency BCE ignores the diagonal.
/// When `sample` is false the latent is mu (used for reconstruction checks).
CgvaeForward cgvae_forward(Tape& tape, const Cgvae& model, const GraphTensors& g, double beta,
                           Rng& rng, bool train, bool sample = true);

struct GeneratedScene {
    Matrix node_features;    // N x F
    Matrix adjacency;        // N x N, {0,1}, symmetric (OR), zero diagonal
    Matrix probabilities;    // N x N decoder output
};

/// Conditional sampling: Z ~ N(0,1) per requested node, decode under the
/// given category ids, threshold the adjacency at 0.5.
GeneratedScene generate_scene(const Cgvae& model, const std::vector<int>& category_ids,
                              Rng& rng);

/// The CGVAE reduced to a deterministic encoder and the adjacency decoder
/// only. The decoder here is the documented swap point: instead of inner
/// products it scores each pair through a symmetric MLP over
/// [u .* v, |u - v|], which ranks pairs whose endpoints lost every observed
/// edge (inner products of per-node codes cannot). Node codes carry a skip
/// connection [conv output | raw features] so pair differences stay exact
/// for isolated nodes.
struct Gae {
    int f = 0;
    int hidden = 64;
    int z_dim = 32;

    Matrix enc1_self, enc1_neigh;               // F x H
    Matrix enc2_self, enc2_neigh;               // H x Z
    Matrix adec_w1, adec_b1, adec_w2, adec_b2;  // 2(Z+F) -> H -> 1

    static Gae init(int f, int hidden, int z_dim, Rng& rng);
    std::vector<ParamRef> params();
    std::vector<ParamRef> params() const;
};

struct GaeForward {
    Tensor codes;   // N x Z
    std::vector<Tensor> leaves;
};

/// Encoder pass; pair probabilities are materialized on demand.
GaeForward gae_encode(Tape& tape, const Gae& model, const Matrix& X, const Matrix& a_obs,
                      bool train);

/// Probabilities (K x 1, in (0,1)) for an explicit pair list.
Tensor gae_pair_probs(const GaeForward& fwd, const std::vector<int>& src,
                      const std::vector<int>& dst);

/// Full N x N probability matrix (symmetric, unit-free diagonal left at the
/// pair score); convenience for small graphs and invariants.
Matrix gae_dense_probs(const Gae& model, const Matrix& X, const Matrix& a_obs);

// ---------------------------------------------------------------------------
// Optimizer and checkpoints
// ---------------------------------------------------------------------------

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Matrix> m, v;
    long t = 0;
};

/// Standard Adam with bias correction. Throws TrainError on non-finite
/// gradients, naming the parameter.
void adam_step(const std::vector<ParamRef>& params, const std::vector<Matrix>& grads,
               AdamState& state, const AdamConfig& cfg);

/// Flat binary checkpoint: magic "UNSG", u32 version, u32 tensor count, then
/// per tensor u32 name length, name bytes, u32 rows, u32 cols and row-major
/// 64-bit little-endian values.
void save_checkpoint(const std::string& path, const std::vector<ParamRef>& params);
/// Loads by name into the given parameters; missing names or shape
/// mismatches throw.
void load_checkpoint(const std::string& path, const std::vector<ParamRef>& params);

}  // namespace unisg::nn
