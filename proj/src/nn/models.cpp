#include "unisg/nn/models.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace unisg::nn {

Matrix mean_neighbor_operator(const Matrix& A) {
    Matrix out = A;
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        const double deg = A.row(r).sum();
        if (deg > 0.0)
            out.row(r) /= deg;
        else
            out.row(r).setZero();
    }
    return out;
}

Tensor sage_conv(const Tensor& X, const Matrix& A, const Tensor& w_self,
                 const Tensor& w_neigh, bool relu_activation) {
    Tape& tape = *X.tape();
    const Tensor agg = matmul(tape.leaf(mean_neighbor_operator(A), false), X);
    const Tensor pre = add(matmul(X, w_self), matmul(agg, w_neigh));
    return relu_activation ? relu(pre) : pre;
}

Tensor sage_conv_attention(const Tensor& X, const Matrix& A, const Tensor& w_self,
                           const Tensor& w_neigh, const Tensor& wq, const Tensor& wk,
                           bool relu_activation) {
    const Tensor q = matmul(X, wq);
    const Tensor k = matmul(X, wk);
    const Tensor scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(double(q.cols())));
    const Tensor weights = masked_row_softmax(scores, A);
    const Tensor agg = matmul(weights, X);
    const Tensor pre = add(matmul(X, w_self), matmul(agg, w_neigh));
    return relu_activation ? relu(pre) : pre;
}

Matrix glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / double(rows + cols));
    return rng.uniform_matrix(rows, cols, -limit, limit);
}

// ---------------------------------------------------------------------------
// SageClassifier
// ---------------------------------------------------------------------------

SageClassifier SageClassifier::init(int in_dim, int hidden, int num_classes, Aggregator agg,
                                    Rng& rng) {
    SageClassifier m;
    m.agg = agg;
    m.w1_self = glorot(in_dim, hidden, rng);
    m.w1_neigh = glorot(in_dim, hidden, rng);
    m.w2_self = glorot(hidden, hidden, rng);
    m.w2_neigh = glorot(hidden, hidden, rng);
    m.w_out = glorot(hidden, num_classes, rng);
    m.b_out = Matrix::Zero(1, num_classes);
    if (agg == Aggregator::Attention) {
        const int attn = 16;
        m.wq1 = glorot(in_dim, attn, rng);
        m.wk1 = glorot(in_dim, attn, rng);
        m.wq2 = glorot(hidden, attn, rng);
        m.wk2 = glorot(hidden, attn, rng);
    }
    return m;
}

std::vector<ParamRef> SageClassifier::params() {
    std::vector<ParamRef> p = {{"w1_self", &w1_self}, {"w1_neigh", &w1_neigh},
                               {"w2_self", &w2_self}, {"w2_neigh", &w2_neigh},
                               {"w_out", &w_out},     {"b_out", &b_out}};
    if (agg == Aggregator::Attention) {
        p.push_back({"wq1", &wq1});
        p.push_back({"wk1", &wk1});
        p.push_back({"wq2", &wq2});
        p.push_back({"wk2", &wk2});
    }
    return p;
}

std::vector<ParamRef> SageClassifier::params() const {
    return const_cast<SageClassifier*>(this)->params();
}

ClassifierForward classifier_forward(Tape& tape, const SageClassifier& model,
                                     const GraphTensors& g, bool train) {
    ClassifierForward fwd;
    for (const ParamRef& p : model.params()) fwd.leaves.push_back(tape.leaf(*p.value, train));
    const Tensor X = tape.leaf(g.X, false);
    Tensor h;
    if (model.agg == Aggregator::Mean) {
        h = sage_conv(X, g.A, fwd.leaves[0], fwd.leaves[1]);
        h = sage_conv(h, g.A, fwd.leaves[2], fwd.leaves[3]);
    } else {
        h = sage_conv_attention(X, g.A, fwd.leaves[0], fwd.leaves[1], fwd.leaves[6],
                                fwd.leaves[7]);
        h = sage_conv_attention(h, g.A, fwd.leaves[2], fwd.leaves[3], fwd.leaves[8],
                                fwd.leaves[9]);
    }
    const Tensor pooled = mean_rows(h);
    fwd.logits = add(matmul(pooled, fwd.leaves[4]), fwd.leaves[5]);
    return fwd;
}

// ---------------------------------------------------------------------------
// CGVAE
// ---------------------------------------------------------------------------

Cgvae Cgvae::init(int f, int categories, int hidden, int z_dim, int embed_dim, Rng& rng) {
    Cgvae m;
    m.f = f;
    m.categories = categories;
    m.hidden = hidden;
    m.z_dim = z_dim;
    m.embed_dim = embed_dim;
    m.embed = 0.1 * rng.normal_matrix(categories, embed_dim);
    m.enc1_self = glorot(f + embed_dim, hidden, rng);
    m.enc1_neigh = glorot(f + embed_dim, hidden, rng);
    m.enc2_self = glorot(hidden, 2 * z_dim, rng);
    m.enc2_neigh = glorot(hidden, 2 * z_dim, rng);
    m.fdec_w1 = glorot(z_dim + embed_dim, hidden, rng);
    m.fdec_b1 = Matrix::Zero(1, hidden);
    m.fdec_w2 = glorot(hidden, f, rng);
    m.fdec_b2 = Matrix::Zero(1, f);
    m.adec_w1 = glorot(z_dim + embed_dim, hidden, rng);
    m.adec_b1 = Matrix::Zero(1, hidden);
    m.adec_w2 = glorot(hidden, z_dim, rng);
    m.adec_b2 = Matrix::Zero(1, z_dim);
    return m;
}

std::vector<ParamRef> Cgvae::params() {
    return {{"embed", &embed},
            {"enc1_self", &enc1_self}, {"enc1_neigh", &enc1_neigh},
            {"enc2_self", &enc2_self}, {"enc2_neigh", &enc2_neigh},
            {"fdec_w1", &fdec_w1},     {"fdec_b1", &fdec_b1},
            {"fdec_w2", &fdec_w2},     {"fdec_b2", &fdec_b2},
            {"adec_w1", &adec_w1},     {"adec_b1", &adec_b1},
            {"adec_w2", &adec_w2},     {"adec_b2", &adec_b2}};
}

std::vector<ParamRef> Cgvae::params() const { return const_cast<Cgvae*>(this)->params(); }

namespace {

Matrix strip_diagonal_weights(Eigen::Index n) {
    Matrix w = Matrix::Ones(n, n);
    w.diagonal().setZero();
    return w;
}

Tensor mlp2(const Tensor& in, const Tensor& w1, const Tensor& b1, const Tensor& w2,
            const Tensor& b2) {
    return add(matmul(relu(add(matmul(in, w1), b1)), w2), b2);
}

}  // namespace

CgvaeForward cgvae_forward(Tape& tape, const Cgvae& model, const GraphTensors& g, double beta,
                           Rng& rng, bool train, bool sample) {
    if (g.f() != model.f)
        throw TrainError("cgvae: graph feature width " + std::to_string(g.f()) +
                         " does not match model width " + std::to_string(model.f));
    for (int c : g.categories)
        if (c < 0 || c >= model.categories)
            throw TrainError("cgvae: category id out of vocabulary");

    CgvaeForward fwd;
    for (const ParamRef& p : model.params()) fwd.leaves.push_back(tape.leaf(*p.value, train));
    const Tensor& embed = fwd.leaves[0];

    const Tensor X = tape.leaf(g.X, false);
    const Tensor cat = lookup_rows(embed, g.categories);  // N x E
    const Tensor xin = concat_cols(X, cat);               // N x (F+E)

    const Tensor h = sage_conv(xin, g.A, fwd.leaves[1], fwd.leaves[2]);
    const Tensor stats = sage_conv(h, g.A, fwd.leaves[3], fwd.leaves[4], false);  // N x 2Z

    // split mu | logvar
    const Eigen::Index n = stats.rows();
    Matrix pick_mu = Matrix::Zero(2 * model.z_dim, model.z_dim);
    Matrix pick_lv = Matrix::Zero(2 * model.z_dim, model.z_dim);
    for (int i = 0; i < model.z_dim; ++i) {
        pick_mu(i, i) = 1.0;
        pick_lv(model.z_dim + i, i) = 1.0;
    }
    fwd.mu = matmul(stats, tape.leaf(pick_mu, false));
    fwd.logvar = matmul(stats, tape.leaf(pick_lv, false));

    fwd.z = sample ? reparameterize(tape, fwd.mu, fwd.logvar, rng) : fwd.mu;
    const Tensor zhat = concat_cols(fwd.z, cat);  // N x (Z+E)

    fwd.xhat = mlp2(zhat, fwd.leaves[5], fwd.leaves[6], fwd.leaves[7], fwd.leaves[8]);
    const Tensor codes = mlp2(zhat, fwd.leaves[9], fwd.leaves[10], fwd.leaves[11], fwd.leaves[12]);
    fwd.aprob = sigmoid(matmul(codes, transpose(codes)));

    const Tensor target_x = tape.leaf(g.X, false);
    const Tensor target_a = tape.leaf(g.A, false);
    fwd.mse = mse_loss(fwd.xhat, target_x);
    fwd.bce = bce_loss_weighted(fwd.aprob, target_a, strip_diagonal_weights(n));
    fwd.kl = kl_loss(fwd.mu, clamp(fwd.logvar, -20.0, 20.0));
    fwd.loss = add(add(fwd.mse, fwd.bce), scale(fwd.kl, beta));
    return fwd;
}

GeneratedScene generate_scene(const Cgvae& model, const std::vector<int>& category_ids,
                              Rng& rng) {
    GeneratedScene out;
    const int n = static_cast<int>(category_ids.size());
    if (n == 0) {
        out.node_features = Matrix(0, model.f);
        out.adjacency = Matrix(0, 0);
        out.probabilities = Matrix(0, 0);
        return out;
    }
    for (int c : category_ids)
        if (c < 0 || c >= model.categories) throw Error("generate_scene: unknown category id");

    Tape tape;
    std::vector<Tensor> leaves;
    for (const ParamRef& p : model.params()) leaves.push_back(tape.leaf(*p.value, false));
    const Tensor z = tape.leaf(rng.normal_matrix(n, model.z_dim), false);
    const Tensor cat = lookup_rows(leaves[0], category_ids);
    const Tensor zhat = concat_cols(z, cat);
    const Tensor xhat = mlp2(zhat, leaves[5], leaves[6], leaves[7], leaves[8]);
    const Tensor codes = mlp2(zhat, leaves[9], leaves[10], leaves[11], leaves[12]);
    const Tensor aprob = sigmoid(matmul(codes, transpose(codes)));

    out.node_features = xhat.value();
    out.probabilities = aprob.value();
    out.adjacency = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && (out.probabilities(i, j) > 0.5 || out.probabilities(j, i) > 0.5))
                out.adjacency(i, j) = 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// GAE
// ---------------------------------------------------------------------------

Gae Gae::init(int f, int hidden, int z_dim, Rng& rng) {
    Gae m;
    m.f = f;
    m.hidden = hidden;
    m.z_dim = z_dim;
    m.enc1_self = glorot(f, hidden, rng);
    m.enc1_neigh = glorot(f, hidden, rng);
    m.enc2_self = glorot(hidden, z_dim, rng);
    m.enc2_neigh = glorot(hidden, z_dim, rng);
    // codes are [conv output | raw features] (skip connection)
    m.adec_w1 = glorot(2 * (z_dim + f), hidden, rng);
    m.adec_b1 = Matrix::Zero(1, hidden);
    m.adec_w2 = glorot(hidden, 1, rng);
    m.adec_b2 = Matrix::Zero(1, 1);
    return m;
}

std::vector<ParamRef> Gae::params() {
    return {{"enc1_self", &enc1_self}, {"enc1_neigh", &enc1_neigh},
            {"enc2_self", &enc2_self}, {"enc2_neigh", &enc2_neigh},
            {"adec_w1", &adec_w1},     {"adec_b1", &adec_b1},
            {"adec_w2", &adec_w2},     {"adec_b2", &adec_b2}};
}

std::vector<ParamRef> Gae::params() const { return const_cast<Gae*>(this)->params(); }

GaeForward gae_encode(Tape& tape, const Gae& model, const Matrix& X, const Matrix& a_obs,
                      bool train) {
    if (X.cols() != model.f)
        throw TrainError("gae: feature width " + std::to_string(X.cols()) +
                         " does not match model width " + std::to_string(model.f));
    GaeForward fwd;
    for (const ParamRef& p : model.params()) fwd.leaves.push_back(tape.leaf(*p.value, train));
    const Tensor x = tape.leaf(X, false);
    const Tensor h = sage_conv(x, a_obs, fwd.leaves[0], fwd.leaves[1]);
    const Tensor z = sage_conv(h, a_obs, fwd.leaves[2], fwd.leaves[3], false);
    fwd.codes = concat_cols(z, x);
    return fwd;
}

Tensor gae_pair_probs(const GaeForward& fwd, const std::vector<int>& src,
                      const std::vector<int>& dst) {
    if (src.size() != dst.size()) throw Error("gae_pair_probs: src/dst length mismatch");
    const Tensor u = lookup_rows(fwd.codes, src);
    const Tensor v = lookup_rows(fwd.codes, dst);
    const Tensor diff = add(u, scale(v, -1.0));
    const Tensor absdiff = add(relu(diff), relu(scale(diff, -1.0)));
    const Tensor pair = concat_cols(mul(u, v), absdiff);
    const Tensor logits =
        mlp2(pair, fwd.leaves[4], fwd.leaves[5], fwd.leaves[6], fwd.leaves[7]);
    return sigmoid(logits);
}

Matrix gae_dense_probs(const Gae& model, const Matrix& X, const Matrix& a_obs) {
    Tape tape;
    const GaeForward fwd = gae_encode(tape, model, X, a_obs, false);
    const int n = static_cast<int>(X.rows());
    std::vector<int> src, dst;
    src.reserve(std::size_t(n) * n);
    dst.reserve(std::size_t(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            src.push_back(i);
            dst.push_back(j);
        }
    const Matrix probs = gae_pair_probs(fwd, src, dst).value();
    Matrix out(n, n);
    for (int i = 0; i < n; ++i)
        out.row(i) = probs.col(0).segment(Eigen::Index(i) * n, n).transpose();
    return out;
}

// ---------------------------------------------------------------------------
// Adam and checkpoints
// ---------------------------------------------------------------------------

void adam_step(const std::vector<ParamRef>& params, const std::vector<Matrix>& grads,
               AdamState& state, const AdamConfig& cfg) {
    if (params.size() != grads.size()) throw TrainError("adam_step: params/grads mismatch");
    if (state.m.empty()) {
        for (const ParamRef& p : params) {
            state.m.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
            state.v.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
        }
    }
    if (state.m.size() != params.size()) throw TrainError("adam_step: state size mismatch");
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Matrix& g = grads[i];
        if (!g.allFinite())
            throw TrainError("adam_step: non-finite gradient in parameter \"" +
                             params[i].name + "\" at step " + std::to_string(state.t));
        if (g.rows() != params[i].value->rows() || g.cols() != params[i].value->cols())
            throw TrainError("adam_step: gradient shape mismatch for \"" + params[i].name +
                             "\"");
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        const Matrix mhat = state.m[i] / bc1;
        const Matrix vhat = state.v[i] / bc2;
        params[i].value->array() -=
            cfg.lr * mhat.array() / (vhat.array().sqrt() + cfg.eps);
    }
}

namespace {

constexpr char kMagic[4] = {'U', 'N', 'S', 'G'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);  // little-endian host
    out.write(b, 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    char b[4];
    in.read(b, 4);
    std::uint32_t v;
    std::memcpy(&v, b, 4);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<ParamRef>& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint \"" + path + "\"");
    out.write(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const ParamRef& p : params) {
        put_u32(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put_u32(out, static_cast<std::uint32_t>(p.value->rows()));
        put_u32(out, static_cast<std::uint32_t>(p.value->cols()));
        for (Eigen::Index r = 0; r < p.value->rows(); ++r)
            for (Eigen::Index c = 0; c < p.value->cols(); ++c) {
                const double v = (*p.value)(r, c);
                out.write(reinterpret_cast<const char*>(&v), 8);
            }
    }
    if (!out) throw Error("short write on checkpoint \"" + path + "\"");
}

void load_checkpoint(const std::string& path, const std::vector<ParamRef>& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint \"" + path + "\"");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw Error("bad checkpoint magic in \"" + path + "\"");
    if (get_u32(in) != kCheckpointVersion) throw Error("unsupported checkpoint version");
    const std::uint32_t count = get_u32(in);
    std::map<std::string, Matrix> tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint32_t rows = get_u32(in);
        const std::uint32_t cols = get_u32(in);
        Matrix m(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < cols; ++c) {
                double v;
                in.read(reinterpret_cast<char*>(&v), 8);
                m(r, c) = v;
            }
        if (!in) throw Error("truncated checkpoint \"" + path + "\"");
        tensors.emplace(std::move(name), std::move(m));
    }
    for (const ParamRef& p : params) {
        const auto it = tensors.find(p.name);
        if (it == tensors.end())
            throw Error("checkpoint is missing tensor \"" + p.name + "\"");
        if (it->second.rows() != p.value->rows() || it->second.cols() != p.value->cols())
            throw Error("checkpoint tensor \"" + p.name + "\" has wrong shape");
        *p.value = it->second;
    }
}

}  // namespace unisg::nn
