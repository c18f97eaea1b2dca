#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "unisg/errors.hpp"
#include "unisg/rng.hpp"

namespace unisg::nn {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Lightweight handle into a tape node. Values are dense rank<=2 matrices
/// (row or column vectors are 1xN / Nx1, scalars 1x1).
class Tensor {
public:
    Tensor() = default;
    bool defined() const { return tape_ != nullptr; }
    const Matrix& value() const;
    /// Gradient accumulated by the last backward() pass.
    const Matrix& grad() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    Tape* tape() const { return tape_; }
    int id() const { return id_; }

private:
    friend class Tape;
    Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    int id_ = -1;
};

/// Append-only reverse-mode tape. A fresh tape is built per training step;
/// parameters enter as leaves and their gradients are read back after
/// backward(). Never shared across threads.
class Tape {
public:
    Tensor leaf(Matrix value, bool requires_grad = false);

    /// Seeds d(loss)/d(loss) = 1 and pulls gradients back through every
    /// recorded op. `loss` must be 1x1.
    void backward(const Tensor& loss);

    std::size_t size() const { return nodes_.size(); }

    // --- internal (used by the op implementations) ---
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        std::function<void(Tape&)> pull;  // empty for leaves
    };
    Tensor emit(Matrix value, bool requires_grad, std::function<void(Tape&)> pull);
    Node& node(int id) { return nodes_[id]; }
    const Node& node(int id) const { return nodes_[id]; }

private:
    std::vector<Node> nodes_;
};

// Ops. Shape mismatches throw Error naming the op and shapes.
Tensor matmul(const Tensor& a, const Tensor& b);
/// Same-shape addition, or broadcast of a 1xC row across a's rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);                  // gradient at exactly 0 is 0
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor softmax(const Tensor& a);               // row-wise
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor mean_rows(const Tensor& a);             // N x C -> 1 x C
Tensor lookup_rows(const Tensor& table, const std::vector<int>& ids);
Tensor transpose(const Tensor& a);
/// Row-wise softmax over entries where mask != 0; fully masked rows yield
/// zero rows. The mask is a constant.
Tensor masked_row_softmax(const Tensor& scores, const Matrix& mask);

// Losses (1x1 results).
Tensor mse_loss(const Tensor& pred, const Tensor& target);
/// Mean binary cross entropy; predictions clamped to [1e-7, 1-1e-7].
Tensor bce_loss(const Tensor& pred, const Tensor& target);
/// Weighted BCE: sum(w * bce) / sum(w). Zero weights drop entries.
Tensor bce_loss_weighted(const Tensor& pred, const Tensor& target, const Matrix& weights);
/// -0.5 mean(1 + logvar - mu^2 - exp(logvar)) against a unit Gaussian.
Tensor kl_loss(const Tensor& mu, const Tensor& logvar);
/// Mean cross entropy of row-wise softmax(logits) against integer labels.
Tensor cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels);

/// Z = mu + exp(0.5 * clamp(logvar, -20, 20)) .* eps, eps ~ N(0,1) from the
/// generator. Gradients flow through mu and logvar only.
Tensor reparameterize(Tape& tape, const Tensor& mu, const Tensor& logvar, Rng& rng);

}  // namespace unisg::nn
