#include "unisg/nn/tape.hpp"

#include <cmath>
#include <string>

namespace unisg::nn {

namespace {

constexpr double kBceEps = 1e-7;
constexpr double kLogvarClamp = 20.0;

std::string shape_of(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
    throw Error(std::string(op) + ": shape mismatch (" + shape_of(a) + " vs " + shape_of(b) +
                ")");
}

Tape& same_tape(const Tensor& a, const char* op) {
    if (!a.defined()) throw Error(std::string(op) + ": undefined tensor");
    return *a.tape();
}

Tape& same_tape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.defined() || !b.defined()) throw Error(std::string(op) + ": undefined tensor");
    if (a.tape() != b.tape()) throw Error(std::string(op) + ": tensors from different tapes");
    return *a.tape();
}

}  // namespace

const Matrix& Tensor::value() const {
    if (!defined()) throw Error("tensor: undefined");
    return tape_->node(id_).value;
}

const Matrix& Tensor::grad() const {
    if (!defined()) throw Error("tensor: undefined");
    return tape_->node(id_).grad;
}

Tensor Tape::leaf(Matrix value, bool requires_grad) {
    return emit(std::move(value), requires_grad, nullptr);
}

Tensor Tape::emit(Matrix value, bool requires_grad, std::function<void(Tape&)> pull) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.pull = std::move(pull);
    nodes_.push_back(std::move(n));
    return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.tape() != this || loss.value().size() != 1)
        throw Error("backward: loss must be a 1x1 tensor of this tape");
    for (Node& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    nodes_[loss.id()].grad(0, 0) = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
        if (nodes_[i].pull && nodes_[i].requires_grad) nodes_[i].pull(*this);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    Tape& tape = same_tape(a, b, "matmul");
    if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
    const int ia = a.id(), ib = b.id();
    const bool rg = tape.node(ia).requires_grad || tape.node(ib).requires_grad;
    Matrix value = a.value() * b.value();
    const int self_placeholder = 0;
    (void)self_placeholder;
    Tensor out = tape.emit(std::move(value), rg, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ia, ib, self](Tape& t) {
        const Matrix& g = t.node(self).grad;
        if (t.node(ia).requires_grad) t.node(ia).grad.noalias() += g * t.node(ib).value.transpose();
        if (t.node(ib).requires_grad) t.node(ib).grad.noalias() += t.node(ia).value.transpose() * g;
    };
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    Tape& tape = same_tape(a, b, "add");
    const bool broadcast = b.rows() == 1 && a.rows() > 1 && a.cols() == b.cols();
    if (!broadcast && (a.rows() != b.rows() || a.cols() != b.cols()))
        shape_error("add", a.value(), b.value());
    const int ia = a.id(), ib = b.id();
    const bool rg = tape.node(ia).requires_grad || tape.node(ib).requires_grad;
    Matrix value =
        broadcast ? Matrix(a.value().rowwise() + b.value().row(0)) : Matrix(a.value() + b.value());
    Tensor out = tape.emit(std::move(value), rg, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ia, ib, self, broadcast](Tape& t) {
        const Matrix& g = t.node(self).grad;
        if (t.node(ia).requires_grad) t.node(ia).grad += g;
        if (t.node(ib).requires_grad) {
            if (broadcast)
                t.node(ib).grad += g.colwise().sum();
            else
                t.node(ib).grad += g;
        }
    };
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    Tape& tape = same_tape(a, b, "mul");
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("mul", a.value(), b.value());
    const int ia = a.id(), ib = b.id();
    const bool rg = tape.node(ia).requires_grad || tape.node(ib).requires_grad;
    Tensor out = tape.emit(a.value().cwiseProduct(b.value()), rg, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ia, ib, self](Tape& t) {
        const Matrix& g = t.node(self).grad;
        if (t.node(ia).requires_grad) t.node(ia).grad += g.cwiseProduct(t.node(ib).value);
        if (t.node(ib).requires_grad) t.node(ib).grad += g.cwiseProduct(t.node(ia).value);
    };
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tape& tape = same_tape(a, "scale");
    const int ia = a.id();
    Tensor out = tape.emit(s * a.value(), tape.node(ia).requires_grad, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ia, self, s](Tape& t) {
        if (t.node(ia).requires_grad) t.node(ia).grad += s * t.node(self).grad;
    };
    return out;
}

Tensor relu(const Tensor& a) {
    Tape& tape = same_tape(a, "relu");
    const int ia = a.id();
    Tensor out = tape.emit(a.value().cwiseMax(0.0), tape.node(ia).requires_grad, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ia, self](Tape& t) {
        if (!t.node(ia).requires_grad) return;
        // subgradient at exactly 0 is 0
        t.node(ia).grad +=
            t.node(self).grad.cwiseProduct((t.node(ia).value.array() > 0.0).cast<double>().matrix());
    };
    return out;
}

Tensor sigmoid(const Tensor& a) {
    Tape& tape = same_tape(a, "sigmoid");
    const int ia = a.id();
    Matrix s = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
    Tensor out = tape.emit(std::move(s), tape.node(ia).requires_grad, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ia, self](Tape& t) {
        if (!t.node(ia).requires_grad) return;
        const auto& v = t.node(self).value.array();
        t.node(ia).grad += (t.node(self).grad.array() * v * (1.0 - v)).matrix();
    };
    return out;
}

Tensor exp(const Tensor& a) {
    Tape& tape = same_tape(a, "exp");
    const int ia = a.id();
    Tensor out = tape.emit(a.value().array().exp().matrix(), tape.node(ia).requires_grad, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ia, self](Tape& t) {
        if (t.node(ia).requires_grad)
            t.node(ia).grad += t.node(self).grad.cwiseProduct(t.node(self).value);
    };
    return out;
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    Tape& tape = same_tape(a, "clamp");
    if (lo > hi) throw Error("clamp: lo > hi");
    const int ia = a.id();
    Tensor out =
        tape.emit(a.value().cwiseMax(lo).cwiseMin(hi), tape.node(ia).requires_grad, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ia, self, lo, hi](Tape& t) {
        if (!t.node(ia).requires_grad) return;
        const auto& x = t.node(ia).value.array();
        t.node(ia).grad +=
            (t.node(self).grad.array() * ((x >= lo) && (x <= hi)).cast<double>()).matrix();
    };
    return out;
}

Tensor softmax(const Tensor& a) {
    Tape& tape = same_tape(a, "softmax");
    const int ia = a.id();
    Matrix s(a.rows(), a.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const auto row = a.value().row(r).array();
        const Eigen::ArrayXd e = (row - row.maxCoeff()).exp();
        s.row(r) = (e / e.sum()).matrix();
    }
    Tensor out = tape.emit(std::move(s), tape.node(ia).requires_grad, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ia, self](Tape& t) {
        if (!t.node(ia).requires_grad) return;
        const Matrix& s_val = t.node(self).value;
        const Matrix& g = t.node(self).grad;
        for (Eigen::Index r = 0; r < s_val.rows(); ++r) {
            const double dot = g.row(r).dot(s_val.row(r));
            t.node(ia).grad.row(r) +=
                (s_val.row(r).array() * (g.row(r).array() - dot)).matrix();
        }
    };
    return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    Tape& tape = same_tape(a, b, "concat_cols");
    if (a.rows() != b.rows()) shape_error("concat_cols", a.value(), b.value());
    const int ia = a.id(), ib = b.id();
    const bool rg = tape.node(ia).requires_grad || tape.node(ib).requires_grad;
    Matrix value(a.rows(), a.cols() + b.cols());
    value << a.value(), b.value();
    Tensor out = tape.emit(std::move(value), rg, nullptr);
    const int self = out.id();
    const Eigen::Index ca = a.cols(), cb = b.cols();
    tape.node(self).pull = [ia, ib, self, ca, cb](Tape& t) {
        const Matrix& g = t.node(self).grad;
        if (t.node(ia).requires_grad) t.node(ia).grad += g.leftCols(ca);
        if (t.node(ib).requires_grad) t.node(ib).grad += g.rightCols(cb);
    };
    return out;
}

Tensor mean_rows(const Tensor& a) {
    Tape& tape = same_tape(a, "mean_rows");
    if (a.rows() == 0) throw Error("mean_rows: empty input");
    const int ia = a.id();
    Matrix value = a.value().colwise().mean();
    Tensor out = tape.emit(std::move(value), tape.node(ia).requires_grad, nullptr);
    const int self = out.id();
    const double inv_n = 1.0 / double(a.rows());
    tape.node(self).pull = [ia, self, inv_n](Tape& t) {
        if (!t.node(ia).requires_grad) return;
        const Matrix& g = t.node(self).grad;  // 1 x C
        t.node(ia).grad += (Eigen::VectorXd::Constant(t.node(ia).value.rows(), inv_n) * g);
    };
    return out;
}

Tensor lookup_rows(const Tensor& table, const std::vector<int>& ids) {
    Tape& tape = same_tape(table, "lookup_rows");
    const int it = table.id();
    for (int id : ids)
        if (id < 0 || id >= table.rows())
            throw Error("lookup_rows: row index " + std::to_string(id) + " out of range");
    Matrix value(static_cast<Eigen::Index>(ids.size()), table.cols());
    for (std::size_t k = 0; k < ids.size(); ++k) value.row(k) = table.value().row(ids[k]);
    Tensor out = tape.emit(std::move(value), tape.node(it).requires_grad, nullptr);
    const int self = out.id();
    tape.node(self).pull = [it, self, ids](Tape& t) {
        if (!t.node(it).requires_grad) return;
        const Matrix& g = t.node(self).grad;
        for (std::size_t k = 0; k < ids.size(); ++k)
            t.node(it).grad.row(ids[k]) += g.row(static_cast<Eigen::Index>(k));
    };
    return out;
}

Tensor transpose(const Tensor& a) {
    Tape& tape = same_tape(a, "transpose");
    const int ia = a.id();
    Tensor out = tape.emit(a.value().transpose(), tape.node(ia).requires_grad, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ia, self](Tape& t) {
        if (t.node(ia).requires_grad) t.node(ia).grad += t.node(self).grad.transpose();
    };
    return out;
}

Tensor masked_row_softmax(const Tensor& scores, const Matrix& mask) {
    Tape& tape = same_tape(scores, "masked_row_softmax");
    if (scores.rows() != mask.rows() || scores.cols() != mask.cols())
        shape_error("masked_row_softmax", scores.value(), mask);
    const int ia = scores.id();
    Matrix s = Matrix::Zero(scores.rows(), scores.cols());
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        double max_v = -std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < scores.cols(); ++c)
            if (mask(r, c) != 0.0) max_v = std::max(max_v, scores.value()(r, c));
        if (!std::isfinite(max_v)) continue;  // fully masked row
        double sum = 0.0;
        for (Eigen::Index c = 0; c < scores.cols(); ++c)
            if (mask(r, c) != 0.0) {
                s(r, c) = std::exp(scores.value()(r, c) - max_v);
                sum += s(r, c);
            }
        s.row(r) /= sum;
    }
    Tensor out = tape.emit(std::move(s), tape.node(ia).requires_grad, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ia, self](Tape& t) {
        if (!t.node(ia).requires_grad) return;
        const Matrix& s_val = t.node(self).value;
        const Matrix& g = t.node(self).grad;
        for (Eigen::Index r = 0; r < s_val.rows(); ++r) {
            const double dot = g.row(r).dot(s_val.row(r));
            t.node(ia).grad.row(r) +=
                (s_val.row(r).array() * (g.row(r).array() - dot)).matrix();
        }
    };
    return out;
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    Tape& tape = same_tape(pred, target, "mse_loss");
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        shape_error("mse_loss", pred.value(), target.value());
    const int ip = pred.id(), it = target.id();
    const double n = double(pred.value().size());
    Matrix v(1, 1);
    v(0, 0) = (pred.value() - target.value()).squaredNorm() / n;
    Tensor out = tape.emit(std::move(v),
                           tape.node(ip).requires_grad || tape.node(it).requires_grad, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ip, it, self, n](Tape& t) {
        const double g = t.node(self).grad(0, 0);
        const Matrix diff = t.node(ip).value - t.node(it).value;
        if (t.node(ip).requires_grad) t.node(ip).grad += (2.0 * g / n) * diff;
        if (t.node(it).requires_grad) t.node(it).grad -= (2.0 * g / n) * diff;
    };
    return out;
}

namespace {

Tensor bce_impl(const Tensor& pred, const Tensor& target, const Matrix* weights,
                const char* op) {
    Tape& tape = same_tape(pred, target, op);
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        shape_error(op, pred.value(), target.value());
    if (weights && (weights->rows() != pred.rows() || weights->cols() != pred.cols()))
        shape_error(op, pred.value(), *weights);
    const int ip = pred.id(), it = target.id();

    const auto p = pred.value().array().max(kBceEps).min(1.0 - kBceEps);
    const auto tv = target.value().array();
    Eigen::ArrayXXd elems = -(tv * p.log() + (1.0 - tv) * (1.0 - p).log());
    double denom = double(pred.value().size());
    if (weights) {
        denom = weights->sum();
        if (denom <= 0.0) throw Error(std::string(op) + ": weights sum to zero");
        elems *= weights->array();
    }
    Matrix v(1, 1);
    v(0, 0) = elems.sum() / denom;
    Matrix w = weights ? *weights : Matrix();
    const bool weighted = weights != nullptr;
    Tensor out = tape.emit(std::move(v), tape.node(ip).requires_grad, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ip, it, self, denom, w = std::move(w), weighted](Tape& t) {
        if (!t.node(ip).requires_grad) return;
        const double g = t.node(self).grad(0, 0);
        const auto raw = t.node(ip).value.array();
        const auto p2 = raw.max(kBceEps).min(1.0 - kBceEps);
        const auto tv2 = t.node(it).value.array();
        // flat outside the clamp window
        Eigen::ArrayXXd inside = ((raw >= kBceEps) && (raw <= 1.0 - kBceEps)).cast<double>();
        Eigen::ArrayXXd grad = (-tv2 / p2 + (1.0 - tv2) / (1.0 - p2)) * inside * (g / denom);
        if (weighted) grad *= w.array();
        t.node(ip).grad += grad.matrix();
    };
    return out;
}

}  // namespace

Tensor bce_loss(const Tensor& pred, const Tensor& target) {
    return bce_impl(pred, target, nullptr, "bce_loss");
}

Tensor bce_loss_weighted(const Tensor& pred, const Tensor& target, const Matrix& weights) {
    return bce_impl(pred, target, &weights, "bce_loss_weighted");
}

Tensor kl_loss(const Tensor& mu, const Tensor& logvar) {
    Tape& tape = same_tape(mu, logvar, "kl_loss");
    if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols())
        shape_error("kl_loss", mu.value(), logvar.value());
    const int im = mu.id(), il = logvar.id();
    const double n = double(mu.value().size());
    const auto m = mu.value().array();
    const auto l = logvar.value().array();
    Matrix v(1, 1);
    v(0, 0) = -0.5 * (1.0 + l - m.square() - l.exp()).sum() / n;
    Tensor out = tape.emit(std::move(v),
                           tape.node(im).requires_grad || tape.node(il).requires_grad, nullptr);
    const int self = out.id();
    tape.node(self).pull = [im, il, self, n](Tape& t) {
        const double g = t.node(self).grad(0, 0);
        if (t.node(im).requires_grad)
            t.node(im).grad += (g / n) * t.node(im).value;
        if (t.node(il).requires_grad)
            t.node(il).grad +=
                ((t.node(il).value.array().exp() - 1.0) * (0.5 * g / n)).matrix();
    };
    return out;
}

Tensor cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels) {
    Tape& tape = same_tape(logits, "cross_entropy_loss");
    if (static_cast<Eigen::Index>(labels.size()) != logits.rows())
        throw Error("cross_entropy_loss: one label per row required");
    for (int y : labels)
        if (y < 0 || y >= logits.cols()) throw Error("cross_entropy_loss: label out of range");
    const int ia = logits.id();
    const double n = double(labels.size());
    double total = 0.0;
    Matrix soft(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const auto row = logits.value().row(r).array();
        const double m = row.maxCoeff();
        const Eigen::ArrayXd e = (row - m).exp();
        const double lse = m + std::log(e.sum());
        soft.row(r) = (e / e.sum()).matrix();
        total += lse - logits.value()(r, labels[r]);
    }
    Matrix v(1, 1);
    v(0, 0) = total / n;
    Tensor out = tape.emit(std::move(v), tape.node(ia).requires_grad, nullptr);
    const int self = out.id();
    tape.node(self).pull = [ia, self, labels, soft = std::move(soft), n](Tape& t) {
        if (!t.node(ia).requires_grad) return;
        const double g = t.node(self).grad(0, 0);
        Matrix grad = soft;
        for (Eigen::Index r = 0; r < grad.rows(); ++r) grad(r, labels[r]) -= 1.0;
        t.node(ia).grad += (g / n) * grad;
    };
    return out;
}

Tensor reparameterize(Tape& tape, const Tensor& mu, const Tensor& logvar, Rng& rng) {
    if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols())
        shape_error("reparameterize", mu.value(), logvar.value());
    const Tensor eps = tape.leaf(rng.normal_matrix(mu.rows(), mu.cols()), false);
    const Tensor lv = clamp(logvar, -kLogvarClamp, kLogvarClamp);
    return add(mu, mul(exp(scale(lv, 0.5)), eps));
}

}  // namespace unisg::nn
