#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "unisg/nn/tape.hpp"

using namespace unisg;
using namespace unisg::nn;
using test::gradcheck;

namespace {

Matrix away_from_kinks(Matrix m, double margin = 0.05) {
    for (Eigen::Index i = 0; i < m.size(); ++i)
        if (std::abs(m.data()[i]) < margin) m.data()[i] += (m.data()[i] >= 0 ? margin : -margin);
    return m;
}

}  // namespace

TEST_CASE("forward values: basics") {
    Tape tape;
    const Tensor I = tape.leaf(Matrix::Identity(3, 3), false);
    const Tensor X = tape.leaf(Matrix::Random(3, 4), true);
    const Tensor y = matmul(I, X);
    CHECK(y.value() == X.value());

    // grad w.r.t. X of sum-ish loss flows straight through
    const Tensor target = tape.leaf(Matrix::Zero(3, 4), false);
    const Tensor loss = mse_loss(y, target);
    tape.backward(loss);
    CHECK((X.grad() - (2.0 / 12.0) * X.value()).cwiseAbs().maxCoeff() < 1e-12);

    Tape t2;
    Matrix neg(1, 1);
    neg(0, 0) = -1.0;
    const Tensor a = t2.leaf(neg, true);
    const Tensor r = relu(a);
    CHECK(r.value()(0, 0) == 0.0);
    const Tensor l2 = mse_loss(r, t2.leaf(Matrix::Ones(1, 1), false));
    t2.backward(l2);
    CHECK(a.grad()(0, 0) == 0.0);

    // relu gradient at exactly 0 is 0
    Tape t3;
    const Tensor z = t3.leaf(Matrix::Zero(1, 1), true);
    t3.backward(mse_loss(relu(z), t3.leaf(Matrix::Ones(1, 1), false)));
    CHECK(z.grad()(0, 0) == 0.0);
}

TEST_CASE("forward values: losses") {
    Tape tape;
    const Matrix x = Matrix::Random(4, 3);
    const Tensor a = tape.leaf(x, false);
    const Tensor b = tape.leaf(x, false);
    CHECK(mse_loss(a, b).value()(0, 0) == 0.0);

    const Tensor mu = tape.leaf(Matrix::Zero(5, 2), false);
    const Tensor lv = tape.leaf(Matrix::Zero(5, 2), false);
    CHECK(kl_loss(mu, lv).value()(0, 0) == 0.0);

    // KL >= 0, equality only at (0, 0)
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        Tape t;
        const Tensor m = t.leaf(rng.normal_matrix(3, 4), false);
        const Tensor l = t.leaf(rng.normal_matrix(3, 4), false);
        CHECK(kl_loss(m, l).value()(0, 0) >= 0.0);
    }

    const Tensor half = tape.leaf(Matrix::Constant(6, 6, 0.5), false);
    Matrix bits(6, 6);
    for (int i = 0; i < 36; ++i) bits.data()[i] = (i * 7) % 3 == 0 ? 1.0 : 0.0;
    const Tensor target = tape.leaf(bits, false);
    CHECK(bce_loss(half, target).value()(0, 0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // cross entropy of uniform logits is log(C)
    const Tensor logits = tape.leaf(Matrix::Zero(2, 4), false);
    CHECK(cross_entropy_loss(logits, {1, 3}).value()(0, 0) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("shape errors name the op") {
    Tape tape;
    const Tensor a = tape.leaf(Matrix::Zero(2, 3), false);
    const Tensor b = tape.leaf(Matrix::Zero(2, 3), false);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("matmul"), Error);
    CHECK_THROWS_WITH_AS(concat_cols(a, tape.leaf(Matrix::Zero(3, 1), false)),
                         doctest::Contains("concat_cols"), Error);
    CHECK_THROWS_WITH_AS(mse_loss(a, tape.leaf(Matrix::Zero(1, 1), false)),
                         doctest::Contains("mse_loss"), Error);
    CHECK_THROWS_AS(cross_entropy_loss(a, {0}), Error);
    CHECK_THROWS_AS(lookup_rows(a, {5}), Error);
}

TEST_CASE("softmax rows sum to one; masked variant zeroes dead rows") {
    Tape tape;
    Rng rng(11);
    const Tensor s = softmax(tape.leaf(rng.normal_matrix(5, 7), false));
    for (int r = 0; r < 5; ++r)
        CHECK(s.value().row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));

    Matrix mask = Matrix::Zero(3, 3);
    mask(0, 1) = 1.0;
    mask(0, 2) = 1.0;
    const Tensor ms = masked_row_softmax(tape.leaf(rng.normal_matrix(3, 3), false), mask);
    CHECK(ms.value()(0, 0) == 0.0);
    CHECK(ms.value().row(0).sum() == doctest::Approx(1.0));
    CHECK(ms.value().row(1).cwiseAbs().maxCoeff() == 0.0);  // fully masked
}

TEST_CASE("finite differences: every differentiable op") {
    Rng rng(1234);
    const auto run = [&](const char* name, std::vector<Matrix> params,
                         std::function<Tensor(Tape&, const std::vector<Tensor>&)> build) {
        const double err = gradcheck(params, build, rng);
        INFO("op: ", name);
        CHECK(err < 1e-4);
    };

    const Matrix t23 = rng.normal_matrix(2, 3);
    const Matrix t34 = rng.normal_matrix(3, 4);
    const Matrix t24 = rng.normal_matrix(2, 4);
    const Matrix row4 = rng.normal_matrix(1, 4);

    run("matmul", {t23, t34}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(matmul(p[0], p[1]), t.leaf(t24, false));
    });
    run("add", {t24, t24}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(add(p[0], p[1]), t.leaf(Matrix::Zero(2, 4), false));
    });
    run("add_broadcast", {t24, row4}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(add(p[0], p[1]), t.leaf(Matrix::Zero(2, 4), false));
    });
    run("mul", {t24, t24}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(mul(p[0], p[1]), t.leaf(Matrix::Zero(2, 4), false));
    });
    run("scale", {t24}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(scale(p[0], -1.7), t.leaf(Matrix::Zero(2, 4), false));
    });
    run("relu", {away_from_kinks(t24)}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(relu(p[0]), t.leaf(Matrix::Zero(2, 4), false));
    });
    run("sigmoid", {t24}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(sigmoid(p[0]), t.leaf(Matrix::Zero(2, 4), false));
    });
    run("exp", {t24}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(exp(p[0]), t.leaf(Matrix::Zero(2, 4), false));
    });
    run("clamp", {away_from_kinks(3.0 * t24, 0.1)}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(clamp(p[0], -2.0, 2.0), t.leaf(Matrix::Zero(2, 4), false));
    });
    run("softmax", {t24}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(softmax(p[0]), t.leaf(Matrix::Constant(2, 4, 0.3), false));
    });
    run("concat", {t23, t24}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(concat_cols(p[0], p[1]), t.leaf(Matrix::Zero(2, 7), false));
    });
    run("mean_rows", {t34}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(mean_rows(p[0]), t.leaf(Matrix::Zero(1, 4), false));
    });
    run("lookup_rows", {t34}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(lookup_rows(p[0], {2, 0, 2, 1}), t.leaf(Matrix::Zero(4, 4), false));
    });
    run("transpose", {t23}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(transpose(p[0]), t.leaf(Matrix::Zero(3, 2), false));
    });
    Matrix mask = Matrix::Zero(2, 4);
    mask(0, 0) = mask(0, 2) = mask(1, 1) = mask(1, 3) = 1.0;
    run("masked_row_softmax", {t24}, [&](Tape& t, const std::vector<Tensor>& p) {
        return mse_loss(masked_row_softmax(p[0], mask),
                        t.leaf(Matrix::Constant(2, 4, 0.25), false));
    });
    run("mse", {t24, t24}, [&](Tape&, const std::vector<Tensor>& p) {
        return mse_loss(p[0], p[1]);
    });
    const Matrix probs = (t24.array().tanh() * 0.4 + 0.5).matrix();  // well inside (0,1)
    Matrix bits(2, 4);
    for (int i = 0; i < 8; ++i) bits.data()[i] = i % 3 == 0 ? 1.0 : 0.0;
    run("bce", {probs}, [&](Tape& t, const std::vector<Tensor>& p) {
        return bce_loss(p[0], t.leaf(bits, false));
    });
    Matrix w = Matrix::Zero(2, 4);
    w(0, 1) = 1.0;
    w(1, 2) = 3.0;
    w(1, 0) = 0.5;
    run("bce_weighted", {probs}, [&](Tape& t, const std::vector<Tensor>& p) {
        return bce_loss_weighted(p[0], t.leaf(bits, false), w);
    });
    run("kl", {t24, t24}, [&](Tape&, const std::vector<Tensor>& p) {
        return kl_loss(p[0], p[1]);
    });
    run("cross_entropy", {t24}, [&](Tape&, const std::vector<Tensor>& p) {
        return cross_entropy_loss(p[0], {3, 1});
    });
    run("reparameterize", {t24, t24}, [&](Tape& t, const std::vector<Tensor>& p) {
        Rng gen(99);  // fixed noise draw per evaluation
        return mse_loss(reparameterize(t, p[0], p[1], gen),
                        t.leaf(Matrix::Zero(2, 4), false));
    });

    // random op chains
    for (int chain = 0; chain < 5; ++chain) {
        const Matrix a = rng.normal_matrix(3, 3);
        const Matrix b = rng.normal_matrix(3, 3);
        run("chain", {a, b}, [&](Tape& t, const std::vector<Tensor>& p) {
            Tensor h = sigmoid(matmul(p[0], p[1]));
            h = add(h, p[1]);
            h = softmax(matmul(transpose(p[0]), h));
            return bce_loss(sigmoid(mean_rows(h)), t.leaf(Matrix::Constant(1, 3, 1.0), false));
        });
    }
}

TEST_CASE("reparameterize: determinism, clamp limit, sample statistics") {
    Matrix mu_v = Matrix::Constant(1, 1, 0.7);
    Matrix lv_v = Matrix::Constant(1, 1, -1e9);

    // clamp at -20 makes Z ~ mu
    Tape tape;
    Rng gen(3);
    const Tensor z = reparameterize(tape, tape.leaf(mu_v, false), tape.leaf(lv_v, false), gen);
    CHECK(std::abs(z.value()(0, 0) - 0.7) < 1e-3);

    // fixed seed, identical samples
    Tape t1, t2;
    Rng g1(42), g2(42);
    const Tensor z1 =
        reparameterize(t1, t1.leaf(Matrix::Zero(4, 4), false), t1.leaf(Matrix::Zero(4, 4), false), g1);
    const Tensor z2 =
        reparameterize(t2, t2.leaf(Matrix::Zero(4, 4), false), t2.leaf(Matrix::Zero(4, 4), false), g2);
    CHECK(z1.value() == z2.value());

    // sample mean approaches mu
    Rng g3(7);
    const int n = 100000;
    double sum = 0.0;
    Tape t3;
    const Tensor mu = t3.leaf(Matrix::Constant(1, 1, 0.7), false);
    const Tensor lv = t3.leaf(Matrix::Zero(1, 1), false);
    for (int i = 0; i < n; ++i) sum += reparameterize(t3, mu, lv, g3).value()(0, 0);
    CHECK(std::abs(sum / n - 0.7) < 3.0 / std::sqrt(double(n)));
}

TEST_CASE("backward accumulates across reuse") {
    // y = x*x (via mul with itself) -> dy/dx = 2x
    Tape tape;
    Matrix xv = Matrix::Constant(1, 1, 3.0);
    const Tensor x = tape.leaf(xv, true);
    const Tensor y = mul(x, x);
    tape.backward(mse_loss(y, tape.leaf(Matrix::Zero(1, 1), false)));
    // d/dx (x^2 - 0)^2 = 2 x^2 * 2x = 4 x^3 = 108
    CHECK(x.grad()(0, 0) == doctest::Approx(108.0).epsilon(1e-12));
}
