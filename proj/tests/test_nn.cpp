#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "offload/nn/kernels.hpp"
#include "offload/nn/net.hpp"
#include "offload/rng.hpp"

using namespace offload;
using namespace offload::nn;

namespace {

std::vector<float> random_vec(size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
    return v;
}

// Independent double-precision model of a DenseNet: same shapes, same
// parameter values, but every operation in real64 and written in the
// most obvious way possible. Used as the oracle for forward values and
// finite-difference gradients.
struct NaiveNet {
    struct Layer {
        int in, out;
        Activation act;
        std::vector<double> W, b;
    };
    std::vector<Layer> layers;

    explicit NaiveNet(const DenseNet& net) {
        for (const auto& l : net.layers()) {
            Layer n{l.in_dim, l.out_dim, l.act, {}, {}};
            n.W.assign(l.W.begin(), l.W.end());
            n.b.assign(l.b.begin(), l.b.end());
            layers.push_back(std::move(n));
        }
    }

    std::vector<double> forward(const std::vector<double>& x0) const {
        std::vector<double> x = x0;
        for (const auto& l : layers) {
            std::vector<double> y(l.out, 0.0);
            for (int o = 0; o < l.out; ++o) {
                double acc = l.b[o];
                for (int i = 0; i < l.in; ++i) acc += l.W[size_t(o) * l.in + i] * x[i];
                y[o] = acc;
            }
            switch (l.act) {
                case Activation::identity:
                    break;
                case Activation::relu:
                    for (auto& v : y) v = v > 0 ? v : 0.0;
                    break;
                case Activation::tanh:
                    for (auto& v : y) v = std::tanh(v);
                    break;
                case Activation::softmax: {
                    double zmax = y[0];
                    for (double v : y) zmax = std::max(zmax, v);
                    double sum = 0;
                    for (double v : y) sum += std::exp(v - zmax);
                    for (auto& v : y) v = std::exp(v - zmax) / sum;
                    break;
                }
            }
            x = std::move(y);
        }
        return x;
    }

    // Scalar loss: dot(output, c).
    double loss(const std::vector<double>& x, const std::vector<double>& c) const {
        const auto y = forward(x);
        double s = 0;
        for (size_t i = 0; i < y.size(); ++i) s += y[i] * c[i];
        return s;
    }

    double* param(size_t flat_index) {
        size_t off = 0;
        for (auto& l : layers) {
            if (flat_index < off + l.W.size()) return &l.W[flat_index - off];
            off += l.W.size();
            if (flat_index < off + l.b.size()) return &l.b[flat_index - off];
            off += l.b.size();
        }
        return nullptr;
    }
};

// Flat gradient in canonical order from a GradientSet.
std::vector<float> flatten_grads(const GradientSet& g) {
    std::vector<float> flat;
    for (const auto& l : g.layers) {
        flat.insert(flat.end(), l.dW.begin(), l.dW.end());
        flat.insert(flat.end(), l.db.begin(), l.db.end());
    }
    return flat;
}

void check_gradients_against_fd(const DenseNet& net, uint64_t seed, size_t samples) {
    Rng rng(seed);
    std::vector<double> x(net.input_dim());
    for (auto& v : x) v = rng.uniform(0.0, 1.0);
    std::vector<double> c(net.output_dim());
    for (auto& v : c) v = rng.uniform(-1.0, 1.0);

    std::vector<float> xf(x.begin(), x.end());
    std::vector<float> cf(c.begin(), c.end());
    const auto cache = net.forward(xf);
    const auto flat = flatten_grads(net.backward(cache, cf));

    NaiveNet naive(net);
    const double h = 1e-4;
    double max_rel = 0.0;
    for (size_t k = 0; k < samples; ++k) {
        const size_t idx = rng.below(net.param_count());
        double* p = naive.param(idx);
        REQUIRE(p != nullptr);
        const double saved = *p;
        *p = saved + h;
        const double lp = naive.loss(x, c);
        *p = saved - h;
        const double lm = naive.loss(x, c);
        *p = saved;
        const double fd = (lp - lm) / (2 * h);
        const double bp = flat[idx];
        const double rel = std::abs(bp - fd) / std::max({1e-6, std::abs(fd), std::abs(bp)});
        max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel <= 1e-4);
}

}  // namespace

TEST_CASE("dense_forward matches a naive double-precision loop") {
    Rng rng(11);
    const int out = 37, in = 53;
    const auto W = random_vec(size_t(out) * in, rng);
    const auto b = random_vec(out, rng);
    const auto x = random_vec(in, rng);
    std::vector<float> y(out);
    kernels::serial::dense_forward(W.data(), b.data(), x.data(), y.data(), out, in);
    for (int o = 0; o < out; ++o) {
        double acc = b[o];
        for (int i = 0; i < in; ++i) acc += double(W[size_t(o) * in + i]) * double(x[i]);
        CHECK(y[o] == doctest::Approx(acc).epsilon(1e-6));
    }
}

TEST_CASE("network forward matches the naive net on all three architectures") {
    const std::vector<std::vector<LayerSpec>> shapes = {
        {{256, Activation::tanh}, {256, Activation::tanh}, {3, Activation::softmax}},
        {{256, Activation::tanh}, {256, Activation::tanh}, {1, Activation::identity}},
        {{256, Activation::relu},
         {256, Activation::relu},
         {256, Activation::relu},
         {256, Activation::relu},
         {3, Activation::identity}},
    };
    Rng rng(21);
    for (const auto& shape : shapes) {
        DenseNet net(5, shape, 77);
        NaiveNet naive(net);
        std::vector<double> x(5);
        for (auto& v : x) v = rng.uniform(0.0, 1.0);
        std::vector<float> xf(x.begin(), x.end());
        const auto got = net.evaluate(xf);
        const auto want = naive.forward(x);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i)
            CHECK(double(got[i]) == doctest::Approx(want[i]).epsilon(1e-5));
    }
}

TEST_CASE("backprop matches real64 central finite differences") {
    DenseNet actor(5,
                   {{256, Activation::tanh}, {256, Activation::tanh}, {3, Activation::softmax}},
                   101);
    DenseNet critic(
        5, {{256, Activation::tanh}, {256, Activation::tanh}, {1, Activation::identity}}, 102);
    DenseNet qnet(5,
                  {{256, Activation::relu},
                   {256, Activation::relu},
                   {256, Activation::relu},
                   {256, Activation::relu},
                   {3, Activation::identity}},
                  103);
    check_gradients_against_fd(actor, 1001, 220);
    check_gradients_against_fd(critic, 1002, 220);
    check_gradients_against_fd(qnet, 1003, 220);
}

TEST_CASE("adam_update is bitwise equal to the scalar recipe") {
    Rng rng(31);
    const size_t n = 5000;
    auto p = random_vec(n, rng);
    auto m = random_vec(n, rng, 0.0, 0.1);
    auto v = random_vec(n, rng, 0.0, 0.1);
    const auto g = random_vec(n, rng);
    auto p2 = p;
    auto m2 = m;
    auto v2 = v;

    const kernels::AdamHyper h{1e-3f, 0.9f, 0.999f, 1e-8f};
    const double bc1 = 1.0 - std::pow(0.9, 3.0);
    const double bc2 = 1.0 - std::pow(0.999, 3.0);
    REQUIRE(kernels::serial::adam_update(p.data(), g.data(), m.data(), v.data(), n, h, bc1, bc2));

    // scalar oracle, element at a time; hyperparameters promote from
    // float exactly as the kernel does (double(0.9f) != 0.9)
    const double b1 = h.beta1, b2 = h.beta2, lr = h.learning_rate, eps = h.epsilon;
    for (size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        const float mi = static_cast<float>(b1 * m2[i] + (1.0 - b1) * gi);
        const float vi = static_cast<float>(b2 * v2[i] + (1.0 - b2) * gi * gi);
        m2[i] = mi;
        v2[i] = vi;
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        p2[i] = static_cast<float>(p2[i] - lr * mhat / (std::sqrt(vhat) + eps));
    }
    CHECK(std::memcmp(p.data(), p2.data(), n * sizeof(float)) == 0);
    CHECK(std::memcmp(m.data(), m2.data(), n * sizeof(float)) == 0);
    CHECK(std::memcmp(v.data(), v2.data(), n * sizeof(float)) == 0);
}

TEST_CASE("adam bias correction follows step_count") {
    DenseNet net(2, {{2, Activation::identity}}, 5);
    auto opt = net.make_adam(0.01f);
    auto grads = net.zero_gradients();
    for (auto& l : grads.layers) {
        for (auto& v : l.dW) v = 0.5f;
        for (auto& v : l.db) v = -0.25f;
    }
    const auto before = net.flatten_params();
    adam_step(net, opt, grads);
    CHECK(opt.step_count == 1);
    const auto after = net.flatten_params();
    // First step with fresh moments moves every parameter by about lr.
    for (size_t i = 0; i < after.size(); ++i)
        CHECK(std::abs(after[i] - before[i]) == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("parameter counts match the architecture arithmetic") {
    DenseNet actor(5,
                   {{256, Activation::tanh}, {256, Activation::tanh}, {3, Activation::softmax}},
                   1);
    DenseNet critic(
        5, {{256, Activation::tanh}, {256, Activation::tanh}, {1, Activation::identity}}, 1);
    DenseNet qnet(5,
                  {{256, Activation::relu},
                   {256, Activation::relu},
                   {256, Activation::relu},
                   {256, Activation::relu},
                   {3, Activation::identity}},
                  1);
    CHECK(actor.param_count() == 68099);
    CHECK(critic.param_count() == 67585);
    CHECK(actor.param_count() + critic.param_count() == 135684);
    CHECK(qnet.param_count() == 199683);
}

TEST_CASE("flatten round-trip transplants parameters exactly") {
    DenseNet a(5, {{16, Activation::tanh}, {3, Activation::softmax}}, 900);
    DenseNet b(5, {{16, Activation::tanh}, {3, Activation::softmax}}, 901);
    const auto flat = a.flatten_params();
    CHECK(flat.size() == a.param_count());
    b.unflatten_params(flat);
    CHECK(b.flatten_params() == flat);
    CHECK(nets_equal(a, b));

    std::vector<float> wrong(flat.size() + 1, 0.0f);
    CHECK_THROWS_AS(b.unflatten_params(wrong), std::invalid_argument);
}

TEST_CASE("same seed gives identical weights, different seed different ones") {
    DenseNet a(5, {{64, Activation::tanh}, {3, Activation::softmax}}, 42);
    DenseNet b(5, {{64, Activation::tanh}, {3, Activation::softmax}}, 42);
    DenseNet c(5, {{64, Activation::tanh}, {3, Activation::softmax}}, 43);
    CHECK(a.flatten_params() == b.flatten_params());
    CHECK(a.flatten_params() != c.flatten_params());
}

TEST_CASE("parallel kernels are bitwise identical to the serial reference") {
    Rng rng(71);
    for (const auto [out, in] : {std::pair{256, 5}, {256, 256}, {3, 256}, {513, 129}}) {
        const auto W = random_vec(size_t(out) * in, rng);
        const auto b = random_vec(out, rng);
        const auto x = random_vec(in, rng);
        const auto dpre = random_vec(out, rng);
        std::vector<float> y1(out), y2(out), dx1(in), dx2(in);
        std::vector<float> dW1(W.size()), dW2(W.size()), db1(out), db2(out);

        kernels::serial::dense_forward(W.data(), b.data(), x.data(), y1.data(), out, in);
        kernels::dense_forward(W.data(), b.data(), x.data(), y2.data(), out, in);
        CHECK(std::memcmp(y1.data(), y2.data(), y1.size() * 4) == 0);

        kernels::serial::dense_backward_params(dpre.data(), x.data(), dW1.data(), db1.data(),
                                               out, in);
        kernels::dense_backward_params(dpre.data(), x.data(), dW2.data(), db2.data(), out, in);
        CHECK(std::memcmp(dW1.data(), dW2.data(), dW1.size() * 4) == 0);
        CHECK(std::memcmp(db1.data(), db2.data(), db1.size() * 4) == 0);

        kernels::serial::dense_backward_input(W.data(), dpre.data(), dx1.data(), out, in);
        kernels::dense_backward_input(W.data(), dpre.data(), dx2.data(), out, in);
        CHECK(std::memcmp(dx1.data(), dx2.data(), dx1.size() * 4) == 0);
    }

    const size_t n = 100000;
    auto p1 = random_vec(n, rng);
    auto m1 = random_vec(n, rng, 0.0, 0.1);
    auto v1 = random_vec(n, rng, 0.0, 0.1);
    const auto g = random_vec(n, rng);
    auto p2 = p1;
    auto m2 = m1;
    auto v2 = v1;
    const kernels::AdamHyper h{1e-4f, 0.9f, 0.999f, 1e-8f};
    kernels::serial::adam_update(p1.data(), g.data(), m1.data(), v1.data(), n, h, 0.1, 0.001);
    kernels::adam_update(p2.data(), g.data(), m2.data(), v2.data(), n, h, 0.1, 0.001);
    CHECK(std::memcmp(p1.data(), p2.data(), n * 4) == 0);
    CHECK(std::memcmp(m1.data(), m2.data(), n * 4) == 0);
    CHECK(std::memcmp(v1.data(), v2.data(), n * 4) == 0);
}

TEST_CASE("softmax produces a normalized distribution and is shift-invariant") {
    const float z[3] = {1.0f, 2.0f, 3.0f};
    const float zs[3] = {101.0f, 102.0f, 103.0f};
    float y[3], ys[3];
    kernels::softmax(z, y, 3);
    kernels::softmax(zs, ys, 3);
    double sum = 0;
    for (float v : y) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    for (int i = 0; i < 3; ++i) CHECK(y[i] == ys[i]);
    CHECK(y[0] < y[1]);
    CHECK(y[1] < y[2]);
}

TEST_CASE("shape validation and cache staleness are enforced") {
    CHECK_THROWS_AS(DenseNet(5, {{0, Activation::tanh}}, 1), std::invalid_argument);
    CHECK_THROWS_AS(DenseNet(0, {{4, Activation::tanh}}, 1), std::invalid_argument);
    CHECK_THROWS_AS(
        DenseNet(5, {{4, Activation::softmax}, {3, Activation::identity}}, 1),
        std::invalid_argument);

    DenseNet net(2, {{4, Activation::tanh}, {2, Activation::identity}}, 9);
    const std::vector<float> x{0.1f, 0.2f};
    const std::vector<float> dout{1.0f, -1.0f};

    CHECK_THROWS_AS(net.forward(std::vector<float>{0.1f}), std::invalid_argument);
    const float bad[2] = {std::numeric_limits<float>::quiet_NaN(), 0.0f};
    CHECK_THROWS_AS(net.forward(std::span<const float>(bad, 2)), std::invalid_argument);

    auto cache = net.forward(x);
    CHECK_NOTHROW(net.backward(cache, dout));
    (void)net.forward(x);  // newer forward invalidates the old cache
    CHECK_THROWS_AS(net.backward(cache, dout), std::runtime_error);

    auto cache2 = net.forward(x);
    net.bump_revision();  // parameter change invalidates too
    CHECK_THROWS_AS(net.backward(cache2, dout), std::runtime_error);
}
