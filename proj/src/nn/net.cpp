#include "offload/nn/net.hpp"

#include <cmath>
#include <stdexcept>

#include "offload/rng.hpp"

namespace offload::nn {

DenseNet::DenseNet(int input_dim, const std::vector<LayerSpec>& shape, uint64_t seed)
    : input_dim_(input_dim) {
    if (input_dim <= 0) throw std::invalid_argument("DenseNet: input_dim must be positive");
    if (shape.empty()) throw std::invalid_argument("DenseNet: at least one layer required");

    int prev = input_dim;
    for (size_t k = 0; k < shape.size(); ++k) {
        if (shape[k].width <= 0) {
            throw std::invalid_argument("DenseNet: layer width must be positive");
        }
        if (shape[k].act == Activation::softmax && k + 1 != shape.size()) {
            throw std::invalid_argument("DenseNet: softmax only allowed on the final layer");
        }
        Layer layer;
        layer.in_dim = prev;
        layer.out_dim = shape[k].width;
        layer.act = shape[k].act;
        layer.W.resize(static_cast<size_t>(layer.out_dim) * layer.in_dim);
        layer.b.assign(layer.out_dim, 0.0f);
        layers_.push_back(std::move(layer));
        prev = shape[k].width;
    }

    Rng rng(seed);
    for (auto& layer : layers_) {
        const double bound = std::sqrt(6.0 / (layer.in_dim + layer.out_dim));
        for (auto& w : layer.W) {
            w = static_cast<float>(rng.uniform(-bound, bound));
        }
        // biases stay zero
        param_count_ += layer.W.size() + layer.b.size();
    }
}

ForwardCache DenseNet::forward(std::span<const float> x) const {
    if (static_cast<int>(x.size()) != input_dim_) {
        throw std::invalid_argument("forward: input length != input_dim");
    }
    for (float v : x) {
        if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite input");
    }

    ForwardCache cache;
    cache.inputs.reserve(layers_.size());
    cache.pre.reserve(layers_.size());
    cache.post.reserve(layers_.size());

    std::vector<float> cur(x.begin(), x.end());
    for (const auto& layer : layers_) {
        cache.inputs.push_back(cur);
        std::vector<float> z(layer.out_dim);
        kernels::dense_forward(layer.W.data(), layer.b.data(), cur.data(), z.data(),
                               layer.out_dim, layer.in_dim);
        cache.pre.push_back(z);
        switch (layer.act) {
            case Activation::identity:
                break;
            case Activation::relu:
                kernels::relu_inplace(z.data(), layer.out_dim);
                break;
            case Activation::tanh:
                kernels::tanh_inplace(z.data(), layer.out_dim);
                break;
            case Activation::softmax: {
                std::vector<float> y(layer.out_dim);
                kernels::softmax(z.data(), y.data(), layer.out_dim);
                z = std::move(y);
                break;
            }
        }
        cache.post.push_back(z);
        cur = std::move(z);
    }

    cache.param_revision = param_revision_;
    cache.forward_serial = ++forward_serial_;
    return cache;
}

std::vector<float> DenseNet::evaluate(std::span<const float> x) const {
    return forward(x).output();
}

GradientSet DenseNet::backward(const ForwardCache& cache, std::span<const float> dout) const {
    if (cache.forward_serial != forward_serial_ || cache.param_revision != param_revision_) {
        throw std::runtime_error("backward: cache is not from the immediately preceding forward");
    }
    if (cache.post.size() != layers_.size()) {
        throw std::invalid_argument("backward: cache shape mismatch");
    }
    if (static_cast<int>(dout.size()) != output_dim()) {
        throw std::invalid_argument("backward: gradient length != output_dim");
    }

    GradientSet grads;
    grads.layers.resize(layers_.size());

    std::vector<float> dpost(dout.begin(), dout.end());
    for (size_t k = layers_.size(); k-- > 0;) {
        const Layer& layer = layers_[k];
        const auto& z = cache.pre[k];
        const auto& a = cache.post[k];

        // activation gradient: dpost (w.r.t. activation output) -> dpre
        std::vector<float> dpre(layer.out_dim);
        switch (layer.act) {
            case Activation::identity:
                dpre = dpost;
                break;
            case Activation::relu:
                for (int o = 0; o < layer.out_dim; ++o) {
                    dpre[o] = z[o] > 0.0f ? dpost[o] : 0.0f;
                }
                break;
            case Activation::tanh:
                for (int o = 0; o < layer.out_dim; ++o) {
                    const double ao = a[o];
                    dpre[o] = static_cast<float>(dpost[o] * (1.0 - ao * ao));
                }
                break;
            case Activation::softmax: {
                // dz_j = y_j * (dy_j - sum_k dy_k * y_k)
                double dot = 0.0;
                for (int o = 0; o < layer.out_dim; ++o) {
                    dot += static_cast<double>(dpost[o]) * static_cast<double>(a[o]);
                }
                for (int o = 0; o < layer.out_dim; ++o) {
                    dpre[o] = static_cast<float>(static_cast<double>(a[o]) *
                                                 (static_cast<double>(dpost[o]) - dot));
                }
                break;
            }
        }

        auto& g = grads.layers[k];
        g.dW.resize(layer.W.size());
        g.db.resize(layer.b.size());
        kernels::dense_backward_params(dpre.data(), cache.inputs[k].data(), g.dW.data(),
                                       g.db.data(), layer.out_dim, layer.in_dim);
        if (k > 0) {
            std::vector<float> dx(layer.in_dim);
            kernels::dense_backward_input(layer.W.data(), dpre.data(), dx.data(),
                                          layer.out_dim, layer.in_dim);
            dpost = std::move(dx);
        }
    }
    return grads;
}

std::vector<float> DenseNet::flatten_params() const {
    std::vector<float> flat;
    flat.reserve(param_count_);
    for (const auto& layer : layers_) {
        flat.insert(flat.end(), layer.W.begin(), layer.W.end());
        flat.insert(flat.end(), layer.b.begin(), layer.b.end());
    }
    return flat;
}

void DenseNet::unflatten_params(std::span<const float> flat) {
    if (flat.size() != param_count_) {
        throw std::invalid_argument("unflatten_params: length mismatch");
    }
    size_t off = 0;
    for (auto& layer : layers_) {
        std::copy(flat.begin() + off, flat.begin() + off + layer.W.size(), layer.W.begin());
        off += layer.W.size();
        std::copy(flat.begin() + off, flat.begin() + off + layer.b.size(), layer.b.begin());
        off += layer.b.size();
    }
    ++param_revision_;
}

GradientSet DenseNet::zero_gradients() const {
    GradientSet g;
    g.layers.resize(layers_.size());
    for (size_t k = 0; k < layers_.size(); ++k) {
        g.layers[k].dW.assign(layers_[k].W.size(), 0.0f);
        g.layers[k].db.assign(layers_[k].b.size(), 0.0f);
    }
    return g;
}

AdamState DenseNet::make_adam(float learning_rate) const {
    AdamState s;
    s.m.assign(param_count_, 0.0f);
    s.v.assign(param_count_, 0.0f);
    s.learning_rate = learning_rate;
    return s;
}

void adam_step(DenseNet& net, AdamState& opt, const GradientSet& grads) {
    if (opt.m.size() != net.param_count() || opt.v.size() != net.param_count()) {
        throw std::invalid_argument("adam_step: optimizer state size mismatch");
    }
    if (grads.layers.size() != net.layer_count()) {
        throw std::invalid_argument("adam_step: gradient layer count mismatch");
    }

    opt.step_count += 1;
    const double bc1 = 1.0 - std::pow(static_cast<double>(opt.beta1),
                                      static_cast<double>(opt.step_count));
    const double bc2 = 1.0 - std::pow(static_cast<double>(opt.beta2),
                                      static_cast<double>(opt.step_count));
    const kernels::AdamHyper hyper{opt.learning_rate, opt.beta1, opt.beta2, opt.epsilon};

    size_t off = 0;
    bool finite = true;
    for (size_t k = 0; k < net.layer_count(); ++k) {
        auto& layer = net.layers_mut()[k];
        const auto& g = grads.layers[k];
        if (g.dW.size() != layer.W.size() || g.db.size() != layer.b.size()) {
            throw std::invalid_argument("adam_step: gradient shape mismatch");
        }
        finite &= kernels::adam_update(layer.W.data(), g.dW.data(), opt.m.data() + off,
                                       opt.v.data() + off, layer.W.size(), hyper, bc1, bc2);
        off += layer.W.size();
        finite &= kernels::adam_update(layer.b.data(), g.db.data(), opt.m.data() + off,
                                       opt.v.data() + off, layer.b.size(), hyper, bc1, bc2);
        off += layer.b.size();
    }
    net.bump_revision();
    if (!finite) throw std::runtime_error("adam_step: parameter became non-finite");
}

bool operator==(const DenseNet::Layer& a, const DenseNet::Layer& b) {
    return a.in_dim == b.in_dim && a.out_dim == b.out_dim && a.act == b.act && a.W == b.W &&
           a.b == b.b;
}

bool nets_equal(const DenseNet& a, const DenseNet& b) {
    if (a.input_dim() != b.input_dim() || a.layer_count() != b.layer_count()) return false;
    for (size_t k = 0; k < a.layer_count(); ++k) {
        if (!(a.layers()[k] == b.layers()[k])) return false;
    }
    return true;
}

}  // namespace offload::nn
