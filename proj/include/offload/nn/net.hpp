#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "offload/nn/kernels.hpp"

namespace offload::nn {

enum class Activation { identity, relu, tanh, softmax };

struct LayerSpec {
    int width;
    Activation act;
};

// Per-layer gradient buffers, shape-congruent with the net they came from.
struct GradientSet {
    struct Layer {
        std::vector<float> dW;
        std::vector<float> db;
    };
    std::vector<Layer> layers;
};

// Intermediate values captured by forward() for one subsequent backward().
// Stamped with the net's parameter revision and forward serial; backward()
// rejects a cache that is not from the immediately preceding forward.
struct ForwardCache {
    std::vector<std::vector<float>> inputs;   // per layer, the layer's input
    std::vector<std::vector<float>> pre;      // per layer, pre-activation z
    std::vector<std::vector<float>> post;     // per layer, activation output
    uint64_t param_revision = 0;
    uint64_t forward_serial = 0;

    const std::vector<float>& output() const { return post.back(); }
};

// Adam optimizer state for one DenseNet. m/v mirror the flattened
// parameter vector. Defaults: beta1 0.9, beta2 0.999, epsilon 1e-8;
// the learning rate default follows the agents' configured 1e-5.
struct AdamState {
    uint64_t step_count = 0;
    std::vector<float> m;
    std::vector<float> v;
    float learning_rate = 1e-5f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
};

// Fully connected float32 network trained one sample at a time.
//
// Initialization is Glorot-uniform, U(-sqrt(6/(fan_in+fan_out)), +...),
// drawn from Rng (mt19937_64, see rng.hpp) in canonical parameter order;
// biases start at zero. Identical (shape, seed) gives bit-identical
// parameters.
//
// Canonical flatten order: layer 0..N-1; within a layer the weight matrix
// row-major with one row per output neuron, then the bias vector.
class DenseNet {
public:
    // Throws std::invalid_argument on an invalid shape chain (non-positive
    // widths, or softmax anywhere but the final layer).
    DenseNet(int input_dim, const std::vector<LayerSpec>& shape, uint64_t seed);

    int input_dim() const { return input_dim_; }
    int output_dim() const { return layers_.back().out_dim; }
    size_t layer_count() const { return layers_.size(); }
    size_t param_count() const { return param_count_; }

    // Forward pass; the returned cache feeds backward(). Throws on
    // dimension mismatch or non-finite input.
    ForwardCache forward(std::span<const float> x) const;

    // Convenience forward that discards the cache.
    std::vector<float> evaluate(std::span<const float> x) const;

    // Backpropagation from a gradient w.r.t. the network OUTPUT. For a
    // softmax head the gradient is taken w.r.t. the probabilities and the
    // softmax Jacobian is applied here. Throws if the cache is stale.
    GradientSet backward(const ForwardCache& cache, std::span<const float> dout) const;

    std::vector<float> flatten_params() const;
    void unflatten_params(std::span<const float> flat);

    GradientSet zero_gradients() const;
    AdamState make_adam(float learning_rate) const;

    struct Layer {
        int in_dim;
        int out_dim;
        Activation act;
        std::vector<float> W;  // out_dim x in_dim, row-major
        std::vector<float> b;  // out_dim
    };
    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers_mut() { return layers_; }

    uint64_t param_revision() const { return param_revision_; }
    void bump_revision() { ++param_revision_; }

private:
    int input_dim_;
    std::vector<Layer> layers_;
    size_t param_count_ = 0;
    uint64_t param_revision_ = 0;
    mutable uint64_t forward_serial_ = 0;
};

// One Adam update on every parameter, in canonical flatten order, using
// the documented per-element recipe (see kernels.hpp). Increments
// opt.step_count. Throws on shape mismatch or if any parameter leaves
// the finite range.
void adam_step(DenseNet& net, AdamState& opt, const GradientSet& grads);

bool operator==(const DenseNet::Layer& a, const DenseNet::Layer& b);
bool nets_equal(const DenseNet& a, const DenseNet& b);

}  // namespace offload::nn
