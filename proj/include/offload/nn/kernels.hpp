#pragma once

#include <cstddef>
#include <cstdint>

// Dense-layer compute kernels. Every kernel exists twice: a plain serial
// reference under kernels::serial, and the OpenMP version under kernels::
// that the library actually runs. Both compute each output element with
// the same per-element arithmetic in the same order (parallelism is only
// across independent elements), so with contraction disabled the two
// produce bitwise-identical float32 results at any thread count. Tests
// assert that equality; bench/ compares their throughput.
//
// Numeric convention: float32 storage, double accumulation/intermediates,
// result rounded back to float32 once per element.

namespace offload::nn::kernels {

struct AdamHyper {
    float learning_rate;
    float beta1;
    float beta2;
    float epsilon;
};

namespace serial {

// y[o] = b[o] + sum_i W[o*in_dim + i] * x[i]
void dense_forward(const float* W, const float* b, const float* x, float* y,
                   int out_dim, int in_dim);

// dW[o*in_dim + i] = dpre[o] * x[i];  db[o] = dpre[o]
void dense_backward_params(const float* dpre, const float* x, float* dW, float* db,
                           int out_dim, int in_dim);

// dx[i] = sum_o W[o*in_dim + i] * dpre[o]
void dense_backward_input(const float* W, const float* dpre, float* dx,
                          int out_dim, int in_dim);

// In-place Adam update over n parameters. bc1/bc2 are the bias-correction
// denominators (1 - beta^t) precomputed in double by the caller. Per
// element:
//   m' = b1*m + (1-b1)*g          v' = b2*v + (1-b2)*g*g
//   p' = p - lr * (m'/bc1) / (sqrt(v'/bc2) + eps)
// Returns false if any updated parameter is non-finite.
bool adam_update(float* p, const float* g, float* m, float* v, size_t n,
                 const AdamHyper& h, double bc1, double bc2);

void tanh_inplace(float* z, int n);
void relu_inplace(float* z, int n);

}  // namespace serial

void dense_forward(const float* W, const float* b, const float* x, float* y,
                   int out_dim, int in_dim);
void dense_backward_params(const float* dpre, const float* x, float* dW, float* db,
                           int out_dim, int in_dim);
void dense_backward_input(const float* W, const float* dpre, float* dx,
                          int out_dim, int in_dim);
bool adam_update(float* p, const float* g, float* m, float* v, size_t n,
                 const AdamHyper& h, double bc1, double bc2);
void tanh_inplace(float* z, int n);
void relu_inplace(float* z, int n);

// Softmax over a (short) logit vector, max-shifted, exp/sum in double.
// Serial only: it runs on 3-wide output heads.
void softmax(const float* z, float* y, int n);

}  // namespace offload::nn::kernels
