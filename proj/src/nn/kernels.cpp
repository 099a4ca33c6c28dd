#include "offload/nn/kernels.hpp"

#include <cmath>

namespace offload::nn::kernels {

namespace serial {

void dense_forward(const float* W, const float* b, const float* x, float* y,
                   int out_dim, int in_dim) {
    for (int o = 0; o < out_dim; ++o) {
        double acc = static_cast<double>(b[o]);
        const float* row = W + static_cast<size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) {
            acc += static_cast<double>(row[i]) * static_cast<double>(x[i]);
        }
        y[o] = static_cast<float>(acc);
    }
}

void dense_backward_params(const float* dpre, const float* x, float* dW, float* db,
                           int out_dim, int in_dim) {
    for (int o = 0; o < out_dim; ++o) {
        const double g = static_cast<double>(dpre[o]);
        float* row = dW + static_cast<size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) {
            row[i] = static_cast<float>(g * static_cast<double>(x[i]));
        }
        db[o] = dpre[o];
    }
}

void dense_backward_input(const float* W, const float* dpre, float* dx,
                          int out_dim, int in_dim) {
    for (int i = 0; i < in_dim; ++i) {
        double acc = 0.0;
        for (int o = 0; o < out_dim; ++o) {
            acc += static_cast<double>(W[static_cast<size_t>(o) * in_dim + i]) *
                   static_cast<double>(dpre[o]);
        }
        dx[i] = static_cast<float>(acc);
    }
}

bool adam_update(float* p, const float* g, float* m, float* v, size_t n,
                 const AdamHyper& h, double bc1, double bc2) {
    const double b1 = h.beta1, b2 = h.beta2;
    const double lr = h.learning_rate, eps = h.epsilon;
    bool finite = true;
    for (size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        const float mi = static_cast<float>(b1 * m[i] + (1.0 - b1) * gi);
        const float vi = static_cast<float>(b2 * v[i] + (1.0 - b2) * gi * gi);
        m[i] = mi;
        v[i] = vi;
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        const float pi = static_cast<float>(p[i] - lr * mhat / (std::sqrt(vhat) + eps));
        p[i] = pi;
        if (!std::isfinite(pi)) finite = false;
    }
    return finite;
}

void tanh_inplace(float* z, int n) {
    for (int i = 0; i < n; ++i) {
        z[i] = static_cast<float>(std::tanh(static_cast<double>(z[i])));
    }
}

void relu_inplace(float* z, int n) {
    for (int i = 0; i < n; ++i) {
        if (z[i] < 0.0f) z[i] = 0.0f;
    }
}

}  // namespace serial

// The OpenMP variants repeat the serial per-element arithmetic verbatim.
// Guarded `if` clauses keep tiny layers on one thread.

void dense_forward(const float* W, const float* b, const float* x, float* y,
                   int out_dim, int in_dim) {
#pragma omp parallel for schedule(static) if (out_dim >= 64)
    for (int o = 0; o < out_dim; ++o) {
        double acc = static_cast<double>(b[o]);
        const float* row = W + static_cast<size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) {
            acc += static_cast<double>(row[i]) * static_cast<double>(x[i]);
        }
        y[o] = static_cast<float>(acc);
    }
}

void dense_backward_params(const float* dpre, const float* x, float* dW, float* db,
                           int out_dim, int in_dim) {
#pragma omp parallel for schedule(static) if (out_dim >= 64)
    for (int o = 0; o < out_dim; ++o) {
        const double g = static_cast<double>(dpre[o]);
        float* row = dW + static_cast<size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) {
            row[i] = static_cast<float>(g * static_cast<double>(x[i]));
        }
        db[o] = dpre[o];
    }
}

void dense_backward_input(const float* W, const float* dpre, float* dx,
                          int out_dim, int in_dim) {
#pragma omp parallel for schedule(static) if (in_dim >= 64)
    for (int i = 0; i < in_dim; ++i) {
        double acc = 0.0;
        for (int o = 0; o < out_dim; ++o) {
            acc += static_cast<double>(W[static_cast<size_t>(o) * in_dim + i]) *
                   static_cast<double>(dpre[o]);
        }
        dx[i] = static_cast<float>(acc);
    }
}

bool adam_update(float* p, const float* g, float* m, float* v, size_t n,
                 const AdamHyper& h, double bc1, double bc2) {
    const double b1 = h.beta1, b2 = h.beta2;
    const double lr = h.learning_rate, eps = h.epsilon;
    int nonfinite = 0;
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) reduction(+ : nonfinite) if (nn >= 4096)
    for (long long i = 0; i < nn; ++i) {
        const double gi = g[i];
        const float mi = static_cast<float>(b1 * m[i] + (1.0 - b1) * gi);
        const float vi = static_cast<float>(b2 * v[i] + (1.0 - b2) * gi * gi);
        m[i] = mi;
        v[i] = vi;
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        const float pi = static_cast<float>(p[i] - lr * mhat / (std::sqrt(vhat) + eps));
        p[i] = pi;
        if (!std::isfinite(pi)) nonfinite += 1;
    }
    return nonfinite == 0;
}

void tanh_inplace(float* z, int n) {
#pragma omp parallel for schedule(static) if (n >= 128)
    for (int i = 0; i < n; ++i) {
        z[i] = static_cast<float>(std::tanh(static_cast<double>(z[i])));
    }
}

void relu_inplace(float* z, int n) {
#pragma omp parallel for schedule(static) if (n >= 128)
    for (int i = 0; i < n; ++i) {
        if (z[i] < 0.0f) z[i] = 0.0f;
    }
}

void softmax(const float* z, float* y, int n) {
    double zmax = z[0];
    for (int i = 1; i < n; ++i) {
        if (z[i] > zmax) zmax = z[i];
    }
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        sum += std::exp(static_cast<double>(z[i]) - zmax);
    }
    for (int i = 0; i < n; ++i) {
        y[i] = static_cast<float>(std::exp(static_cast<double>(z[i]) - zmax) / sum);
    }
}

}  // namespace offload::nn::kernels
