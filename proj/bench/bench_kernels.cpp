// Throughput comparison of the serial reference kernels against the
// OpenMP versions the library runs, on the layer shapes the agents use.

#include <chrono>
#include <cstdio>
#include <vector>

#include "offload/nn/kernels.hpp"
#include "offload/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace offload;
using Clock = std::chrono::steady_clock;

std::vector<float> random_vec(size_t n, Rng& rng) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

template <typename F>
double time_ms(int iters, F&& body) {
    const auto t0 = Clock::now();
    for (int i = 0; i < iters; ++i) body();
    const auto t1 = Clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / iters;
}

void bench_shape(int out_dim, int in_dim, int iters) {
    Rng rng(42);
    const auto W = random_vec(static_cast<size_t>(out_dim) * in_dim, rng);
    const auto b = random_vec(out_dim, rng);
    const auto x = random_vec(in_dim, rng);
    const auto dpre = random_vec(out_dim, rng);
    std::vector<float> y(out_dim), dx(in_dim);
    std::vector<float> dW(W.size()), db(out_dim);

    const double fs = time_ms(iters, [&] {
        nn::kernels::serial::dense_forward(W.data(), b.data(), x.data(), y.data(), out_dim,
                                           in_dim);
    });
    const double fp = time_ms(iters, [&] {
        nn::kernels::dense_forward(W.data(), b.data(), x.data(), y.data(), out_dim, in_dim);
    });
    const double bs = time_ms(iters, [&] {
        nn::kernels::serial::dense_backward_params(dpre.data(), x.data(), dW.data(), db.data(),
                                                   out_dim, in_dim);
        nn::kernels::serial::dense_backward_input(W.data(), dpre.data(), dx.data(), out_dim,
                                                  in_dim);
    });
    const double bp = time_ms(iters, [&] {
        nn::kernels::dense_backward_params(dpre.data(), x.data(), dW.data(), db.data(), out_dim,
                                           in_dim);
        nn::kernels::dense_backward_input(W.data(), dpre.data(), dx.data(), out_dim, in_dim);
    });

    std::printf("%5dx%-5d forward  serial %8.4f ms  parallel %8.4f ms  speedup %.2fx\n", out_dim,
                in_dim, fs, fp, fs / fp);
    std::printf("%5dx%-5d backward serial %8.4f ms  parallel %8.4f ms  speedup %.2fx\n", out_dim,
                in_dim, bs, bp, bs / bp);
}

void bench_adam(size_t n, int iters) {
    Rng rng(7);
    auto p = random_vec(n, rng);
    const auto g = random_vec(n, rng);
    std::vector<float> m(n, 0.0f), v(n, 0.0f);
    auto p2 = p;
    std::vector<float> m2(n, 0.0f), v2(n, 0.0f);
    const nn::kernels::AdamHyper h{1e-5f, 0.9f, 0.999f, 1e-8f};

    const double s = time_ms(iters, [&] {
        nn::kernels::serial::adam_update(p.data(), g.data(), m.data(), v.data(), n, h, 0.1, 0.001);
    });
    const double par = time_ms(iters, [&] {
        nn::kernels::adam_update(p2.data(), g.data(), m2.data(), v2.data(), n, h, 0.1, 0.001);
    });
    std::printf("adam n=%-8zu        serial %8.4f ms  parallel %8.4f ms  speedup %.2fx\n", n, s,
                par, s / par);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp max threads %d\n", omp_get_max_threads());
#else
    std::printf("openmp not enabled; both columns run serial code\n");
#endif
    // Agent-sized layers plus larger shapes where parallelism has room.
    bench_shape(256, 5, 2000);
    bench_shape(256, 256, 1000);
    bench_shape(1024, 1024, 100);
    bench_shape(4096, 4096, 10);
    bench_adam(68099, 500);   // actor-sized parameter vector
    bench_adam(1 << 22, 10);
    return 0;
}
