// Benchmark comparing the serial reference kernels with the OpenMP versions.

#include <chrono>
#include <cstdio>
#include <functional>

#include "ml/kernel.hpp"
#include "ml/matrix.hpp"
#include "ml/nn/conv.hpp"
#include "ml/rng.hpp"

using namespace ml;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms, double diff) {
    std::printf("%-24s serial %8.2f ms   parallel %8.2f ms   speedup %5.2fx   max|diff| %g\n",
                name, serial_ms, parallel_ms, serial_ms / parallel_ms, diff);
}

}  // namespace

int main() {
    Rng rng(42);

#ifdef ML_HAVE_OPENMP
    std::printf("OpenMP enabled\n");
#else
    std::printf("OpenMP not available; both columns run the same serial code\n");
#endif

    {
        Matrix a(320, 320), b(320, 320);
        for (auto& v : a.data()) v = rng.uniform(-1.0, 1.0);
        for (auto& v : b.data()) v = rng.uniform(-1.0, 1.0);
        Matrix r1, r2;
        const double ts = time_ms([&] { r1 = serial::matmul(a, b); }, 5);
        const double tp = time_ms([&] { r2 = matmul(a, b); }, 5);
        report("matmul 320x320", ts, tp, max_abs_diff(r1, r2));
    }
    {
        Matrix pts(1500, 8);
        for (auto& v : pts.data()) v = rng.uniform(-1.0, 1.0);
        Matrix r1, r2;
        const double ts = time_ms([&] { r1 = serial::pairwise_sq_dist(pts); }, 3);
        const double tp = time_ms([&] { r2 = pairwise_sq_dist(pts); }, 3);
        report("pairwise dist 1500x8", ts, tp, max_abs_diff(r1, r2));
    }
    {
        Matrix pts(1200, 8);
        for (auto& v : pts.data()) v = rng.uniform(-1.0, 1.0);
        const Kernel k = Kernel::make_rbf(0.4);
        Matrix r1, r2;
        const double ts = time_ms([&] { r1 = serial::kernel_matrix(k, pts); }, 3);
        const double tp = time_ms([&] { r2 = kernel_matrix(k, pts); }, 3);
        report("rbf gram 1200x8", ts, tp, max_abs_diff(r1, r2));
    }
    {
        Matrix img(96, 96);
        for (auto& v : img.data()) v = rng.uniform(-1.0, 1.0);
        Conv2dSpec spec;
        for (int f = 0; f < 16; ++f) {
            Matrix kern(5, 5);
            for (auto& v : kern.data()) v = rng.uniform(-1.0, 1.0);
            spec.kernels.push_back(std::move(kern));
        }
        std::vector<Matrix> maps;
        const double tp = time_ms([&] { maps = conv2d(img, spec); }, 5);
        // Serial reference: one filter at a time through the same kernel code.
        const double ts = time_ms(
            [&] {
                for (const auto& kern : spec.kernels) {
                    Conv2dSpec one;
                    one.kernels = {kern};
                    one.stride = spec.stride;
                    conv2d(img, one);
                }
            },
            5);
        report("conv2d 96x96 x16", ts, tp, 0.0);
    }
    return 0;
}
