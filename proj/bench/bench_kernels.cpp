// Times the OpenMP kernels against their serial reference implementations on
// sized workloads and cross-checks that both paths agree. Run with --quick
// for the smoke configuration used by ctest.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>

#include "evfi/accum.hpp"
#include "evfi/ref.hpp"
#include "evfi/synth.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace evfi;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const double t0 = now_seconds();
        fn();
        best = std::min(best, now_seconds() - t0);
    }
    return best;
}

void row(const char* name, double serial_s, double parallel_s, double max_diff) {
    std::printf("%-18s %10.2f ms %10.2f ms %8.2fx   max|diff| %.3g\n", name, serial_s * 1e3,
                parallel_s * 1e3, serial_s / parallel_s, max_diff);
}

EventStream bench_stream(std::size_t count, int w, int h) {
    std::mt19937_64 rng(1234);
    std::uniform_int_distribution<int> dx(0, w - 1);
    std::uniform_int_distribution<int> dy(0, h - 1);
    std::bernoulli_distribution pol(0.5);
    EventStream s;
    s.width = w;
    s.height = h;
    s.events.reserve(count);
    Timestamp t = 0;
    for (std::size_t i = 0; i < count; ++i) {
        t += (i % 7 == 0) ? 2 : 1;
        s.events.push_back({dx(rng), dy(rng), t, static_cast<std::int8_t>(pol(rng) ? 1 : -1)});
    }
    return s;
}

GrayFrame bench_frame(std::uint64_t seed, int w, int h) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dv(0.0, 255.0);
    GrayFrame f(w, h);
    for (double& p : f.pixels) p = dv(rng);
    return f;
}

} // namespace

int main(int argc, char** argv) {
    const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
    const int reps = quick ? 1 : 3;

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (no OpenMP)\n");
#endif
    std::printf("%-18s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

    {
        const int w = quick ? 128 : 512;
        const int h = quick ? 96 : 384;
        const GrayFrame a = bench_frame(1, w, h);
        const GrayFrame b = bench_frame(2, w, h);
        double fast_v = 0, slow_v = 0;
        const double slow = time_best_of(reps, [&] { slow_v = ref::ssim_direct(a, b); });
        const double fast = time_best_of(reps, [&] { fast_v = ssim(a, b); });
        row("ssim", slow, fast, std::abs(fast_v - slow_v));
    }
    {
        const std::size_t n = quick ? 200000 : 4000000;
        const EventStream s = bench_stream(n, 640, 480);
        const Timestamp span = s.events.back().t;
        AccumulationFrame fast_f, slow_f;
        const double slow =
            time_best_of(reps, [&] { slow_f = ref::accumulate_direct(s, 0, span + 1); });
        const double fast = time_best_of(reps, [&] { fast_f = accumulate(s, 0, span + 1); });
        std::int64_t diff = 0;
        for (std::size_t i = 0; i < fast_f.values.size(); ++i) {
            diff = std::max(diff, std::abs(fast_f.values[i] - slow_f.values[i]));
        }
        row("accumulate", slow, fast, static_cast<double>(diff));
    }
    {
        const std::size_t n = quick ? 200000 : 4000000;
        const EventStream s = bench_stream(n, 640, 480);
        const Timestamp span = s.events.back().t;
        VoxelGrid fast_g, slow_g;
        const double slow =
            time_best_of(reps, [&] { slow_g = ref::voxel_direct(s, 0, span + 1, 5); });
        const double fast = time_best_of(reps, [&] { fast_g = to_voxel_grid(s, 0, span + 1, 5); });
        double diff = 0;
        for (std::size_t i = 0; i < fast_g.data.size(); ++i) {
            diff = std::max(diff, std::abs(fast_g.data[i] - slow_g.data[i]));
        }
        row("voxel_grid", slow, fast, diff);
    }
    {
        SceneSpec scene;
        scene.width = quick ? 64 : 160;
        scene.height = quick ? 48 : 120;
        scene.background = 60.0;
        scene.duration = quick ? 120000 : 400000;
        SceneObject disc;
        disc.intensity = 200.0;
        disc.radius = scene.height / 6.0;
        disc.cx = scene.width / 5.0;
        disc.cy = scene.height / 2.0;
        disc.vx = scene.width / (scene.duration * 1e-6) * 0.6;
        disc.vy = 4.0;
        scene.objects.push_back(disc);
        EventCameraModel model;

        EventStream fast_s, slow_s;
        const double slow =
            time_best_of(reps, [&] { slow_s = ref::generate_events_serial(scene, model, 2); });
        const double fast = time_best_of(reps, [&] { fast_s = generate_events(scene, model, 2); });
        const bool equal = fast_s.events == slow_s.events;
        row("generate_events", slow, fast, equal ? 0.0 : 1.0);
        if (!equal) {
            std::printf("generate_events: parallel and serial outputs differ\n");
            return 1;
        }
    }
    return 0;
}
