#ifndef EVFI_TEST_HELPERS_HPP
#define EVFI_TEST_HELPERS_HPP

#include <filesystem>
#include <random>
#include <string>

#include "evfi/synth.hpp"
#include "evfi/types.hpp"

namespace evfi::test {

/// Seeded random stream: uniform pixels, non-decreasing timestamps with
/// geometric gaps, fair polarity.
inline EventStream random_stream(std::uint64_t seed, int width, int height, std::size_t count,
                                 Timestamp max_gap = 50) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dx(0, width - 1);
    std::uniform_int_distribution<int> dy(0, height - 1);
    std::uniform_int_distribution<Timestamp> dgap(0, max_gap);
    std::bernoulli_distribution dpol(0.5);

    EventStream s;
    s.width = width;
    s.height = height;
    s.events.reserve(count);
    Timestamp t = 0;
    for (std::size_t i = 0; i < count; ++i) {
        t += dgap(rng);
        Event e;
        e.x = dx(rng);
        e.y = dy(rng);
        e.t = t;
        e.p = dpol(rng) ? 1 : -1;
        s.events.push_back(e);
    }
    return s;
}

/// Seeded random frame with values in [0, 255].
inline GrayFrame random_frame(std::uint64_t seed, int width, int height) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dv(0.0, 255.0);
    GrayFrame f(width, height);
    for (double& p : f.pixels) p = dv(rng);
    return f;
}

/// Small moving-disc scene for fast synthetic tests.
inline SceneSpec small_disc_scene(double vx = 96.0, double vy = 8.0) {
    SceneSpec scene;
    scene.width = 64;
    scene.height = 48;
    scene.background = 60.0;
    scene.duration = 360000;
    SceneObject disc;
    disc.shape = SceneObject::Shape::Disc;
    disc.intensity = 200.0;
    disc.radius = 7.0;
    disc.cx = 12.0;
    disc.cy = 24.0;
    disc.vx = vx;
    disc.vy = vy;
    scene.objects.push_back(disc);
    return scene;
}

/// Unique per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("evfi_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace evfi::test

#endif
