#include "evfi/ref.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace evfi::ref {

namespace {

constexpr int kWindow = 11;

std::array<double, kWindow> gaussian() {
    std::array<double, kWindow> g{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - (kWindow - 1) / 2.0;
        g[i] = std::exp(-(d * d) / (2.0 * 1.5 * 1.5));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

} // namespace

double ssim_direct(const GrayFrame& a, const GrayFrame& b) {
    if (a.width != b.width || a.height != b.height || a.width < kWindow || a.height < kWindow) {
        throw Error("ssim_direct: geometry unsupported");
    }
    const auto g = gaussian();
    const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    const double c2 = (0.03 * 255.0) * (0.03 * 255.0);

    double total = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + kWindow <= a.height; ++y0) {
        for (int x0 = 0; x0 + kWindow <= a.width; ++x0) {
            double mu1 = 0.0, mu2 = 0.0;
            for (int j = 0; j < kWindow; ++j) {
                for (int i = 0; i < kWindow; ++i) {
                    const double w = g[j] * g[i];
                    mu1 += w * a.at(x0 + i, y0 + j);
                    mu2 += w * b.at(x0 + i, y0 + j);
                }
            }
            double s1 = 0.0, s2 = 0.0, s12 = 0.0;
            for (int j = 0; j < kWindow; ++j) {
                for (int i = 0; i < kWindow; ++i) {
                    const double w = g[j] * g[i];
                    const double da = a.at(x0 + i, y0 + j) - mu1;
                    const double db = b.at(x0 + i, y0 + j) - mu2;
                    s1 += w * da * da;
                    s2 += w * db * db;
                    s12 += w * da * db;
                }
            }
            const double num = (2.0 * mu1 * mu2 + c1) * (2.0 * s12 + c2);
            const double den = (mu1 * mu1 + mu2 * mu2 + c1) * (s1 + s2 + c2);
            total += num / den;
            ++count;
        }
    }
    return total / count;
}

AccumulationFrame accumulate_direct(const EventStream& s, Timestamp t0, Timestamp window,
                                    AccumMode mode) {
    AccumulationFrame frame(s.width, s.height, t0, window);
    for (const Event& e : s.events) {
        if (e.t >= t0 && e.t < t0 + window) {
            frame.at(e.x, e.y) += (mode == AccumMode::Signed) ? e.p : 1;
        }
    }
    return frame;
}

VoxelGrid voxel_direct(const EventStream& s, Timestamp t0, Timestamp t1, int bins) {
    VoxelGrid grid(s.width, s.height, bins, t0, t1);
    const double scale = static_cast<double>(bins - 1) / static_cast<double>(t1 - t0);
    for (const Event& e : s.events) {
        if (e.t < t0 || e.t >= t1) continue;
        const double u = static_cast<double>(e.t - t0) * scale;
        const int b0 = static_cast<int>(u);
        const double frac = u - b0;
        grid.at(b0, e.x, e.y) += e.p * (1.0 - frac);
        if (b0 + 1 < bins) grid.at(b0 + 1, e.x, e.y) += e.p * frac;
    }
    return grid;
}

EventStream generate_events_serial(const SceneSpec& scene, const EventCameraModel& model,
                                   int supersample, const CameraView& view) {
    scene.validate();
    model.validate();
    const int w = view.width > 0 ? view.width : scene.width;
    const int h = view.height > 0 ? view.height : scene.height;

    EventStream out;
    out.width = w;
    out.height = h;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double l_ref = std::log(pixel_intensity(scene, x, y, 0, supersample, view) + model.epsilon);
            double l_prev = l_ref;
            Timestamp t_prev = 0;
            for (Timestamp t_next = model.sim_step; t_prev < scene.duration;
                 t_next += model.sim_step) {
                t_next = std::min(t_next, scene.duration);
                const double l_next =
                    std::log(pixel_intensity(scene, x, y, t_next, supersample, view) + model.epsilon);
                while (std::abs(l_next - l_ref) >= model.contrast) {
                    const double sign = (l_next > l_ref) ? 1.0 : -1.0;
                    const double l_target = l_ref + sign * model.contrast;
                    double frac = (l_target - l_prev) / (l_next - l_prev);
                    frac = std::clamp(frac, 0.0, 1.0);
                    Event e;
                    e.x = x;
                    e.y = y;
                    e.t = std::llround(static_cast<double>(t_prev) +
                                       frac * static_cast<double>(t_next - t_prev));
                    e.p = sign > 0.0 ? 1 : -1;
                    out.events.push_back(e);
                    l_ref = l_target;
                }
                l_prev = l_next;
                t_prev = t_next;
            }
        }
    }
    std::stable_sort(out.events.begin(), out.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    return out;
}

} // namespace evfi::ref
