#include "evfi/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>

#include "detail.hpp"
#include "evfi/io.hpp"

namespace evfi {

void SceneSpec::validate() const {
    if (width <= 0 || height <= 0) {
        throw Error(detail::msg("scene geometry ", width, "x", height, " invalid"));
    }
    if (background < 0.0 || background > 255.0) {
        throw Error(detail::msg("scene background ", background, " outside [0,255]"));
    }
    if (duration < 0) {
        throw Error(detail::msg("scene duration ", duration, " negative"));
    }
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const SceneObject& o = objects[i];
        if (o.intensity < 0.0 || o.intensity > 255.0) {
            throw Error(detail::msg("object ", i, " intensity ", o.intensity, " outside [0,255]"));
        }
        if (o.intensity == background) {
            throw Error(detail::msg("object ", i, " intensity equals the background (no events)"));
        }
        if (!std::isfinite(o.vx) || !std::isfinite(o.vy)) {
            throw Error(detail::msg("object ", i, " velocity not finite"));
        }
        if (o.shape == SceneObject::Shape::Disc && o.radius <= 0.0) {
            throw Error(detail::msg("object ", i, " radius must be positive"));
        }
        if (o.shape == SceneObject::Shape::Rect && (o.extent_x <= 0.0 || o.extent_y <= 0.0)) {
            throw Error(detail::msg("object ", i, " extents must be positive"));
        }
    }
}

void EventCameraModel::validate() const {
    if (contrast <= 0.0) throw Error("event model contrast must be positive");
    if (epsilon <= 0.0) throw Error("event model epsilon must be positive");
    if (sim_step < 1) throw Error("event model sim_step must be >= 1 microsecond");
    if (noise_sigma < 0.0) throw Error("event model noise sigma must be non-negative");
}

namespace {

double seconds(Timestamp t) { return static_cast<double>(t) * 1e-6; }

bool object_covers(const SceneObject& o, double sx, double sy, double ts) {
    const double cx = o.cx + o.vx * ts;
    const double cy = o.cy + o.vy * ts;
    if (o.shape == SceneObject::Shape::Disc) {
        const double dx = sx - cx;
        const double dy = sy - cy;
        return dx * dx + dy * dy <= o.radius * o.radius;
    }
    return std::abs(sx - cx) <= o.extent_x * 0.5 && std::abs(sy - cy) <= o.extent_y * 0.5;
}

/// Scene intensity at real coordinates; later objects occlude earlier ones.
double sample_scene(const SceneSpec& scene, double sx, double sy, double ts) {
    double value = scene.background;
    for (const SceneObject& o : scene.objects) {
        if (object_covers(o, sx, sy, ts)) value = o.intensity;
    }
    return value;
}

struct ViewMap {
    double dx = 0.0, dy = 0.0, r = 1.0;
    double to_scene_x(double x) const { return r * (x - dx); }
    double to_scene_y(double y) const { return r * (y - dy); }
};

double pixel_mean(const SceneSpec& scene, const ViewMap& vm, int x, int y, double ts, int ss) {
    double acc = 0.0;
    for (int j = 0; j < ss; ++j) {
        const double sy = vm.to_scene_y(y + (j + 0.5) / ss);
        for (int i = 0; i < ss; ++i) {
            const double sx = vm.to_scene_x(x + (i + 0.5) / ss);
            acc += sample_scene(scene, sx, sy, ts);
        }
    }
    return acc / (static_cast<double>(ss) * ss);
}

} // namespace

double pixel_intensity(const SceneSpec& scene, int x, int y, Timestamp t, int supersample,
                       const CameraView& view) {
    const ViewMap vm{view.dx, view.dy, view.r};
    return pixel_mean(scene, vm, x, y, seconds(t), supersample);
}

GrayFrame render_frame(const SceneSpec& scene, Timestamp t, int supersample, const CameraView& view) {
    scene.validate();
    if (supersample < 1) throw Error("render_frame: supersample must be >= 1");
    if (t < 0 || t > scene.duration) {
        throw Error(detail::msg("render_frame: t ", t, " outside [0, ", scene.duration, "]"));
    }
    const int w = view.width > 0 ? view.width : scene.width;
    const int h = view.height > 0 ? view.height : scene.height;
    const ViewMap vm{view.dx, view.dy, view.r};
    const double ts = seconds(t);

    GrayFrame frame(w, h, 0.0, t);
#pragma omp parallel for schedule(static) if (!detail::in_parallel())
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            frame.at(x, y) = pixel_mean(scene, vm, x, y, ts, supersample);
        }
    }
    return frame;
}

FrameSequence generate_rgb_sequence(const SceneSpec& scene, Rational fps, int supersample,
                                    const CameraView& view) {
    if (fps.num <= 0 || fps.den <= 0) throw Error("generate_rgb_sequence: fps must be positive");
    FrameSequence seq;
    seq.nominal_fps = fps;
    for (long long k = 0;; ++k) {
        const Timestamp t = detail::frame_timestamp(k, fps.num, fps.den);
        if (t > scene.duration) break;
        seq.frames.push_back(render_frame(scene, t, supersample, view));
        if (scene.duration == 0) break;
    }
    return seq;
}

RgbFrame gray_to_rgb(const GrayFrame& frame) {
    RgbFrame out(frame.width, frame.height, 0.0, frame.t);
    for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
        out.pixels[i * 3 + 0] = frame.pixels[i];
        out.pixels[i * 3 + 1] = frame.pixels[i];
        out.pixels[i * 3 + 2] = frame.pixels[i];
    }
    return out;
}

// --- Event generation ----------------------------------------------------------

namespace {

struct Interval {
    double a = 0.0, b = 0.0;
};

/// Time window (seconds) during which a moving object's inflated footprint can
/// touch the scene-space point (px, py); empty optional when it never does.
bool active_interval(const SceneObject& o, double px, double py, double inflate, double t_end,
                     Interval& out) {
    const double reach_x = (o.shape == SceneObject::Shape::Disc ? o.radius : o.extent_x * 0.5) + inflate;
    const double reach_y = (o.shape == SceneObject::Shape::Disc ? o.radius : o.extent_y * 0.5) + inflate;

    double lo = 0.0, hi = t_end;
    const double rx = px - o.cx;
    if (o.vx == 0.0) {
        if (std::abs(rx) > reach_x) return false;
    } else {
        double ta = (rx - reach_x) / o.vx;
        double tb = (rx + reach_x) / o.vx;
        if (ta > tb) std::swap(ta, tb);
        lo = std::max(lo, ta);
        hi = std::min(hi, tb);
    }
    const double ry = py - o.cy;
    if (o.vy == 0.0) {
        if (std::abs(ry) > reach_y) return false;
    } else {
        double ta = (ry - reach_y) / o.vy;
        double tb = (ry + reach_y) / o.vy;
        if (ta > tb) std::swap(ta, tb);
        lo = std::max(lo, ta);
        hi = std::min(hi, tb);
    }
    if (lo > hi) return false;
    out = {lo, hi};
    return true;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Simulates one pixel over the step grid restricted to its active windows.
/// Appends emitted events (chronological) to `out`.
void simulate_pixel(const SceneSpec& scene, const EventCameraModel& model, const ViewMap& vm,
                    int x, int y, int ss, const std::vector<Interval>& windows,
                    std::vector<Event>& out) {
    const double l_start = std::log(pixel_mean(scene, vm, x, y, 0.0, ss) + model.epsilon);
    double l_ref = l_start;
    double l_prev = l_start;
    Timestamp t_prev = 0;

    std::mt19937_64 rng;
    std::normal_distribution<double> jitter(0.0, model.noise_sigma);
    const bool noisy = model.noise_sigma > 0.0;
    if (noisy) {
        rng.seed(splitmix64(model.seed ^ (static_cast<std::uint64_t>(y) << 24 ^ static_cast<std::uint64_t>(x))));
    }

    Timestamp simulated_until = 0;
    for (const Interval& win : windows) {
        // Step boundaries covering [win.a, win.b], aligned to the sim grid.
        Timestamp t0 = static_cast<Timestamp>(std::floor(win.a * 1e6 / model.sim_step)) * model.sim_step;
        t0 = std::max<Timestamp>(std::max<Timestamp>(t0, 0), simulated_until);
        const Timestamp t1 = std::min<Timestamp>(
            scene.duration,
            static_cast<Timestamp>(std::ceil(win.b * 1e6 / model.sim_step)) * model.sim_step + model.sim_step);

        // Intensity is constant between windows, so entering at t0 with the
        // previous reference is exact.
        t_prev = t0;
        for (Timestamp t_next = t0 + model.sim_step; t_prev < t1; t_next += model.sim_step) {
            t_next = std::min(t_next, scene.duration);
            if (t_next <= t_prev) break;
            const double l_next =
                std::log(pixel_mean(scene, vm, x, y, seconds(t_next), ss) + model.epsilon);

            double threshold = model.contrast;
            while (std::abs(l_next - l_ref) >= threshold) {
                const double sign = (l_next > l_ref) ? 1.0 : -1.0;
                const double l_target = l_ref + sign * threshold;
                double frac = (l_target - l_prev) / (l_next - l_prev);
                frac = std::clamp(frac, 0.0, 1.0);
                const double t_event =
                    static_cast<double>(t_prev) + frac * static_cast<double>(t_next - t_prev);
                Event e;
                e.x = x;
                e.y = y;
                e.t = std::llround(t_event);
                e.p = sign > 0.0 ? 1 : -1;
                out.push_back(e);
                l_ref = l_target;
                if (noisy) {
                    threshold = std::max(model.contrast + jitter(rng), 0.01 * model.contrast);
                }
            }
            l_prev = l_next;
            t_prev = t_next;
        }
        simulated_until = std::max(simulated_until, t_prev);
    }
}

} // namespace

EventStream generate_events(const SceneSpec& scene, const EventCameraModel& model, int supersample,
                            const CameraView& view) {
    scene.validate();
    model.validate();
    if (supersample < 1) throw Error("generate_events: supersample must be >= 1");

    const int w = view.width > 0 ? view.width : scene.width;
    const int h = view.height > 0 ? view.height : scene.height;
    const ViewMap vm{view.dx, view.dy, view.r};
    const double t_end = seconds(scene.duration);
    // Half-diagonal of one mapped pixel square: every sub-pixel sample lies
    // within this distance of the mapped pixel center.
    const double inflate = 0.5 * std::sqrt(2.0) * std::abs(vm.r) + 1e-9;

    std::vector<std::vector<Event>> rows(h);
#pragma omp parallel for schedule(dynamic)
    for (int y = 0; y < h; ++y) {
        std::vector<Interval> windows;
        for (int x = 0; x < w; ++x) {
            windows.clear();
            const double px = vm.to_scene_x(x + 0.5);
            const double py = vm.to_scene_y(y + 0.5);
            for (const SceneObject& o : scene.objects) {
                if (o.vx == 0.0 && o.vy == 0.0) continue;
                Interval iv;
                if (active_interval(o, px, py, inflate, t_end, iv)) windows.push_back(iv);
            }
            if (windows.empty()) continue;
            std::sort(windows.begin(), windows.end(),
                      [](const Interval& a, const Interval& b) { return a.a < b.a; });
            // Merge overlapping windows so each step is simulated once.
            std::size_t merged = 0;
            for (std::size_t i = 1; i < windows.size(); ++i) {
                if (windows[i].a <= windows[merged].b) {
                    windows[merged].b = std::max(windows[merged].b, windows[i].b);
                } else {
                    windows[++merged] = windows[i];
                }
            }
            windows.resize(merged + 1);
            simulate_pixel(scene, model, vm, x, y, supersample, windows, rows[y]);
        }
    }

    EventStream out;
    out.width = w;
    out.height = h;
    std::size_t total = 0;
    for (const auto& r : rows) total += r.size();
    out.events.reserve(total);
    for (const auto& r : rows) out.events.insert(out.events.end(), r.begin(), r.end());
    std::stable_sort(out.events.begin(), out.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    return out;
}

// --- Scene files ----------------------------------------------------------------

namespace {

double parse_double(std::string_view field, int line_no) {
    std::string buf(field);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || buf.empty()) {
        throw Error(detail::msg("malformed number '", buf, "' at line ", line_no));
    }
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

} // namespace

SceneSpec parse_scene(std::string_view text) {
    SceneSpec scene;
    SceneObject* current = nullptr;
    int line_no = 0;
    std::size_t start = 0;

    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        std::string_view line = (end == std::string_view::npos) ? text.substr(start)
                                                                : text.substr(start, end - start);
        start = (end == std::string_view::npos) ? text.size() + 1 : end + 1;
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line == "[object]") {
            scene.objects.emplace_back();
            current = &scene.objects.back();
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(detail::msg("scene file line ", line_no, ": expected key=value, got '",
                                    std::string(line), "'"));
        }
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));

        auto pair = [&](double& a, double& b) {
            const std::size_t comma = value.find(',');
            if (comma == std::string_view::npos) {
                throw Error(detail::msg("scene file line ", line_no, ": '", std::string(key),
                                        "' expects two comma-separated numbers"));
            }
            a = parse_double(trim(value.substr(0, comma)), line_no);
            b = parse_double(trim(value.substr(comma + 1)), line_no);
        };

        if (current == nullptr) {
            if (key == "width") scene.width = static_cast<int>(parse_double(value, line_no));
            else if (key == "height") scene.height = static_cast<int>(parse_double(value, line_no));
            else if (key == "background") scene.background = parse_double(value, line_no);
            else if (key == "duration_us") scene.duration = static_cast<Timestamp>(parse_double(value, line_no));
            else throw Error(detail::msg("scene file line ", line_no, ": unknown key '", std::string(key), "'"));
        } else {
            if (key == "shape") {
                if (value == "disc") current->shape = SceneObject::Shape::Disc;
                else if (value == "rect") current->shape = SceneObject::Shape::Rect;
                else throw Error(detail::msg("scene file line ", line_no, ": unknown shape '",
                                             std::string(value), "'"));
            } else if (key == "intensity") current->intensity = parse_double(value, line_no);
            else if (key == "radius") current->radius = parse_double(value, line_no);
            else if (key == "center") pair(current->cx, current->cy);
            else if (key == "velocity") pair(current->vx, current->vy);
            else if (key == "extent") pair(current->extent_x, current->extent_y);
            else throw Error(detail::msg("scene file line ", line_no, ": unknown key '", std::string(key), "'"));
        }
    }
    scene.validate();
    return scene;
}

SceneSpec read_scene_file(const std::filesystem::path& path) {
    return parse_scene(read_text_file(path));
}

std::string write_scene(const SceneSpec& scene) {
    std::string text = detail::msg("width=", scene.width, "\nheight=", scene.height,
                                   "\nbackground=", scene.background,
                                   "\nduration_us=", scene.duration, "\n");
    for (const SceneObject& o : scene.objects) {
        text += "\n[object]\n";
        text += detail::msg("shape=", o.shape == SceneObject::Shape::Disc ? "disc" : "rect", "\n");
        text += detail::msg("intensity=", o.intensity, "\n");
        text += detail::msg("center=", o.cx, ",", o.cy, "\n");
        text += detail::msg("velocity=", o.vx, ",", o.vy, "\n");
        if (o.shape == SceneObject::Shape::Disc) {
            text += detail::msg("radius=", o.radius, "\n");
        } else {
            text += detail::msg("extent=", o.extent_x, ",", o.extent_y, "\n");
        }
    }
    return text;
}

SceneSpec demo_scene() {
    SceneSpec scene;
    scene.width = 96;
    scene.height = 72;
    scene.background = 60.0;
    scene.duration = 480000;
    SceneObject disc;
    disc.shape = SceneObject::Shape::Disc;
    disc.intensity = 200.0;
    disc.radius = 9.0;
    disc.cx = 16.0;
    disc.cy = 36.0;
    disc.vx = 140.0;
    disc.vy = 12.0;
    scene.objects.push_back(disc);
    return scene;
}

} // namespace evfi
