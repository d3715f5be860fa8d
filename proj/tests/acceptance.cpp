// Acceptance suite: one self-contained check per criterion, one PASS/FAIL
// line each. Synthetic scenes with known ground truth stand in for recorded
// footage; the CLI binary (EVFI_CLI or --cli) is exercised end to end where
// a criterion concerns the pipeline surface.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evfi/accum.hpp"
#include "evfi/align.hpp"
#include "evfi/interp.hpp"
#include "evfi/io.hpp"
#include "evfi/ref.hpp"
#include "evfi/synth.hpp"

using namespace evfi;

namespace {

int g_failures = 0;
std::string g_cli;
std::filesystem::path g_scratch;

void report(int criterion, const char* what, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion, what,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

int run_cli(const std::string& args, const std::filesystem::path& log) {
    const std::string cmd = g_cli + " " + args + " > " + log.string() + " 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

long long parse_field(const std::string& text, const std::string& key) {
    const auto pos = text.find(key);
    if (pos == std::string::npos) throw Error("missing field " + key);
    return std::atoll(text.c_str() + pos + key.size());
}

SceneSpec alignment_scene(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> vx(150.0, 200.0);
    std::uniform_real_distribution<double> vy(-30.0, 30.0);
    std::uniform_real_distribution<double> cy(40.0, 56.0);
    std::uniform_real_distribution<double> radius(11.0, 14.0);

    SceneSpec scene;
    scene.width = 128;
    scene.height = 96;
    scene.background = 40.0;
    scene.duration = 480000;
    SceneObject disc;
    disc.shape = SceneObject::Shape::Disc;
    disc.intensity = 220.0;
    disc.radius = radius(rng);
    disc.cx = 16.0;
    disc.cy = cy(rng);
    disc.vx = vx(rng);
    disc.vy = vy(rng);
    scene.objects.push_back(disc);
    return scene;
}

// --- criteria 1 and 2: offset recovery through the CLI, curve shape ------------

void criteria_1_and_2() {
    std::mt19937_64 rng(20240811);
    std::uniform_int_distribution<Timestamp> offset_dist(0, 24999);

    bool recovery_ok = true;
    bool runtime_ok = true;
    bool curve_ok = true;
    double worst_err = 0.0;
    double worst_seconds = 0.0;
    double worst_margin = 1e9;
    std::string first_fail;

    for (int i = 0; i < 10; ++i) {
        const SceneSpec scene = alignment_scene(rng);
        const Timestamp injected = offset_dist(rng);
        const auto dir = g_scratch / ("align_" + std::to_string(i));
        std::filesystem::create_directories(dir);
        write_text_file(dir / "scene.txt", write_scene(scene));

        if (run_cli("synth --scene " + (dir / "scene.txt").string() + " --out " + dir.string() +
                        " --shift " + std::to_string(injected),
                    dir / "synth.log") != 0) {
            recovery_ok = false;
            first_fail = "synth failed for scene " + std::to_string(i);
            break;
        }

        const auto start = std::chrono::steady_clock::now();
        const int rc = run_cli("align --frames " + (dir / "manifest.txt").string() + " --events " +
                                   (dir / "events.evb1").string() + " --report " +
                                   (dir / "report.txt").string() + " --curve " +
                                   (dir / "curve.csv").string(),
                               dir / "align.log");
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        worst_seconds = std::max(worst_seconds, seconds);
        if (seconds > 60.0) runtime_ok = false;
        if (rc != 0) {
            recovery_ok = false;
            first_fail = "align failed for scene " + std::to_string(i);
            break;
        }

        const long long recovered = parse_field(read_text_file(dir / "report.txt"), "offset_us=");
        const double err = std::abs(static_cast<double>(recovered - injected));
        worst_err = std::max(worst_err, err);
        if (err > 100.0) {
            recovery_ok = false;
            if (first_fail.empty()) {
                first_fail = "scene " + std::to_string(i) + ": injected " +
                             std::to_string(injected) + " recovered " + std::to_string(recovered);
            }
        }

        // criterion 2 on the emitted curve
        std::vector<double> scores;
        {
            const std::string csv = read_text_file(dir / "curve.csv");
            std::istringstream in(csv);
            std::string line;
            std::getline(in, line); // header
            int m, k;
            double v;
            while (std::getline(in, line)) {
                if (std::sscanf(line.c_str(), "%d,%d,%lf", &m, &k, &v) == 3) scores.push_back(v);
            }
        }
        if (scores.empty()) {
            curve_ok = false;
            continue;
        }
        std::vector<double> sorted = scores;
        std::sort(sorted.begin(), sorted.end());
        const double max_v = sorted.back();
        const std::size_t n = sorted.size();
        const double median =
            (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        const long max_count = std::count(scores.begin(), scores.end(), max_v);
        const double margin = max_v - median;
        worst_margin = std::min(worst_margin, margin);
        if (max_count != 1 || margin < 0.05) curve_ok = false;
    }

    {
        char detail[256];
        std::snprintf(detail, sizeof(detail),
                      "10 scenes, worst |error| %.0f us <= 100 us, worst runtime %.1f s%s%s",
                      worst_err, worst_seconds, first_fail.empty() ? "" : "; ",
                      first_fail.c_str());
        report(1, "temporal offset recovery within one search step", recovery_ok && runtime_ok,
               detail);
    }
    {
        char detail[128];
        std::snprintf(detail, sizeof(detail),
                      "unique global maximum on every curve, worst peak-median margin %.3f >= 0.05",
                      worst_margin);
        report(2, "score curve has a discriminative unique peak", curve_ok, detail);
    }
}

// --- criterion 3: registration exactness ----------------------------------------

void criterion_3() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-80.0, 200.0);
    std::uniform_real_distribution<double> scale(0.2, 5.0);

    bool ok = true;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const double dx = coord(rng), dy = coord(rng), r = scale(rng);
        const Vec2 rgb1{coord(rng), coord(rng)};
        Vec2 rgb2{coord(rng), coord(rng)};
        if (rgb1.x == rgb2.x && rgb1.y == rgb2.y) rgb2.x += 1.0;
        const Vec2 ev1{rgb1.x + dx, rgb1.y + dy};
        const Vec2 ev2{ev1.x + (rgb2.x - rgb1.x) / r, ev1.y + (rgb2.y - rgb1.y) / r};

        const Vec2 shift = estimate_shift(ev1, rgb1);
        const double r_hat = estimate_scale({ev1, rgb1}, {ev2, rgb2});
        const double rel_dx = std::abs(shift.x - dx) / std::max(1.0, std::abs(dx));
        const double rel_dy = std::abs(shift.y - dy) / std::max(1.0, std::abs(dy));
        const double rel_r = std::abs(r_hat - r) / r;
        worst = std::max({worst, rel_dx, rel_dy, rel_r});

        const Projection proj = build_projection({dx, dy, r}, 0, 1920, 1080);
        const Vec2 src{coord(rng), coord(rng)};
        const Vec2 mapped{r * (src.x - dx), r * (src.y - dy)};
        const Vec2 back = unproject_point(proj, mapped);
        const double inv_err = std::max(std::abs(back.x - src.x) / std::max(1.0, std::abs(src.x)),
                                        std::abs(back.y - src.y) / std::max(1.0, std::abs(src.y)));
        worst = std::max(worst, inv_err);
        if (rel_dx > 1e-12 || rel_dy > 1e-12 || rel_r > 1e-12 || inv_err > 1e-12) ok = false;
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail), "50 random registrations, worst relative error %.2e",
                  worst);
    report(3, "shift/scale estimation and inverse projection exact to 1e-12", ok, detail);
}

// --- criterion 4: SSIM oracle equivalence ----------------------------------------

GrayFrame acceptance_random_frame(std::uint64_t seed, int w, int h) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dv(0.0, 255.0);
    GrayFrame f(w, h);
    for (double& p : f.pixels) p = dv(rng);
    return f;
}

void criterion_4() {
    bool ok = true;
    double worst = 0.0;
    for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
        const GrayFrame a = acceptance_random_frame(seed, 32, 32);
        const GrayFrame b = acceptance_random_frame(seed + 500, 32, 32);
        const double diff = std::abs(ssim(a, b) - ref::ssim_direct(a, b));
        worst = std::max(worst, diff);
        if (diff >= 1e-9) ok = false;
    }
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        const GrayFrame f = acceptance_random_frame(seed, 24, 20);
        if (ssim(f, f) != 1.0) ok = false;
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail),
                  "5 random pairs vs direct definition, worst |diff| %.2e < 1e-9; ssim(x,x)=1 exact",
                  worst);
    report(4, "SSIM matches an independent direct-definition oracle", ok, detail);
}

// --- criterion 5: event-model inversion ------------------------------------------

void criterion_5() {
    // The one-residual bound holds between simulation-step boundaries when
    // integration starts from the frame where the reference was initialized
    // (the scene-start frame). The scenes run at sim_step=1 so every integer
    // microsecond is a boundary and the bound applies at the exact targets;
    // the fixture also asserts that no event timestamp coincides with a
    // target, which would make window membership quantization-ambiguous.
    bool ok = true;
    bool fixture_ok = true;
    double worst = 0.0;
    const double vx[] = {90.0, 120.0, 70.0};
    const double vy[] = {10.0, -15.0, 20.0};
    for (int i = 0; i < 3; ++i) {
        SceneSpec scene;
        scene.width = 64;
        scene.height = 48;
        scene.background = 55.0 + 10.0 * i;
        scene.duration = 10000;
        SceneObject disc;
        disc.intensity = 205.0 - 15.0 * i;
        disc.radius = 8.0;
        disc.cx = 20.0;
        disc.cy = 24.0;
        disc.vx = vx[i];
        disc.vy = vy[i];
        scene.objects.push_back(disc);

        EventCameraModel model; // contrast 0.15, epsilon 1
        model.sim_step = 1;
        const EventStream events = generate_events(scene, model, 4);

        const Timestamp t_left = 0;
        const Timestamp t_right = 8333; // one 120 FPS frame interval
        GrayFrame left = render_frame(scene, t_left, 4);
        left.t = t_left;

        for (const double frac : {0.25, 0.5, 0.75}) {
            const Timestamp t_target =
                t_left + static_cast<Timestamp>(std::llround(frac * (t_right - t_left)));
            for (const Event& e : events.events) {
                if (e.t == t_target) fixture_ok = false;
            }
            const GrayFrame truth = render_frame(scene, t_target, 4);
            const GrayFrame fwd = synthesis_integrate(left, events, t_target, model.contrast,
                                                      model.epsilon,
                                                      IntegrateDirection::ForwardFromLeft);
            for (std::size_t p = 0; p < truth.pixels.size(); ++p) {
                const double lt = std::log(truth.pixels[p] + model.epsilon);
                const double ef = std::abs(std::log(fwd.pixels[p] + model.epsilon) - lt);
                worst = std::max(worst, ef);
            }
        }
    }
    if (worst > 0.15) ok = false;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "3 scenes x {1/4,1/2,3/4} of a frame interval, worst log error %.4f <= 0.15%s",
                  worst, fixture_ok ? "" : "; fixture collision with a target timestamp");
    report(5, "synthesis integration inverts the event model within one threshold",
           ok && fixture_ok, detail);
}

// --- criterion 6: interpolation beats the frame-repeat baseline -------------------

void criterion_6() {
    SceneSpec scene;
    scene.width = 96;
    scene.height = 72;
    scene.background = 60.0;
    scene.duration = 480000;
    SceneObject disc;
    disc.intensity = 200.0;
    disc.radius = 10.0;
    disc.cx = 16.0;
    disc.cy = 36.0;
    disc.vx = 120.0;
    disc.vy = 10.0;
    scene.objects.push_back(disc);

    EventCameraModel model;
    const EventStream events = generate_events(scene, model, 4);
    const FrameSequence original = generate_rgb_sequence(scene, {120, 1}, 4);

    UpscaleParams params;
    params.factor = 6;
    params.method = InterpMethod::Blend;
    const SequenceEval eval = evaluate_subsample_upscale(original, events, 6, params);

    bool ok = true;
    double min_margin = 1e9;
    std::ostringstream margins;
    for (const PositionStats& p : eval.positions) {
        const double margin = p.psnr_interp - p.psnr_repeat;
        min_margin = std::min(min_margin, margin);
        if (!(p.psnr_interp > p.psnr_repeat)) ok = false;
        margins << " p" << p.position << "=+" << std::fixed << std::setprecision(1) << margin;
    }
    char detail[192];
    std::snprintf(detail, sizeof(detail),
                  "120->20 FPS, x6 blend vs frame repeat, per-position dB margins:%s",
                  margins.str().c_str());
    report(6, "blend interpolation beats the frame-repeat baseline at every position", ok, detail);
}

// --- criterion 7: upscale arithmetic -----------------------------------------------

void criterion_7() {
    FrameSequence seq;
    seq.nominal_fps = {120, 1};
    for (int i = 0; i < 5; ++i) {
        GrayFrame f(16, 16, 40.0 + i, i * 8333);
        seq.frames.push_back(f);
    }
    EventStream empty;
    empty.width = 16;
    empty.height = 16;

    bool ok = true;
    std::ostringstream counts;
    for (const int n : {3, 6, 10, 12, 25}) {
        UpscaleParams params;
        params.factor = n;
        params.method = InterpMethod::Synthesis;
        const FrameSequence out = upscale_sequence(seq, empty, params);
        const std::size_t expect = 5u + 4u * (n - 1);
        counts << " x" << n << "=" << out.frames.size();
        if (out.frames.size() != expect) ok = false;
        for (std::size_t i = 1; i < out.frames.size(); ++i) {
            if (out.frames[i].t <= out.frames[i - 1].t) ok = false;
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "5-frame input, counts%s match 5+4(N-1), timestamps strictly increasing",
                  counts.str().c_str());
    report(7, "upscale frame-count arithmetic for factors {3,6,10,12,25}", ok, detail);
}

// --- criterion 8: format round trips and corruption fixtures -----------------------

void criterion_8() {
    bool ok = true;
    std::string note = "1e6-event EVB1 identity";

    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> dx(0, 1279);
    std::uniform_int_distribution<int> dy(0, 719);
    std::uniform_int_distribution<Timestamp> dgap(0, 20);
    std::bernoulli_distribution pol(0.5);
    EventStream s;
    s.width = 1280;
    s.height = 720;
    s.events.reserve(1000000);
    Timestamp t = 0;
    for (int i = 0; i < 1000000; ++i) {
        t += dgap(rng);
        s.events.push_back(
            {dx(rng), dy(rng), t, static_cast<std::int8_t>(pol(rng) ? 1 : -1)});
    }
    const auto bytes = write_events_binary(s);
    const EventStream back = parse_events_binary(bytes);
    if (!(back.width == s.width && back.height == s.height && back.events == s.events)) {
        ok = false;
        note = "EVB1 round trip mismatch";
    }

    // CSV <-> EVB1 losslessness on a slice
    EventStream small = s;
    small.events.resize(5000);
    const EventStream via_csv = parse_events_csv(write_events_csv(small));
    if (via_csv.events != small.events) {
        ok = false;
        note = "CSV round trip mismatch";
    }

    int rejected = 0;
    auto expect_reject = [&](std::vector<std::uint8_t> corrupt) {
        try {
            parse_events_binary(corrupt);
        } catch (const Error&) {
            ++rejected;
        }
    };
    {
        auto c = bytes;
        c[0] = 'X';
        expect_reject(std::move(c));
    }
    {
        auto c = bytes;
        c.resize(c.size() - 7);
        expect_reject(std::move(c));
    }
    {
        auto c = bytes;
        c.push_back(0xff);
        expect_reject(std::move(c));
    }
    {
        auto c = bytes;
        c[16 + 12] = 0; // first record's polarity
        expect_reject(std::move(c));
    }
    if (rejected != 4) {
        ok = false;
        note = "only " + std::to_string(rejected) + "/4 corruption fixtures rejected";
    }
    report(8, "event formats round-trip losslessly and reject corruption", ok,
           note + ", 4/4 corrupt fixtures rejected");
}

// --- criterion 9: conservation invariants -------------------------------------------

void criterion_9() {
    bool ok = true;
    double worst_rel = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(seed * 31337);
        std::uniform_int_distribution<int> dx(0, 47);
        std::uniform_int_distribution<int> dy(0, 35);
        std::uniform_int_distribution<Timestamp> dgap(0, 40);
        std::bernoulli_distribution pol(0.5);
        EventStream s;
        s.width = 48;
        s.height = 36;
        Timestamp t = 0;
        for (int i = 0; i < 60000; ++i) {
            t += dgap(rng);
            s.events.push_back(
                {dx(rng), dy(rng), t, static_cast<std::int8_t>(pol(rng) ? 1 : -1)});
        }
        const Timestamp span = s.events.back().t + 1;

        // window additivity, exact integers
        const Timestamp a = span / 5, w1 = span / 3, w2 = span / 4;
        const AccumulationFrame whole = accumulate(s, a, w1 + w2);
        const AccumulationFrame left = accumulate(s, a, w1);
        const AccumulationFrame right = accumulate(s, a + w1, w2);
        for (std::size_t i = 0; i < whole.values.size(); ++i) {
            if (whole.values[i] != left.values[i] + right.values[i]) ok = false;
        }

        // voxel mass conservation within 1e-9 relative
        const VoxelGrid g = to_voxel_grid(s, 0, span, 5);
        std::int64_t polarity_sum = 0;
        for (const Event& e : s.events) polarity_sum += e.p;
        double mass = 0.0;
        for (double v : g.data) mass += v;
        const double rel = std::abs(mass - static_cast<double>(polarity_sum)) /
                           std::max(1.0, std::abs(static_cast<double>(polarity_sum)));
        worst_rel = std::max(worst_rel, rel);
        if (rel > 1e-9) ok = false;
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail),
                  "5 random streams: additivity exact, worst voxel mass error %.2e <= 1e-9",
                  worst_rel);
    report(9, "accumulation additivity and voxel-grid mass conservation", ok, detail);
}

// --- criterion 10: flow recovery ------------------------------------------------------

void criterion_10() {
    bool ok = true;
    std::ostringstream detail;
    detail << "velocities";

    for (const double vx : {48.0, 64.0, 96.0}) {
        SceneSpec scene;
        scene.width = 128;
        scene.height = 96;
        scene.background = 60.0;
        scene.duration = 250000;
        SceneObject disc;
        disc.intensity = 200.0;
        disc.radius = 16.0;
        disc.cx = 32.0;
        disc.cy = 48.0;
        disc.vx = vx;
        disc.vy = 0.0;
        scene.objects.push_back(disc);

        EventCameraModel model;
        const EventStream events = generate_events(scene, model, 2);

        const Timestamp t_i = 50000, t_end = 175000; // 125 ms interval
        const Timestamp t_mid = (t_i + t_end) / 2;
        const int block = 16, radius = 8;
        const double energy_floor = 4.0;
        const double truth = vx * 125000.0 * 1e-6; // displacement over the interval

        const FlowField flow = estimate_flow(events, t_i, t_mid, t_end, block, radius, energy_floor);

        // The checked footprint: pixels with at least 2 accumulated events
        // whose bilinear block support is fully energized, i.e. strictly
        // inside the footprint rather than on its fringe. Block support uses
        // the first-half accumulation, the quantity the estimator gates on.
        const AccumulationFrame acc = accumulate(events, t_i, t_end - t_i);
        const AccumulationFrame first_half = accumulate(events, t_i, t_mid - t_i);
        const int bw = (acc.width + block - 1) / block;
        const int bh = (acc.height + block - 1) / block;
        std::vector<double> block_energy(static_cast<std::size_t>(bw) * bh, 0.0);
        for (int y = 0; y < acc.height; ++y) {
            for (int x = 0; x < acc.width; ++x) {
                block_energy[static_cast<std::size_t>(y / block) * bw + x / block] +=
                    std::abs(static_cast<double>(first_half.at(x, y)));
            }
        }
        auto block_ok = [&](int bx, int by) {
            bx = std::clamp(bx, 0, bw - 1);
            by = std::clamp(by, 0, bh - 1);
            return block_energy[static_cast<std::size_t>(by) * bw + bx] >= energy_floor;
        };

        int checked = 0, good = 0;
        double worst = 0.0;
        const double center = (block - 1) / 2.0;
        for (int y = 0; y < acc.height; ++y) {
            for (int x = 0; x < acc.width; ++x) {
                if (std::abs(acc.at(x, y)) < 2) continue;
                const int bx0 = static_cast<int>(std::floor((x - center) / block));
                const int by0 = static_cast<int>(std::floor((y - center) / block));
                if (!block_ok(bx0, by0) || !block_ok(bx0 + 1, by0) || !block_ok(bx0, by0 + 1) ||
                    !block_ok(bx0 + 1, by0 + 1)) {
                    continue;
                }
                ++checked;
                const double mag = std::hypot(flow.u_at(x, y), flow.v_at(x, y));
                const double err = std::abs(mag - truth);
                worst = std::max(worst, err);
                if (err <= 1.0) ++good;
            }
        }
        const bool this_ok = checked > 0 && good == checked;
        if (!this_ok) ok = false;
        detail << " " << vx << "px/s:|err|<=" << std::fixed << std::setprecision(2) << worst
               << "px over " << checked << "px";
    }
    report(10, "block-matching flow recovers disc velocity within 1 px", ok, detail.str());
}

} // namespace

int main(int argc, char** argv) {
    const char* env = std::getenv("EVFI_CLI");
    if (env != nullptr) g_cli = env;
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--cli") == 0 && i + 1 < argc) {
            g_cli = argv[++i];
        } else {
            selected.insert(std::atoi(argv[i]));
        }
    }
    const bool needs_cli = selected.empty() || selected.count(1) || selected.count(2);
    if (needs_cli && g_cli.empty()) {
        std::fprintf(stderr, "criteria 1-2 need the CLI binary: set EVFI_CLI or pass --cli PATH\n");
        return 2;
    }

    g_scratch = std::filesystem::temp_directory_path() / "evfi_acceptance";
    std::filesystem::remove_all(g_scratch);
    std::filesystem::create_directories(g_scratch);

    auto want = [&](int c) { return selected.empty() || selected.count(c) > 0; };

    try {
        if (want(1) || want(2)) criteria_1_and_2();
        if (want(3)) criterion_3();
        if (want(4)) criterion_4();
        if (want(5)) criterion_5();
        if (want(6)) criterion_6();
        if (want(7)) criterion_7();
        if (want(8)) criterion_8();
        if (want(9)) criterion_9();
        if (want(10)) criterion_10();
    } catch (const std::exception& e) {
        std::printf("[FAIL] unexpected exception: %s\n", e.what());
        return 1;
    }

    if (g_failures == 0) {
        std::printf("all selected criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
}
