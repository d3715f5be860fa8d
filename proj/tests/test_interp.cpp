#include <doctest.h>

#include <cmath>

#include "evfi/accum.hpp"
#include "evfi/interp.hpp"
#include "evfi/synth.hpp"
#include "helpers.hpp"

using namespace evfi;

namespace {

EventStream empty_stream(int w, int h) {
    EventStream s;
    s.width = w;
    s.height = h;
    return s;
}

} // namespace

TEST_CASE("synthesis_integrate: no events or zero delta is the identity") {
    const auto base = test::random_frame(1, 16, 12);
    const auto events = empty_stream(16, 12);
    const auto fwd = synthesis_integrate(base, events, base.t + 5000, 0.15, 1.0,
                                         IntegrateDirection::ForwardFromLeft);
    CHECK(fwd.pixels == base.pixels);
    const auto same = synthesis_integrate(base, events, base.t, 0.15, 1.0,
                                          IntegrateDirection::ForwardFromLeft);
    CHECK(same.pixels == base.pixels);
}

TEST_CASE("synthesis_integrate: direction preconditions") {
    const auto base = test::random_frame(2, 16, 12);
    const auto events = empty_stream(16, 12);
    CHECK_THROWS_AS(synthesis_integrate(base, events, base.t - 1, 0.15, 1.0,
                                        IntegrateDirection::ForwardFromLeft),
                    Error);
    CHECK_THROWS_AS(synthesis_integrate(base, events, base.t + 1, 0.15, 1.0,
                                        IntegrateDirection::BackwardFromRight),
                    Error);
    CHECK_THROWS_AS(synthesis_integrate(base, empty_stream(4, 4), base.t, 0.15, 1.0,
                                        IntegrateDirection::ForwardFromLeft),
                    Error);
}

TEST_CASE("synthesis_integrate inverts the event model within one threshold") {
    const auto scene = test::small_disc_scene(96.0, 8.0);
    EventCameraModel model;
    const auto events = generate_events(scene, model, 4);

    GrayFrame left = render_frame(scene, 0, 4);
    left.t = 0;
    for (const Timestamp t_target : {Timestamp{90000}, Timestamp{180000}, Timestamp{270000}}) {
        const auto guess = synthesis_integrate(left, events, t_target, model.contrast,
                                               model.epsilon, IntegrateDirection::ForwardFromLeft);
        const auto truth = render_frame(scene, t_target, 4);
        double worst = 0.0;
        for (std::size_t i = 0; i < guess.pixels.size(); ++i) {
            const double err = std::abs(std::log(guess.pixels[i] + model.epsilon) -
                                        std::log(truth.pixels[i] + model.epsilon));
            worst = std::max(worst, err);
        }
        CHECK(worst <= model.contrast);
    }
}

TEST_CASE("estimate_flow: no events give zero flow") {
    const auto flow = estimate_flow(empty_stream(32, 32), 0, 500, 1000, 8, 4);
    for (double v : flow.u) CHECK(v == 0.0);
    for (double v : flow.v) CHECK(v == 0.0);
}

TEST_CASE("estimate_flow: globally shifted pattern reports the doubled shift") {
    // First half holds a textured patch of events; the second half holds the
    // same patch translated by (3, 1). Full-interval flow is twice that.
    EventStream s;
    s.width = 64;
    s.height = 64;
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> dx(16, 39);
    std::uniform_int_distribution<int> dy(16, 39);
    std::vector<std::pair<int, int>> pattern;
    for (int i = 0; i < 400; ++i) pattern.emplace_back(dx(rng), dy(rng));

    for (int rep = 0; rep < 3; ++rep) {
        for (const auto& [x, y] : pattern) s.events.push_back({x, y, 100, 1});
    }
    for (int rep = 0; rep < 3; ++rep) {
        for (const auto& [x, y] : pattern) s.events.push_back({x + 3, y + 1, 600, 1});
    }

    const auto flow = estimate_flow(s, 0, 500, 1000, 8, 6, 2.0);
    // sample at the center of an energized block well inside the pattern
    const int cx = 27, cy = 27;
    CHECK(flow.u_at(cx, cy) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(flow.v_at(cx, cy) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("estimate_flow: preconditions") {
    CHECK_THROWS_AS(estimate_flow(empty_stream(32, 32), 0, 500, 1000, 3, 4), Error);
    CHECK_THROWS_AS(estimate_flow(empty_stream(32, 32), 0, 500, 1000, 8, 0), Error);
    CHECK_THROWS_AS(estimate_flow(empty_stream(4, 4), 0, 500, 1000, 8, 4), Error);
    CHECK_THROWS_AS(estimate_flow(empty_stream(32, 32), 0, 0, 1000, 8, 4), Error);
}

TEST_CASE("warp_frame: identities and uniform shift") {
    const auto frame = test::random_frame(5, 24, 20);
    FlowField zero(24, 20);
    SUBCASE("zero flow is the identity for any tau") {
        for (double tau : {0.0, 0.3, 1.0}) {
            CHECK(warp_frame(frame, zero, tau, IntegrateDirection::ForwardFromLeft).pixels ==
                  frame.pixels);
        }
    }
    SUBCASE("tau=0 from the left is the identity under any flow") {
        FlowField flow(24, 20);
        for (auto& v : flow.u) v = 5.0;
        CHECK(warp_frame(frame, flow, 0.0, IntegrateDirection::ForwardFromLeft).pixels ==
              frame.pixels);
    }
    SUBCASE("uniform integer flow at tau=1 shifts with edge clamping") {
        FlowField flow(24, 20);
        for (auto& v : flow.u) v = 3.0;
        const auto out = warp_frame(frame, flow, 1.0, IntegrateDirection::ForwardFromLeft);
        for (int y = 0; y < 20; ++y) {
            for (int x = 0; x < 24; ++x) {
                CHECK(out.at(x, y) == frame.at(std::max(0, x - 3), y));
            }
        }
    }
}

TEST_CASE("refine_warp: zero residual on identical frames, recovers a shift") {
    // smooth random texture so block matching has gradients to lock onto
    GrayFrame tex(48, 40);
    for (int y = 0; y < 40; ++y) {
        for (int x = 0; x < 48; ++x) {
            tex.at(x, y) = 127.0 + 90.0 * std::sin(x * 0.55) * std::cos(y * 0.37);
        }
    }

    SUBCASE("identical inputs give zero flow") {
        const auto res = refine_warp(tex, tex, 8, 4);
        for (double v : res.u) CHECK(v == 0.0);
        for (double v : res.v) CHECK(v == 0.0);
    }
    SUBCASE("synthesized = warped shifted by (2,0)") {
        GrayFrame shifted(48, 40);
        for (int y = 0; y < 40; ++y) {
            for (int x = 0; x < 48; ++x) {
                shifted.at(x, y) = tex.at(std::clamp(x - 2, 0, 47), y);
            }
        }
        const auto res = refine_warp(tex, shifted, 8, 4);
        // applying the residual must bring the warped frame toward the target
        const auto refined = warp_frame(tex, res, 1.0, IntegrateDirection::ForwardFromLeft);
        double before = 0.0, after = 0.0;
        for (std::size_t i = 0; i < tex.pixels.size(); ++i) {
            before += std::abs(tex.pixels[i] - shifted.pixels[i]);
            after += std::abs(refined.pixels[i] - shifted.pixels[i]);
        }
        CHECK(after <= before);
        // block interiors report the shift
        CHECK(res.u_at(20, 20) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(res.v_at(20, 20) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("blend: convexity") {
    const auto a = test::random_frame(8, 12, 12);
    SUBCASE("all equal inputs reproduce the frame") {
        const auto out = blend(a, a, a, a, 0.25, 0.5);
        for (std::size_t i = 0; i < a.pixels.size(); ++i) {
            CHECK(out.pixels[i] == doctest::Approx(a.pixels[i]).epsilon(1e-15));
        }
    }
    SUBCASE("alpha=1 tau=0.5 is the mean of the warped pair") {
        const auto b = test::random_frame(9, 12, 12);
        const auto out = blend(a, b, a, b, 0.5, 1.0);
        for (std::size_t i = 0; i < a.pixels.size(); ++i) {
            CHECK(out.pixels[i] == doctest::Approx(0.5 * (a.pixels[i] + b.pixels[i])).epsilon(1e-15));
        }
    }
    SUBCASE("output bounded by the per-pixel min/max of the inputs") {
        const auto b = test::random_frame(10, 12, 12);
        const auto c = test::random_frame(11, 12, 12);
        const auto d = test::random_frame(12, 12, 12);
        const auto out = blend(a, b, c, d, 0.7, 0.3);
        for (std::size_t i = 0; i < a.pixels.size(); ++i) {
            const double lo = std::min({a.pixels[i], b.pixels[i], c.pixels[i], d.pixels[i]});
            const double hi = std::max({a.pixels[i], b.pixels[i], c.pixels[i], d.pixels[i]});
            CHECK(out.pixels[i] >= lo - 1e-12);
            CHECK(out.pixels[i] <= hi + 1e-12);
        }
    }
    SUBCASE("tau outside (0,1) is rejected") {
        CHECK_THROWS_AS(blend(a, a, a, a, 0.0, 0.5), Error);
        CHECK_THROWS_AS(blend(a, a, a, a, 1.0, 0.5), Error);
    }
}

TEST_CASE("interpolate: empty events reduce synthesis to a cross-fade") {
    InterpolationRequest request;
    request.left = test::random_frame(20, 32, 24);
    request.left.t = 1000;
    request.right = test::random_frame(21, 32, 24);
    request.right.t = 9000;
    request.events = empty_stream(32, 24);
    request.targets = {2000, 4000, 6000};
    request.method = InterpMethod::Synthesis;

    const auto seq = interpolate(request);
    REQUIRE(seq.frames.size() == 3);
    for (std::size_t j = 0; j < seq.frames.size(); ++j) {
        const double tau = static_cast<double>(request.targets[j]) / 8000.0;
        CHECK(seq.frames[j].t == 1000 + request.targets[j]);
        for (std::size_t i = 0; i < request.left.pixels.size(); ++i) {
            const double expect = (1.0 - tau) * request.left.pixels[i] + tau * request.right.pixels[i];
            CHECK(seq.frames[j].pixels[i] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("interpolate: rejects targets outside the open interval") {
    InterpolationRequest request;
    request.left = test::random_frame(22, 16, 16);
    request.left.t = 0;
    request.right = test::random_frame(23, 16, 16);
    request.right.t = 100;
    request.events = empty_stream(16, 16);
    request.method = InterpMethod::Synthesis;

    request.targets = {0};
    CHECK_THROWS_AS(interpolate(request), Error);
    request.targets = {100};
    CHECK_THROWS_AS(interpolate(request), Error);
    request.targets = {50, 50};
    CHECK_THROWS_AS(interpolate(request), Error);
}

TEST_CASE("upscale_targets: x3 over one pair") {
    const auto targets = upscale_targets(0, 8333, 3);
    REQUIRE(targets.size() == 2);
    CHECK(targets[0] == 2778); // round(8333/3)
    CHECK(targets[1] == 5555); // round(2*8333/3) = round(5555.33)
}

TEST_CASE("upscale arithmetic: every factor in the grid") {
    // five frames, constant gradient, empty events -> pure cross-fades
    FrameSequence seq;
    seq.nominal_fps = {120, 1};
    for (int i = 0; i < 5; ++i) {
        GrayFrame f(16, 16, 40.0 + i, i * 8333);
        seq.frames.push_back(f);
    }
    const auto events = empty_stream(16, 16);
    for (const int n : {3, 6, 10, 12, 25}) {
        UpscaleParams params;
        params.factor = n;
        params.method = InterpMethod::Synthesis;
        const auto out = upscale_sequence(seq, events, params);
        CHECK(out.frames.size() == 5u + 4u * (n - 1));
        for (std::size_t i = 1; i < out.frames.size(); ++i) {
            CHECK(out.frames[i].t > out.frames[i - 1].t);
        }
    }
}

TEST_CASE("interpolate is deterministic") {
    const auto scene = test::small_disc_scene(96.0, 0.0);
    EventCameraModel model;
    model.sim_step = 200;
    const auto events = generate_events(scene, model, 2);

    InterpolationRequest request;
    request.left = render_frame(scene, 100000, 2);
    request.left.t = 100000;
    request.right = render_frame(scene, 150000, 2);
    request.right.t = 150000;
    request.events = events;
    request.targets = upscale_targets(100000, 150000, 6);
    request.method = InterpMethod::Blend;
    request.block = 8;
    request.search_radius = 6;

    const auto a = interpolate(request);
    const auto b = interpolate(request);
    REQUIRE(a.frames.size() == b.frames.size());
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
        CHECK(a.frames[i].pixels == b.frames[i].pixels);
    }
}

TEST_CASE("calibrate_contrast recovers the generator's constant") {
    const auto scene = test::small_disc_scene(96.0, 8.0);
    EventCameraModel model; // contrast 0.15
    const auto events = generate_events(scene, model, 4);

    GrayFrame left = render_frame(scene, 0, 4);
    left.t = 0;
    GrayFrame right = render_frame(scene, 200000, 4);
    right.t = 200000;
    const double c = calibrate_contrast(left, right, events, model.epsilon);
    CHECK(c == doctest::Approx(0.15).epsilon(0.05));
}

TEST_CASE("interpolate_rgb: replicated gray channels match the gray path") {
    const auto scene = test::small_disc_scene(96.0, 0.0);
    EventCameraModel model;
    model.sim_step = 200;
    const auto events = generate_events(scene, model, 2);

    GrayFrame left = render_frame(scene, 50000, 2);
    left.t = 50000;
    GrayFrame right = render_frame(scene, 100000, 2);
    right.t = 100000;

    UpscaleParams params;
    params.method = InterpMethod::Synthesis;
    const std::vector<Timestamp> targets = {25000};

    const auto rgb = interpolate_rgb(gray_to_rgb(left), gray_to_rgb(right), events, targets, params);
    REQUIRE(rgb.size() == 1);

    InterpolationRequest request;
    request.left = left;
    request.right = right;
    request.events = events;
    request.targets = targets;
    request.method = InterpMethod::Synthesis;
    const auto gray = interpolate(request);

    for (int y = 0; y < left.height; ++y) {
        for (int x = 0; x < left.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                CHECK(rgb[0].at(x, y, c) == doctest::Approx(gray.frames[0].at(x, y)).epsilon(1e-12));
            }
        }
    }
}
