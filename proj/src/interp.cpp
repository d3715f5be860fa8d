#include "evfi/interp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "detail.hpp"
#include "evfi/accum.hpp"

namespace evfi {

namespace {

double sample_clamped(const GrayFrame& frame, double sx, double sy) {
    sx = std::clamp(sx, 0.0, static_cast<double>(frame.width - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(frame.height - 1));
    const int x0 = std::min(static_cast<int>(sx), frame.width - 2 >= 0 ? frame.width - 2 : 0);
    const int y0 = std::min(static_cast<int>(sy), frame.height - 2 >= 0 ? frame.height - 2 : 0);
    const double fx = sx - x0;
    const double fy = sy - y0;
    const int x1 = std::min(x0 + 1, frame.width - 1);
    const int y1 = std::min(y0 + 1, frame.height - 1);
    return (1.0 - fy) * ((1.0 - fx) * frame.at(x0, y0) + fx * frame.at(x1, y0)) +
           fy * ((1.0 - fx) * frame.at(x0, y1) + fx * frame.at(x1, y1));
}

double mean_abs_diff(const GrayFrame& a, const GrayFrame& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) acc += std::abs(a.pixels[i] - b.pixels[i]);
    return acc / static_cast<double>(a.pixels.size());
}

void require_same_geometry(const GrayFrame& a, const GrayFrame& b, const char* where) {
    if (a.width != b.width || a.height != b.height) {
        throw Error(detail::msg(where, ": geometry mismatch ", a.width, "x", a.height, " vs ",
                                b.width, "x", b.height));
    }
}

/// Block-matching core shared by event flow and residual refinement:
/// for each block of `cur`, the displacement into `next` minimizing the mean
/// absolute difference, preferring (0,0) on ties. Returns per-block vectors.
struct BlockGrid {
    int bw = 0, bh = 0, block = 0;
    std::vector<double> u, v;
};

BlockGrid match_blocks(const GrayFrame& cur, const GrayFrame& next, int block, int radius,
                       const std::vector<double>* energy, double energy_floor) {
    BlockGrid grid;
    grid.block = block;
    grid.bw = (cur.width + block - 1) / block;
    grid.bh = (cur.height + block - 1) / block;
    grid.u.assign(static_cast<std::size_t>(grid.bw) * grid.bh, 0.0);
    grid.v.assign(static_cast<std::size_t>(grid.bw) * grid.bh, 0.0);

#pragma omp parallel for schedule(dynamic) if (!detail::in_parallel())
    for (int bi = 0; bi < grid.bw * grid.bh; ++bi) {
        const int bx = bi % grid.bw;
        const int by = bi / grid.bw;
        const int x0 = bx * block;
        const int y0 = by * block;
        const int x1 = std::min(x0 + block, cur.width);
        const int y1 = std::min(y0 + block, cur.height);

        if (energy != nullptr) {
            double e = 0.0;
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) e += (*energy)[static_cast<std::size_t>(y) * cur.width + x];
            }
            if (e < energy_floor) continue;
        }

        auto cost = [&](int du, int dv) {
            double acc = 0.0;
            int count = 0;
            for (int y = y0; y < y1; ++y) {
                const int sy = y + dv;
                if (sy < 0 || sy >= cur.height) continue;
                for (int x = x0; x < x1; ++x) {
                    const int sx = x + du;
                    if (sx < 0 || sx >= cur.width) continue;
                    acc += std::abs(cur.at(x, y) - next.at(sx, sy));
                    ++count;
                }
            }
            if (count == 0) return std::numeric_limits<double>::infinity();
            return acc / count;
        };

        double best = cost(0, 0);
        int best_du = 0, best_dv = 0;
        for (int dv = -radius; dv <= radius; ++dv) {
            for (int du = -radius; du <= radius; ++du) {
                if (du == 0 && dv == 0) continue;
                const double c = cost(du, dv);
                if (c < best) {
                    best = c;
                    best_du = du;
                    best_dv = dv;
                }
            }
        }
        grid.u[bi] = best_du;
        grid.v[bi] = best_dv;
    }
    return grid;
}

/// Bilinear interpolation of per-block vectors to a per-pixel field. Block
/// centers sit on a uniform grid with spacing `block`; edges clamp.
FlowField interpolate_blocks(const BlockGrid& grid, int width, int height, double scale) {
    FlowField field(width, height);
    const double center = (grid.block - 1) / 2.0;
#pragma omp parallel for schedule(static) if (!detail::in_parallel())
    for (int y = 0; y < height; ++y) {
        const double gy = (y - center) / grid.block;
        int by0 = static_cast<int>(std::floor(gy));
        double fy = gy - by0;
        if (by0 < 0) { by0 = 0; fy = 0.0; }
        if (by0 >= grid.bh - 1) { by0 = grid.bh - 1; fy = 0.0; }
        const int by1 = std::min(by0 + 1, grid.bh - 1);
        for (int x = 0; x < width; ++x) {
            const double gx = (x - center) / grid.block;
            int bx0 = static_cast<int>(std::floor(gx));
            double fx = gx - bx0;
            if (bx0 < 0) { bx0 = 0; fx = 0.0; }
            if (bx0 >= grid.bw - 1) { bx0 = grid.bw - 1; fx = 0.0; }
            const int bx1 = std::min(bx0 + 1, grid.bw - 1);

            const std::size_t i00 = static_cast<std::size_t>(by0) * grid.bw + bx0;
            const std::size_t i10 = static_cast<std::size_t>(by0) * grid.bw + bx1;
            const std::size_t i01 = static_cast<std::size_t>(by1) * grid.bw + bx0;
            const std::size_t i11 = static_cast<std::size_t>(by1) * grid.bw + bx1;
            const std::size_t px = static_cast<std::size_t>(y) * width + x;
            field.u[px] = scale * ((1.0 - fy) * ((1.0 - fx) * grid.u[i00] + fx * grid.u[i10]) +
                                   fy * ((1.0 - fx) * grid.u[i01] + fx * grid.u[i11]));
            field.v[px] = scale * ((1.0 - fy) * ((1.0 - fx) * grid.v[i00] + fx * grid.v[i10]) +
                                   fy * ((1.0 - fx) * grid.v[i01] + fx * grid.v[i11]));
        }
    }
    return field;
}

} // namespace

GrayFrame synthesis_integrate(const GrayFrame& base, const EventStream& events, Timestamp t_target,
                              double contrast, double epsilon, IntegrateDirection direction) {
    if (contrast <= 0.0 || epsilon <= 0.0) {
        throw Error("synthesis_integrate: contrast and epsilon must be positive");
    }
    if (events.width != base.width || events.height != base.height) {
        throw Error(detail::msg("synthesis_integrate: event geometry ", events.width, "x",
                                events.height, " does not match frame ", base.width, "x",
                                base.height));
    }
    const bool forward = direction == IntegrateDirection::ForwardFromLeft;
    if (forward && t_target < base.t) {
        throw Error(detail::msg("synthesis_integrate: forward target ", t_target,
                                " precedes base frame at ", base.t));
    }
    if (!forward && t_target > base.t) {
        throw Error(detail::msg("synthesis_integrate: backward target ", t_target,
                                " follows base frame at ", base.t));
    }

    GrayFrame out(base.width, base.height, 0.0, t_target);
    if (t_target == base.t) {
        out.pixels = base.pixels;
        return out;
    }
    const Timestamp t0 = forward ? base.t : t_target;
    const Timestamp t1 = forward ? t_target : base.t;
    const AccumulationFrame acc = accumulate(events, t0, t1 - t0, AccumMode::Signed);
    const double sign = forward ? 1.0 : -1.0;

#pragma omp parallel for schedule(static) if (!detail::in_parallel())
    for (int y = 0; y < base.height; ++y) {
        for (int x = 0; x < base.width; ++x) {
            const std::int64_t sum = acc.at(x, y);
            if (sum == 0) {
                out.at(x, y) = base.at(x, y); // exp(0) = 1, kept exact
                continue;
            }
            const double s = sign * static_cast<double>(sum);
            const double v = (base.at(x, y) + epsilon) * std::exp(contrast * s) - epsilon;
            out.at(x, y) = std::clamp(v, 0.0, 255.0);
        }
    }
    return out;
}

FlowField estimate_flow(const EventStream& events, Timestamp t_i, Timestamp t_mid, Timestamp t_end,
                        int block, int search_radius, double energy_floor) {
    if (block < 4) throw Error("estimate_flow: block must be >= 4 pixels");
    if (search_radius < 1) throw Error("estimate_flow: search radius must be >= 1");
    if (!(t_i < t_mid && t_mid < t_end)) {
        throw Error("estimate_flow: need t_i < t_mid < t_end");
    }
    if (events.width < block || events.height < block) {
        throw Error(detail::msg("estimate_flow: frame ", events.width, "x", events.height,
                                " smaller than one ", block, "x", block, " block"));
    }

    const AccumulationFrame first = accumulate(events, t_i, t_mid - t_i);
    const AccumulationFrame second = accumulate(events, t_mid, t_end - t_mid);
    const GrayFrame n1 = normalize_accum(first);
    const GrayFrame n2 = normalize_accum(second);

    std::vector<double> energy(first.values.size());
    for (std::size_t i = 0; i < energy.size(); ++i) {
        energy[i] = std::abs(static_cast<double>(first.values[i]));
    }

    // The two half-interval accumulations are centered half an interval
    // apart, so the matched displacement is doubled to span the full one.
    const BlockGrid grid = match_blocks(n1, n2, block, search_radius, &energy, energy_floor);
    return interpolate_blocks(grid, events.width, events.height, 2.0);
}

GrayFrame warp_frame(const GrayFrame& frame, const FlowField& flow, double tau,
                     IntegrateDirection direction) {
    if (flow.width != frame.width || flow.height != frame.height) {
        throw Error("warp_frame: flow geometry does not match the frame");
    }
    GrayFrame out(frame.width, frame.height, 0.0, frame.t);
    const bool forward = direction == IntegrateDirection::ForwardFromLeft;
    const double s = forward ? -tau : (1.0 - tau);
#pragma omp parallel for schedule(static) if (!detail::in_parallel())
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * frame.width + x;
            out.at(x, y) = sample_clamped(frame, x + s * flow.u[i], y + s * flow.v[i]);
        }
    }
    return out;
}

FlowField refine_warp(const GrayFrame& warped, const GrayFrame& synthesized, int block,
                      int search_radius) {
    require_same_geometry(warped, synthesized, "refine_warp");
    if (warped.width < block || warped.height < block) {
        return FlowField(warped.width, warped.height);
    }
    const BlockGrid grid = match_blocks(warped, synthesized, block, search_radius, nullptr, 0.0);
    // match_blocks finds d with warped(x) ~ synthesized(x + d); applying the
    // backward warp out(x) = warped(x - res(x)) then needs res = d.
    FlowField field = interpolate_blocks(grid, warped.width, warped.height, 1.0);

    const GrayFrame refined = warp_frame(warped, field, 1.0, IntegrateDirection::ForwardFromLeft);
    if (mean_abs_diff(refined, synthesized) > mean_abs_diff(warped, synthesized)) {
        return FlowField(warped.width, warped.height);
    }
    return field;
}

GrayFrame blend(const GrayFrame& warp_left, const GrayFrame& warp_right,
                const GrayFrame& synth_left, const GrayFrame& synth_right, double tau,
                double alpha) {
    require_same_geometry(warp_left, warp_right, "blend");
    require_same_geometry(warp_left, synth_left, "blend");
    require_same_geometry(warp_left, synth_right, "blend");
    if (!(tau > 0.0 && tau < 1.0)) {
        throw Error(detail::msg("blend: tau ", tau, " outside (0,1)"));
    }
    if (alpha < 0.0 || alpha > 1.0) {
        throw Error(detail::msg("blend: alpha ", alpha, " outside [0,1]"));
    }
    const double w_wl = alpha * (1.0 - tau);
    const double w_wr = alpha * tau;
    const double w_sl = (1.0 - alpha) * (1.0 - tau);
    const double w_sr = (1.0 - alpha) * tau;

    GrayFrame out(warp_left.width, warp_left.height);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = w_wl * warp_left.pixels[i] + w_wr * warp_right.pixels[i] +
                        w_sl * synth_left.pixels[i] + w_sr * synth_right.pixels[i];
    }
    return out;
}

FrameSequence interpolate(const InterpolationRequest& request) {
    require_same_geometry(request.left, request.right, "interpolate");
    if (request.left.t >= request.right.t) {
        throw Error("interpolate: left frame must precede the right frame");
    }
    const Timestamp interval = request.right.t - request.left.t;
    Timestamp prev = 0;
    for (Timestamp dt : request.targets) {
        if (dt <= 0 || dt >= interval) {
            throw Error(detail::msg("interpolate: target ", dt, " outside the open interval (0, ",
                                    interval, ")"));
        }
        if (dt <= prev && prev != 0) {
            throw Error("interpolate: targets must be strictly increasing");
        }
        prev = dt;
    }

    const double alpha = request.method == InterpMethod::Synthesis ? 0.0
                         : request.method == InterpMethod::Warp    ? 1.0
                                                                   : request.alpha;
    const bool want_warp = alpha > 0.0;
    const bool want_synth = alpha < 1.0 || request.method == InterpMethod::Blend;

    FlowField flow;
    if (want_warp) {
        const Timestamp mid = request.left.t + interval / 2;
        flow = estimate_flow(request.events, request.left.t, mid, request.right.t, request.block,
                             request.search_radius, request.energy_floor);
    }

    FrameSequence out;
    out.frames.reserve(request.targets.size());
    for (Timestamp dt : request.targets) {
        const Timestamp t_target = request.left.t + dt;
        const double tau = static_cast<double>(dt) / static_cast<double>(interval);

        GrayFrame synth_l, synth_r, warp_l, warp_r;
        if (want_synth) {
            synth_l = synthesis_integrate(request.left, request.events, t_target, request.contrast,
                                          request.epsilon, IntegrateDirection::ForwardFromLeft);
            synth_r = synthesis_integrate(request.right, request.events, t_target, request.contrast,
                                          request.epsilon, IntegrateDirection::BackwardFromRight);
        }
        if (want_warp) {
            warp_l = warp_frame(request.left, flow, tau, IntegrateDirection::ForwardFromLeft);
            warp_r = warp_frame(request.right, flow, tau, IntegrateDirection::BackwardFromRight);
        }

        GrayFrame frame;
        switch (request.method) {
        case InterpMethod::Synthesis:
            frame = blend(synth_l, synth_r, synth_l, synth_r, tau, 0.0);
            break;
        case InterpMethod::Warp:
            frame = blend(warp_l, warp_r, warp_l, warp_r, tau, 1.0);
            break;
        case InterpMethod::Blend: {
            const FlowField res_l = refine_warp(warp_l, synth_l, request.block, request.search_radius);
            const FlowField res_r = refine_warp(warp_r, synth_r, request.block, request.search_radius);
            const GrayFrame ref_l = warp_frame(warp_l, res_l, 1.0, IntegrateDirection::ForwardFromLeft);
            const GrayFrame ref_r = warp_frame(warp_r, res_r, 1.0, IntegrateDirection::ForwardFromLeft);
            frame = blend(ref_l, ref_r, synth_l, synth_r, tau, alpha);
            break;
        }
        }
        frame.t = t_target;
        out.frames.push_back(std::move(frame));
    }
    out.validate();
    return out;
}

std::vector<Timestamp> upscale_targets(Timestamp t_left, Timestamp t_right, int factor) {
    if (factor < 2) throw Error("upscale_targets: factor must be >= 2");
    const Timestamp interval = t_right - t_left;
    if (interval < factor) {
        throw Error(detail::msg("upscale_targets: interval ", interval,
                                "us too short for factor ", factor));
    }
    std::vector<Timestamp> targets;
    targets.reserve(factor - 1);
    for (int j = 1; j < factor; ++j) {
        // round(j * interval / factor), half up, in exact integer arithmetic
        const Timestamp dt = (2 * static_cast<Timestamp>(j) * interval + factor) / (2 * factor);
        targets.push_back(dt);
    }
    for (std::size_t i = 1; i < targets.size(); ++i) {
        if (targets[i] <= targets[i - 1]) {
            throw Error("upscale_targets: rounded targets collide");
        }
    }
    return targets;
}

FrameSequence upscale_sequence(const FrameSequence& seq, const EventStream& events,
                               const UpscaleParams& params) {
    seq.validate();
    if (seq.frames.size() < 2) throw Error("upscale_sequence: need at least two frames");

    FrameSequence out;
    out.nominal_fps = {seq.nominal_fps.num * params.factor, seq.nominal_fps.den};
    for (std::size_t i = 0; i + 1 < seq.frames.size(); ++i) {
        out.frames.push_back(seq.frames[i]);
        InterpolationRequest request;
        request.left = seq.frames[i];
        request.right = seq.frames[i + 1];
        request.events = slice_events(events, seq.frames[i].t, seq.frames[i + 1].t);
        request.targets = upscale_targets(seq.frames[i].t, seq.frames[i + 1].t, params.factor);
        request.contrast = params.contrast;
        request.epsilon = params.epsilon;
        request.method = params.method;
        request.alpha = params.alpha;
        request.block = params.block;
        request.search_radius = params.search_radius;
        request.energy_floor = params.energy_floor;
        FrameSequence mid = interpolate(request);
        for (GrayFrame& f : mid.frames) out.frames.push_back(std::move(f));
    }
    out.frames.push_back(seq.frames.back());
    out.validate();
    return out;
}

double calibrate_contrast(const GrayFrame& left, const GrayFrame& right, const EventStream& events,
                          double epsilon, double lo, double hi) {
    require_same_geometry(left, right, "calibrate_contrast");
    if (!(lo > 0.0 && hi > lo)) throw Error("calibrate_contrast: need 0 < lo < hi");

    auto mse = [&](double c) {
        const GrayFrame guess = synthesis_integrate(left, events, right.t, c, epsilon,
                                                    IntegrateDirection::ForwardFromLeft);
        double acc = 0.0;
        for (std::size_t i = 0; i < guess.pixels.size(); ++i) {
            const double d = guess.pixels[i] - right.pixels[i];
            acc += d * d;
        }
        return acc;
    };

    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = mse(x1);
    double f2 = mse(x2);
    for (int it = 0; it < 80 && (b - a) > 1e-6; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = mse(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = mse(x2);
        }
    }
    return 0.5 * (a + b);
}

SequenceEval evaluate_subsample_upscale(const FrameSequence& original, const EventStream& events,
                                        int subsample, const UpscaleParams& params) {
    original.validate();
    if (subsample < 1) throw Error("evaluate_subsample_upscale: subsample must be >= 1");
    FrameSequence sparse;
    sparse.nominal_fps = {original.nominal_fps.num, original.nominal_fps.den * subsample};
    for (std::size_t i = 0; i < original.frames.size(); i += subsample) {
        sparse.frames.push_back(original.frames[i]);
    }
    if (sparse.frames.size() < 2) {
        throw Error("evaluate_subsample_upscale: subsampled sequence needs at least two frames");
    }

    SequenceEval eval;
    eval.subsample = subsample;
    eval.factor = params.factor;
    eval.positions.assign(params.factor - 1, PositionStats{});
    for (int j = 1; j < params.factor; ++j) eval.positions[j - 1].position = j;

    double total_pi = 0, total_pr = 0, total_si = 0;
    int total_n = 0;
    for (std::size_t i = 0; i + 1 < sparse.frames.size(); ++i) {
        const GrayFrame& left = sparse.frames[i];
        const GrayFrame& right = sparse.frames[i + 1];
        InterpolationRequest request;
        request.left = left;
        request.right = right;
        request.events = slice_events(events, left.t, right.t);
        request.targets = upscale_targets(left.t, right.t, params.factor);
        request.contrast = params.contrast;
        request.epsilon = params.epsilon;
        request.method = params.method;
        request.alpha = params.alpha;
        request.block = params.block;
        request.search_radius = params.search_radius;
        request.energy_floor = params.energy_floor;
        const FrameSequence mid = interpolate(request);

        for (std::size_t j = 0; j < mid.frames.size(); ++j) {
            const GrayFrame& guess = mid.frames[j];
            const GrayFrame* truth = nullptr;
            for (const GrayFrame& f : original.frames) {
                if (f.t == guess.t) {
                    truth = &f;
                    break;
                }
            }
            if (truth == nullptr) continue;
            PositionStats& slot = eval.positions[j];
            slot.pairs += 1;
            slot.psnr_interp += psnr(guess, *truth);
            slot.ssim_interp += ssim(guess, *truth);
            slot.psnr_repeat += psnr(left, *truth);
            slot.ssim_repeat += ssim(left, *truth);
        }
    }
    for (PositionStats& slot : eval.positions) {
        if (slot.pairs == 0) continue;
        slot.psnr_interp /= slot.pairs;
        slot.ssim_interp /= slot.pairs;
        slot.psnr_repeat /= slot.pairs;
        slot.ssim_repeat /= slot.pairs;
        total_pi += slot.psnr_interp;
        total_pr += slot.psnr_repeat;
        total_si += slot.ssim_interp;
        total_n += 1;
    }
    if (total_n > 0) {
        eval.mean_psnr_interp = total_pi / total_n;
        eval.mean_psnr_repeat = total_pr / total_n;
        eval.mean_ssim_interp = total_si / total_n;
    }
    return eval;
}

std::vector<RgbFrame> interpolate_rgb(const RgbFrame& left, const RgbFrame& right,
                                      const EventStream& events,
                                      const std::vector<Timestamp>& targets,
                                      const UpscaleParams& params) {
    if (left.width != right.width || left.height != right.height) {
        throw Error("interpolate_rgb: geometry mismatch");
    }
    std::vector<RgbFrame> out(targets.size(), RgbFrame(left.width, left.height));
    for (int c = 0; c < 3; ++c) {
        InterpolationRequest request;
        request.left = GrayFrame(left.width, left.height, 0.0, left.t);
        request.right = GrayFrame(right.width, right.height, 0.0, right.t);
        for (int y = 0; y < left.height; ++y) {
            for (int x = 0; x < left.width; ++x) {
                request.left.at(x, y) = left.at(x, y, c);
                request.right.at(x, y) = right.at(x, y, c);
            }
        }
        request.events = events;
        request.targets = targets;
        request.contrast = params.contrast;
        request.epsilon = params.epsilon;
        request.method = params.method;
        request.alpha = params.alpha;
        request.block = params.block;
        request.search_radius = params.search_radius;
        request.energy_floor = params.energy_floor;
        const FrameSequence channel = interpolate(request);
        for (std::size_t j = 0; j < channel.frames.size(); ++j) {
            out[j].t = channel.frames[j].t;
            for (int y = 0; y < left.height; ++y) {
                for (int x = 0; x < left.width; ++x) {
                    out[j].at(x, y, c) = channel.frames[j].at(x, y);
                }
            }
        }
    }
    return out;
}

} // namespace evfi
