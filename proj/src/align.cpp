#include "evfi/align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "detail.hpp"
#include "evfi/io.hpp"

namespace evfi {

namespace {

RealImage accum_to_real(const AccumulationFrame& a) {
    RealImage img(a.width, a.height);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        img.values[i] = static_cast<double>(a.values[i]);
    }
    return img;
}

GrayFrame real_to_gray(const RealImage& img, Timestamp t = 0) {
    GrayFrame out(img.width, img.height, 0.0, t);
    out.pixels = img.values;
    return out;
}

double bilinear(const std::vector<double>& v, int w, int h, double sx, double sy) {
    if (sx < 0.0 || sy < 0.0 || sx > w - 1 || sy > h - 1) return 0.0;
    const int x0 = std::min(static_cast<int>(sx), w - 2 >= 0 ? w - 2 : 0);
    const int y0 = std::min(static_cast<int>(sy), h - 2 >= 0 ? h - 2 : 0);
    const double fx = sx - x0;
    const double fy = sy - y0;
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double v00 = v[static_cast<std::size_t>(y0) * w + x0];
    const double v10 = v[static_cast<std::size_t>(y0) * w + x1];
    const double v01 = v[static_cast<std::size_t>(y1) * w + x0];
    const double v11 = v[static_cast<std::size_t>(y1) * w + x1];
    return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
}

RealImage resize_bilinear(const RealImage& src, int tw, int th) {
    if (src.width == tw && src.height == th) return src;
    RealImage out(tw, th);
    const double sx_scale = tw > 1 ? static_cast<double>(src.width - 1) / (tw - 1) : 0.0;
    const double sy_scale = th > 1 ? static_cast<double>(src.height - 1) / (th - 1) : 0.0;
    for (int y = 0; y < th; ++y) {
        for (int x = 0; x < tw; ++x) {
            out.at(x, y) = bilinear(src.values, src.width, src.height, x * sx_scale, y * sy_scale);
        }
    }
    return out;
}

/// Difference image of two frames in the configured domain, scaled so its
/// maximum is 255 (an all-zero difference stays zero). The EventCount domain
/// holds floor(|log(I_b+1) - log(I_a+1)| / contrast): the number of events an
/// ideal threshold camera emits per pixel for that change, so the correctly
/// shifted accumulation matches it count for count.
GrayFrame difference_image(const GrayFrame& a, const GrayFrame& b, DiffDomain domain,
                           double contrast) {
    if (domain == DiffDomain::Linear) {
        return frame_abs_diff(a, b);
    }
    if (a.width != b.width || a.height != b.height) {
        throw Error("difference_image: geometry mismatch");
    }
    if (contrast <= 0.0) {
        throw Error("difference_image: contrast must be positive");
    }
    GrayFrame d(a.width, a.height, 0.0, b.t);
    double max_v = 0.0;
    for (std::size_t i = 0; i < d.pixels.size(); ++i) {
        d.pixels[i] = std::floor(
            std::abs(std::log(b.pixels[i] + 1.0) - std::log(a.pixels[i] + 1.0)) / contrast);
        max_v = std::max(max_v, d.pixels[i]);
    }
    if (max_v > 0.0) {
        const double scale = 255.0 / max_v;
        for (double& v : d.pixels) v *= scale;
    }
    return d;
}

} // namespace

void AlignConfig::validate(Timestamp subsequence_period) const {
    if (n_candidates < 1 || step < 1 || window < 1 || interleave < 1 || ssim_frames < 1 ||
        start_frame < 0) {
        throw Error("align config: all fields must be positive");
    }
    if (subsequence_period > 0 &&
        static_cast<Timestamp>(n_candidates) * step > 8 * subsequence_period) {
        throw Error(detail::msg("align config: search span ", n_candidates * step,
                                "us exceeds 8x the subsequence frame period (",
                                subsequence_period, "us)"));
    }
}

std::vector<FrameSequence> split_interleaved(const FrameSequence& seq, int factor) {
    if (factor < 1) throw Error("split_interleaved: factor must be >= 1");
    if (static_cast<std::size_t>(factor) > seq.frames.size()) {
        throw Error(detail::msg("split_interleaved: factor ", factor, " exceeds sequence length ",
                                seq.frames.size()));
    }
    std::vector<FrameSequence> out(factor);
    for (int m = 0; m < factor; ++m) {
        out[m].nominal_fps = {seq.nominal_fps.num, seq.nominal_fps.den * factor};
        for (std::size_t i = m; i < seq.frames.size(); i += factor) {
            out[m].frames.push_back(seq.frames[i]);
        }
    }
    return out;
}

Vec2 estimate_shift(const Vec2& feat_event, const Vec2& feat_rgb) {
    return {feat_event.x - feat_rgb.x, feat_event.y - feat_rgb.y};
}

double estimate_scale(const FeaturePair& pair1, const FeaturePair& pair2) {
    const double dex = pair2.event_pt.x - pair1.event_pt.x;
    const double dey = pair2.event_pt.y - pair1.event_pt.y;
    const double dix = pair2.rgb_pt.x - pair1.rgb_pt.x;
    const double diy = pair2.rgb_pt.y - pair1.rgb_pt.y;
    const double d_event = std::sqrt(dex * dex + dey * dey);
    if (d_event == 0.0) {
        throw Error("estimate_scale: coincident event-camera feature points");
    }
    return std::sqrt(dix * dix + diy * diy) / d_event;
}

Projection build_projection(const SpatialRegistration& reg, Timestamp dt_us, int target_width,
                            int target_height) {
    if (!(reg.r > 0.0) || !std::isfinite(reg.r)) {
        throw Error(detail::msg("build_projection: scale ratio ", reg.r, " must be positive"));
    }
    return Projection{reg, dt_us, target_width, target_height};
}

Vec2 unproject_point(const Projection& proj, const Vec2& frame_pt) {
    return {frame_pt.x / proj.registration.r + proj.registration.dx,
            frame_pt.y / proj.registration.r + proj.registration.dy};
}

ProjectedEvent project_event(const Projection& proj, const Event& e) {
    ProjectedEvent out;
    out.x = proj.registration.r * (e.x - proj.registration.dx);
    out.y = proj.registration.r * (e.y - proj.registration.dy);
    out.t = e.t - proj.dt_us;
    out.negative_t = out.t < 0;
    const long long rx = detail::round_half_away(out.x);
    const long long ry = detail::round_half_away(out.y);
    out.out_of_frame = rx < 0 || rx >= proj.target_width || ry < 0 || ry >= proj.target_height;
    return out;
}

ProjectionResult project_stream(const Projection& proj, const EventStream& s) {
    ProjectionResult result;
    result.stream.width = proj.target_width;
    result.stream.height = proj.target_height;
    result.stream.events.reserve(s.events.size());
    for (const Event& e : s.events) {
        const ProjectedEvent p = project_event(proj, e);
        if (p.out_of_frame) {
            ++result.dropped_out_of_frame;
            continue;
        }
        if (p.negative_t) {
            ++result.dropped_negative_t;
            continue;
        }
        Event out;
        out.x = static_cast<std::int32_t>(detail::round_half_away(p.x));
        out.y = static_cast<std::int32_t>(detail::round_half_away(p.y));
        out.t = p.t;
        out.p = e.p;
        result.stream.events.push_back(out);
    }
    std::stable_sort(result.stream.events.begin(), result.stream.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    return result;
}

RealImage resample_registered(const AccumulationFrame& accum, const SpatialRegistration& reg,
                              int target_width, int target_height) {
    if (reg.is_identity() && accum.width == target_width && accum.height == target_height) {
        RealImage img(accum.width, accum.height);
        for (std::size_t i = 0; i < accum.values.size(); ++i) {
            img.values[i] = static_cast<double>(accum.values[i]);
        }
        return img;
    }
    RealImage src = accum_to_real(accum);
    RealImage out(target_width, target_height);
    for (int y = 0; y < target_height; ++y) {
        for (int x = 0; x < target_width; ++x) {
            const double sx = x / reg.r + reg.dx;
            const double sy = y / reg.r + reg.dy;
            out.at(x, y) = bilinear(src.values, src.width, src.height, sx, sy);
        }
    }
    return out;
}

RealImage resample_to_event(const GrayFrame& frame, const SpatialRegistration& reg, int event_width,
                            int event_height) {
    RealImage out(event_width, event_height);
    for (int y = 0; y < event_height; ++y) {
        for (int x = 0; x < event_width; ++x) {
            const double sx = reg.r * (x - reg.dx);
            const double sy = reg.r * (y - reg.dy);
            out.at(x, y) = bilinear(frame.pixels, frame.width, frame.height, sx, sy);
        }
    }
    return out;
}

// --- Coarse scan ----------------------------------------------------------------

Timestamp coarse_offset(const FrameSequence& rgb, const EventStream& events, Timestamp scan_step,
                        AccumMode mode, DiffDomain diff_domain, double contrast) {
    if (rgb.frames.size() < 2) throw Error("coarse_offset: need at least two frames");
    if (events.empty()) throw Error("coarse_offset: empty event stream");
    if (scan_step < 1) throw Error("coarse_offset: scan_step must be positive");

    // Compare over a frame gap of about one accumulation window. With the
    // window length matching the scan step, every true offset overlaps some
    // candidate window; a shorter exposure would leave gaps in the grid.
    const Timestamp frame_period = rgb.frames[1].t - rgb.frames[0].t;
    const std::size_t gap = std::max<std::size_t>(
        1, static_cast<std::size_t>((scan_step + frame_period / 2) / frame_period));
    if (rgb.frames.size() <= gap) throw Error("coarse_offset: too few frames for the scan window");

    // The strongest frame difference carries the most structure.
    std::size_t best_pair = 0;
    double best_energy = -1.0;
    for (std::size_t i = 0; i + gap < rgb.frames.size(); ++i) {
        const GrayFrame d = frame_abs_diff(rgb.frames[i], rgb.frames[i + gap]);
        double energy = 0.0;
        for (double v : d.pixels) energy += v;
        if (energy > best_energy) {
            best_energy = energy;
            best_pair = i;
        }
    }
    const GrayFrame diff =
        difference_image(rgb.frames[best_pair], rgb.frames[best_pair + gap], diff_domain, contrast);
    const Timestamp t_a = rgb.frames[best_pair].t;
    const Timestamp t_b = rgb.frames[best_pair + gap].t;

    const Timestamp ev_min = events.events.front().t;
    const Timestamp ev_max = events.events.back().t;
    if (ev_max - ev_min < t_b - t_a) {
        throw Error("coarse_offset: event stream shorter than one accumulation window");
    }

    const auto floor_div = [](Timestamp a, Timestamp b) {
        return (a >= 0) ? a / b : -((-a + b - 1) / b);
    };
    const Timestamp c_lo = floor_div(ev_min - t_b, scan_step) * scan_step;
    const Timestamp c_hi = floor_div(ev_max - t_a, scan_step) * scan_step + scan_step;

    // Nearly-empty windows at the scan fringes pair zero accumulation with a
    // mostly-zero difference image and score deceptively well; candidates
    // well below the peak activity cannot be the aligned window.
    std::int64_t max_count = 0;
    std::vector<std::pair<Timestamp, std::int64_t>> candidates;
    for (Timestamp c = c_lo; c <= c_hi; c += scan_step) {
        const EventStream in_window = slice_events(events, t_a + c, t_b + c);
        const std::int64_t count = static_cast<std::int64_t>(in_window.size());
        candidates.emplace_back(c, count);
        max_count = std::max(max_count, count);
    }
    if (max_count == 0) throw Error("coarse_offset: no events overlap any candidate window");

    Timestamp best_c = 0;
    double best_score = -2.0;
    for (const auto& [c, count] : candidates) {
        if (count * 4 < max_count) continue;
        const AccumulationFrame acc = accumulate(events, t_a + c, t_b - t_a, mode);
        RealImage img = accum_to_real(acc);
        if (img.width != diff.width || img.height != diff.height) {
            img = resize_bilinear(img, diff.width, diff.height);
        }
        const double score = ssim(normalize_abs(img), diff);
        if (score > best_score) {
            best_score = score;
            best_c = c;
        }
    }
    return best_c;
}

// --- Fine search ----------------------------------------------------------------

TemporalAlignment temporal_search(const FrameSequence& rgb, const EventStream& events,
                                  Timestamp coarse, const SpatialRegistration& reg,
                                  const AlignConfig& cfg, AccumMode mode, SsimDomain domain,
                                  DiffDomain diff_domain) {
    rgb.validate();
    const std::size_t needed =
        static_cast<std::size_t>(cfg.interleave) * (cfg.start_frame + cfg.ssim_frames + 1);
    if (rgb.frames.size() < needed) {
        throw Error(detail::msg("temporal_search: insufficient frames: have ", rgb.frames.size(),
                                ", need at least ", needed));
    }

    const std::vector<FrameSequence> subseqs = split_interleaved(rgb, cfg.interleave);
    for (const FrameSequence& sub : subseqs) {
        if (sub.frames.size() < static_cast<std::size_t>(cfg.start_frame + cfg.ssim_frames + 1)) {
            throw Error("temporal_search: insufficient frames in a subsequence");
        }
    }
    const Timestamp subseq_period = subseqs[0].frames[1].t - subseqs[0].frames[0].t;
    cfg.validate(subseq_period);

    const int fw = rgb.frames[0].width;
    const int fh = rgb.frames[0].height;

    // Difference images (and their spans) are shared by every candidate.
    struct DiffSlot {
        GrayFrame diff;       // frame-camera geometry
        GrayFrame diff_event; // event-camera geometry (event-domain comparison)
        Timestamp t_a = 0;
        Timestamp t_b = 0;
    };
    std::vector<std::vector<DiffSlot>> slots(cfg.interleave);
    for (int m = 0; m < cfg.interleave; ++m) {
        slots[m].resize(cfg.ssim_frames);
        for (int f = 0; f < cfg.ssim_frames; ++f) {
            const GrayFrame& a = subseqs[m].frames[cfg.start_frame + f];
            const GrayFrame& b = subseqs[m].frames[cfg.start_frame + f + 1];
            DiffSlot& slot = slots[m][f];
            slot.diff = difference_image(a, b, diff_domain, cfg.contrast);
            slot.t_a = a.t;
            slot.t_b = b.t;
            if (domain == SsimDomain::EventCamera) {
                slot.diff_event = real_to_gray(
                    resample_to_event(slot.diff, reg, events.width, events.height), b.t);
            }
        }
    }

    TemporalAlignment result;
    result.score_curve.assign(cfg.interleave, std::vector<double>(cfg.n_candidates, 0.0));
    std::vector<std::vector<std::uint8_t>> empty(cfg.interleave,
                                                 std::vector<std::uint8_t>(cfg.n_candidates, 0));

    const int total_cells = cfg.interleave * cfg.n_candidates;
#pragma omp parallel for schedule(dynamic)
    for (int cell = 0; cell < total_cells; ++cell) {
        const int m = cell / cfg.n_candidates;
        const int k = cell % cfg.n_candidates;
        const Timestamp offset = coarse + static_cast<Timestamp>(k) * cfg.step;

        double sum = 0.0;
        std::size_t events_seen = 0;
        for (int f = 0; f < cfg.ssim_frames; ++f) {
            const DiffSlot& slot = slots[m][f];
            const AccumulationFrame acc =
                accumulate(events, slot.t_a + offset, slot.t_b - slot.t_a, mode);
            for (std::int64_t v : acc.values) events_seen += static_cast<std::size_t>(std::abs(v));
            if (domain == SsimDomain::FrameCamera) {
                const RealImage img = resample_registered(acc, reg, fw, fh);
                sum += ssim(normalize_abs(img), slot.diff);
            } else {
                sum += ssim(normalize_accum(acc), slot.diff_event);
            }
        }
        if (events_seen == 0) {
            result.score_curve[m][k] = -1.0;
            empty[m][k] = 1;
        } else {
            result.score_curve[m][k] = sum / cfg.ssim_frames;
        }
    }

    bool any_nonempty = false;
    double best = -2.0;
    for (int m = 0; m < cfg.interleave; ++m) {
        for (int k = 0; k < cfg.n_candidates; ++k) {
            if (empty[m][k]) {
                result.empty_cells.emplace_back(m, k);
                continue;
            }
            any_nonempty = true;
            if (result.score_curve[m][k] > best) {
                best = result.score_curve[m][k];
                result.subsequence = m;
                result.k = k;
            }
        }
    }
    if (!any_nonempty) {
        throw Error("temporal_search: empty event coverage for every candidate");
    }
    result.score = best;
    result.offset_us = coarse + static_cast<Timestamp>(result.k) * cfg.step;
    return result;
}

AlignOutcome run_alignment(const FrameSequence& rgb, const EventStream& events,
                           const SpatialRegistration& reg, const AlignDriverConfig& cfg) {
    AlignOutcome outcome;
    AlignConfig fine = cfg.fine;
    if (cfg.manual_coarse.has_value()) {
        outcome.coarse = *cfg.manual_coarse;
        outcome.fine_start = outcome.coarse;
    } else {
        outcome.coarse = coarse_offset(rgb, events, cfg.coarse_step, cfg.mode, cfg.diff_domain,
                                       cfg.fine.contrast);
        // Cover the coarse scan's +-coarse_step error bound on both sides.
        const Timestamp half_steps = (cfg.coarse_step + fine.step - 1) / fine.step;
        fine.n_candidates = static_cast<int>(2 * half_steps + 1);
        outcome.fine_start = outcome.coarse - half_steps * fine.step;
    }
    outcome.alignment = temporal_search(rgb, events, outcome.fine_start, reg, fine, cfg.mode,
                                        cfg.domain, cfg.diff_domain);
    return outcome;
}

// --- Reports and files -----------------------------------------------------------

void write_score_curve_csv(std::ostream& os, const TemporalAlignment& a) {
    os << "subseq,k,ssim\n";
    char buf[64];
    for (std::size_t m = 0; m < a.score_curve.size(); ++m) {
        for (std::size_t k = 0; k < a.score_curve[m].size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%zu,%zu,%.9f\n", m, k, a.score_curve[m][k]);
            os << buf;
        }
    }
}

void write_align_report(std::ostream& os, const AlignOutcome& o) {
    os << "# temporal alignment report\n";
    os << "# projection convention: y_rgb = r*(y_event - dy), matching the horizontal axis\n";
    os << "coarse_us=" << o.coarse << "\n";
    os << "fine_start_us=" << o.fine_start << "\n";
    os << "flagged_empty=" << o.alignment.empty_cells.size() << "\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "subseq=%d k=%d offset_us=%lld ssim=%.9f\n",
                  o.alignment.subsequence, o.alignment.k,
                  static_cast<long long>(o.alignment.offset_us), o.alignment.score);
    os << buf;
}

SpatialRegistration read_registration_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    SpatialRegistration reg;
    if (std::sscanf(text.c_str(), "dx=%lf dy=%lf r=%lf", &reg.dx, &reg.dy, &reg.r) != 3) {
        throw Error(detail::msg(path.string(), ": expected 'dx=<v> dy=<v> r=<v>'"));
    }
    if (!(reg.r > 0.0)) {
        throw Error(detail::msg(path.string(), ": scale ratio must be positive"));
    }
    return reg;
}

void write_registration_file(const SpatialRegistration& reg, const std::filesystem::path& path) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "dx=%.10g dy=%.10g r=%.10g\n", reg.dx, reg.dy, reg.r);
    write_text_file(path, buf);
}

} // namespace evfi
