#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evfi/accum.hpp"
#include "evfi/align.hpp"
#include "evfi/interp.hpp"
#include "evfi/io.hpp"
#include "evfi/synth.hpp"

namespace {

using namespace evfi;

// --- convert -----------------------------------------------------------------

int cmd_convert(const std::string& in, const std::string& out) {
    const EventStream s = read_events_file(in);
    write_events_file(s, out);
    std::cout << "events=" << s.size() << " width=" << s.width << " height=" << s.height << "\n";
    return 0;
}

// --- synth --------------------------------------------------------------------

struct SynthOptions {
    std::string scene_path;
    std::string out_dir;
    long long fps = 120;
    long long shift = 0;
    double contrast = 0.15;
    double epsilon = 1.0;
    long long sim_step = 100;
    int supersample = 4;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    double reg_dx = 0.0, reg_dy = 0.0, reg_r = 1.0;
    int event_width = 0, event_height = 0;
    bool rgb = false;
};

int cmd_synth(const SynthOptions& opt) {
    const SceneSpec scene =
        opt.scene_path.empty() ? demo_scene() : read_scene_file(opt.scene_path);

    EventCameraModel model;
    model.contrast = opt.contrast;
    model.epsilon = opt.epsilon;
    model.sim_step = opt.sim_step;
    model.noise_sigma = opt.noise_sigma;
    model.seed = opt.seed;

    CameraView view;
    view.dx = opt.reg_dx;
    view.dy = opt.reg_dy;
    view.r = opt.reg_r;
    view.width = opt.event_width;
    view.height = opt.event_height;

    const std::filesystem::path dir(opt.out_dir);
    std::filesystem::create_directories(dir);

    const FrameSequence seq = generate_rgb_sequence(scene, {opt.fps, 1}, opt.supersample);
    if (opt.rgb) {
        Manifest m;
        m.nominal_fps = seq.nominal_fps;
        for (std::size_t i = 0; i < seq.frames.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof(name), "frame_%06zu.ppm", i);
            write_ppm(gray_to_rgb(seq.frames[i]), dir / name);
            m.entries.push_back({name, seq.frames[i].t});
        }
        write_manifest(m, dir / "manifest.txt");
    } else {
        write_frame_sequence(seq, dir);
    }

    EventStream events = generate_events(scene, model, opt.supersample, view);
    events = shift_events(events, opt.shift);
    const auto bytes = write_events_binary(events);
    write_binary_file(dir / "events.evb1", bytes);

    write_text_file(dir / "scene.txt", write_scene(scene));
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "offset_us=%lld\ndx=%.10g\ndy=%.10g\nr=%.10g\ncontrast=%.10g\nepsilon=%.10g\n"
                  "seed=%llu\n",
                  opt.shift, opt.reg_dx, opt.reg_dy, opt.reg_r, opt.contrast, opt.epsilon,
                  static_cast<unsigned long long>(opt.seed));
    write_text_file(dir / "ground_truth.txt", buf);

    std::cout << "frames=" << seq.frames.size() << " events=" << events.size() << " out="
              << dir.string() << "\n";
    return 0;
}

// --- register -------------------------------------------------------------------

FeaturePair parse_pair(const std::string& text, const char* what) {
    FeaturePair p;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf", &p.event_pt.x, &p.event_pt.y, &p.rgb_pt.x,
                    &p.rgb_pt.y) != 4) {
        throw Error(std::string(what) + ": expected 'event_x,event_y,rgb_x,rgb_y', got '" + text +
                    "'");
    }
    return p;
}

int cmd_register(const std::string& pair1, const std::string& pair2, const std::string& out) {
    const FeaturePair p1 = parse_pair(pair1, "--pair1");
    const FeaturePair p2 = parse_pair(pair2, "--pair2");
    SpatialRegistration reg;
    const Vec2 shift = estimate_shift(p1.event_pt, p1.rgb_pt);
    reg.dx = shift.x;
    reg.dy = shift.y;
    reg.r = estimate_scale(p1, p2);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "dx=%.10g dy=%.10g r=%.10g\n", reg.dx, reg.dy, reg.r);
    std::cout << buf;
    if (!out.empty()) write_registration_file(reg, out);
    return 0;
}

// --- project ---------------------------------------------------------------------

int cmd_project(const std::string& events_path, const std::string& reg_path, long long offset,
                int width, int height, const std::string& out) {
    const EventStream s = read_events_file(events_path);
    const SpatialRegistration reg =
        reg_path.empty() ? SpatialRegistration{} : read_registration_file(reg_path);
    const Projection proj = build_projection(reg, offset, width, height);
    const ProjectionResult result = project_stream(proj, s);
    write_events_file(result.stream, out);
    std::cout << "projected=" << result.stream.size()
              << " dropped_out_of_frame=" << result.dropped_out_of_frame
              << " dropped_negative_t=" << result.dropped_negative_t << "\n";
    return 0;
}

// --- align -----------------------------------------------------------------------

struct AlignOptions {
    std::string frames_path;
    std::string events_path;
    std::string reg_path;
    std::string report_path;
    std::string curve_path;
    std::optional<long long> manual_coarse;
    long long coarse_step = 25000;
    AlignConfig fine;
    bool unsigned_accum = false;
    std::string domain = "frame";
    std::string diff = "count";
};

int cmd_align(const AlignOptions& opt) {
    const FrameSequence rgb = read_frame_sequence(opt.frames_path);
    const EventStream events = read_events_file(opt.events_path);
    const SpatialRegistration reg =
        opt.reg_path.empty() ? SpatialRegistration{} : read_registration_file(opt.reg_path);

    AlignDriverConfig cfg;
    cfg.fine = opt.fine;
    if (opt.manual_coarse.has_value()) cfg.manual_coarse = *opt.manual_coarse;
    cfg.coarse_step = opt.coarse_step;
    cfg.mode = opt.unsigned_accum ? AccumMode::Unsigned : AccumMode::Signed;
    cfg.domain = opt.domain == "event" ? SsimDomain::EventCamera : SsimDomain::FrameCamera;
    if (opt.diff == "linear") {
        cfg.diff_domain = DiffDomain::Linear;
    } else if (opt.diff == "count") {
        cfg.diff_domain = DiffDomain::EventCount;
    } else {
        throw Error("--ssim-diff must be 'count' or 'linear'");
    }

    const AlignOutcome outcome = run_alignment(rgb, events, reg, cfg);
    write_align_report(std::cout, outcome);
    if (!opt.report_path.empty()) {
        std::ofstream f(opt.report_path);
        write_align_report(f, outcome);
    }
    if (!opt.curve_path.empty()) {
        std::ofstream f(opt.curve_path);
        write_score_curve_csv(f, outcome.alignment);
    }
    return 0;
}

// --- metrics ----------------------------------------------------------------------

GrayFrame load_gray(const std::filesystem::path& path) {
    if (path.extension() == ".ppm") return to_grayscale(read_ppm(path));
    return read_pgm(path);
}

int cmd_metrics(const std::string& a_path, const std::string& b_path) {
    const GrayFrame a = load_gray(a_path);
    const GrayFrame b = load_gray(b_path);
    std::ostringstream os;
    os.precision(9);
    os << "ssim=" << ssim(a, b) << " psnr=" << psnr(a, b) << "\n";
    std::cout << os.str();
    return 0;
}

// --- voxel ------------------------------------------------------------------------

int cmd_voxel(const std::string& events_path, long long t0, long long t1, int bins,
              const std::string& out) {
    const EventStream s = read_events_file(events_path);
    const VoxelGrid g = to_voxel_grid(s, t0, t1, bins);
    write_voxel_grid(g, out);
    double mass = 0.0;
    for (double v : g.data) mass += v;
    std::cout << "bins=" << g.bins << " mass=" << mass << "\n";
    return 0;
}

// --- interp -----------------------------------------------------------------------

struct InterpOptions {
    std::string left_path, right_path;
    long long left_t = 0, right_t = 0;
    std::string events_path;
    std::string sequence_path;
    std::string out_dir;
    std::string report_path;
    int factor = 3;
    int subsample = 0;
    bool grid = false;
    std::string method = "blend";
    double contrast = 0.15;
    double epsilon = 1.0;
    double alpha = 0.5;
    int block = 16;
    int radius = 8;
    double energy_floor = 4.0;
    bool calibrate = false;
};

InterpMethod parse_method(const std::string& name) {
    if (name == "synthesis") return InterpMethod::Synthesis;
    if (name == "warp") return InterpMethod::Warp;
    if (name == "blend") return InterpMethod::Blend;
    throw Error("unknown method '" + name + "' (expected synthesis|warp|blend)");
}

void print_eval(std::ostream& os, const SequenceEval& eval, const std::string& method) {
    char buf[256];
    for (const PositionStats& p : eval.positions) {
        std::snprintf(buf, sizeof(buf),
                      "config subsample=%d factor=%d method=%s position=%d pairs=%d "
                      "psnr=%.4f ssim=%.6f baseline_psnr=%.4f baseline_ssim=%.6f\n",
                      eval.subsample, eval.factor, method.c_str(), p.position, p.pairs,
                      p.psnr_interp, p.ssim_interp, p.psnr_repeat, p.ssim_repeat);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "summary subsample=%d factor=%d method=%s mean_psnr=%.4f mean_ssim=%.6f "
                  "baseline_mean_psnr=%.4f\n",
                  eval.subsample, eval.factor, method.c_str(), eval.mean_psnr_interp,
                  eval.mean_ssim_interp, eval.mean_psnr_repeat);
    os << buf;
}

int cmd_interp(const InterpOptions& opt) {
    UpscaleParams params;
    params.factor = opt.factor;
    params.method = parse_method(opt.method);
    params.contrast = opt.contrast;
    params.epsilon = opt.epsilon;
    params.alpha = opt.alpha;
    params.block = opt.block;
    params.search_radius = opt.radius;
    params.energy_floor = opt.energy_floor;

    const EventStream events = read_events_file(opt.events_path);

    if (!opt.sequence_path.empty()) {
        const FrameSequence original = read_frame_sequence(opt.sequence_path);
        std::ostringstream report;
        std::vector<std::pair<int, int>> combos;
        if (opt.grid) {
            combos = {{3, 3}, {6, 6}, {10, 10}, {12, 12}, {25, 25}};
        } else {
            const int sub = opt.subsample > 0 ? opt.subsample : opt.factor;
            combos = {{sub, opt.factor}};
        }
        for (const auto& [sub, fac] : combos) {
            UpscaleParams p = params;
            p.factor = fac;
            const SequenceEval eval = evaluate_subsample_upscale(original, events, sub, p);
            print_eval(report, eval, opt.method);
        }
        std::cout << report.str();
        if (!opt.report_path.empty()) write_text_file(opt.report_path, report.str());
        if (!opt.out_dir.empty()) {
            FrameSequence sparse;
            sparse.nominal_fps = {original.nominal_fps.num,
                                  original.nominal_fps.den * combos[0].first};
            for (std::size_t i = 0; i < original.frames.size(); i += combos[0].first) {
                sparse.frames.push_back(original.frames[i]);
            }
            UpscaleParams p = params;
            p.factor = combos[0].second;
            const FrameSequence up = upscale_sequence(sparse, events, p);
            write_frame_sequence(up, opt.out_dir);
        }
        return 0;
    }

    // pair mode
    if (opt.left_path.empty() || opt.right_path.empty()) {
        throw Error("interp: need either --sequence or both --left and --right");
    }
    const std::filesystem::path left_path(opt.left_path), right_path(opt.right_path);
    const bool rgb_mode = left_path.extension() == ".ppm";
    GrayFrame left = load_gray(left_path);
    GrayFrame right = load_gray(right_path);
    left.t = opt.left_t;
    right.t = opt.right_t;

    if (opt.calibrate) {
        params.contrast = calibrate_contrast(left, right, events, params.epsilon);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "calibrated_contrast=%.6f\n", params.contrast);
        std::cout << buf;
    }

    if (opt.out_dir.empty()) throw Error("interp: --out is required in pair mode");
    const std::filesystem::path dir(opt.out_dir);
    std::filesystem::create_directories(dir);
    const auto targets = upscale_targets(left.t, right.t, params.factor);

    Manifest manifest;
    manifest.nominal_fps = {static_cast<std::int64_t>(params.factor) * 1000000,
                            right.t - left.t};
    char name[64];

    if (rgb_mode) {
        RgbFrame left_rgb = read_ppm(left_path);
        RgbFrame right_rgb = read_ppm(right_path);
        left_rgb.t = opt.left_t;
        right_rgb.t = opt.right_t;
        const auto mids = interpolate_rgb(left_rgb, right_rgb, events, targets, params);
        write_ppm(left_rgb, dir / "frame_000000.ppm");
        manifest.entries.push_back({"frame_000000.ppm", left_rgb.t});
        for (std::size_t i = 0; i < mids.size(); ++i) {
            std::snprintf(name, sizeof(name), "frame_%06zu.ppm", i + 1);
            write_ppm(mids[i], dir / name);
            manifest.entries.push_back({name, mids[i].t});
        }
        std::snprintf(name, sizeof(name), "frame_%06zu.ppm", mids.size() + 1);
        write_ppm(right_rgb, dir / name);
        manifest.entries.push_back({name, right_rgb.t});
    } else {
        InterpolationRequest request;
        request.left = left;
        request.right = right;
        request.events = events;
        request.targets = targets;
        request.contrast = params.contrast;
        request.epsilon = params.epsilon;
        request.method = params.method;
        request.alpha = params.alpha;
        request.block = params.block;
        request.search_radius = params.search_radius;
        request.energy_floor = params.energy_floor;
        const FrameSequence mids = interpolate(request);

        write_pgm(left, dir / "frame_000000.pgm");
        manifest.entries.push_back({"frame_000000.pgm", left.t});
        for (std::size_t i = 0; i < mids.frames.size(); ++i) {
            std::snprintf(name, sizeof(name), "frame_%06zu.pgm", i + 1);
            write_pgm(mids.frames[i], dir / name);
            manifest.entries.push_back({name, mids.frames[i].t});
        }
        std::snprintf(name, sizeof(name), "frame_%06zu.pgm", mids.frames.size() + 1);
        write_pgm(right, dir / name);
        manifest.entries.push_back({name, right.t});
    }
    write_manifest(manifest, dir / "manifest.txt");
    std::cout << "frames=" << manifest.entries.size() << " out=" << dir.string() << "\n";
    return 0;
}

// --- plot-ssim ----------------------------------------------------------------------

struct CurveRow {
    int subseq = 0;
    int k = 0;
    double ssim_value = 0.0;
};

int cmd_plot_ssim(const std::string& csv_path, const std::string& svg_path) {
    const std::string text = read_text_file(csv_path);
    std::vector<CurveRow> rows;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        CurveRow row;
        if (std::sscanf(line.c_str(), "%d,%d,%lf", &row.subseq, &row.k, &row.ssim_value) != 3) {
            if (line_no == 1) continue; // header
            throw Error("plot-ssim: malformed CSV at line " + std::to_string(line_no));
        }
        rows.push_back(row);
    }
    if (rows.empty()) throw Error("plot-ssim: no data rows in " + csv_path);

    std::map<int, std::vector<CurveRow>> by_subseq;
    double min_s = rows[0].ssim_value, max_s = rows[0].ssim_value;
    int max_k = 0;
    const CurveRow* best = &rows[0];
    for (const CurveRow& r : rows) {
        by_subseq[r.subseq].push_back(r);
        min_s = std::min(min_s, r.ssim_value);
        max_s = std::max(max_s, r.ssim_value);
        max_k = std::max(max_k, r.k);
        if (r.ssim_value > best->ssim_value) best = &r;
    }
    if (max_s == min_s) {
        max_s += 1e-6;
        min_s -= 1e-6;
    }

    const double width = 900, height = 520;
    const double ml = 60, mr = 20, mt = 20, mb = 40;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto px = [&](int k) { return ml + (max_k > 0 ? pw * k / max_k : pw / 2); };
    auto py = [&](double s) { return mt + ph * (1.0 - (s - min_s) / (max_s - min_s)); };

    static const char* palette[] = {"#d62728", "#2ca02c", "#1f77b4", "#9467bd", "#ff7f0e"};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 8
        << "\" text-anchor=\"middle\" font-size=\"14\">time shift index k</text>\n";
    svg << "<text x=\"16\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 " << mt + ph / 2
        << ")\">mean SSIM</text>\n";

    int color = 0;
    for (auto& [subseq, pts] : by_subseq) {
        std::sort(pts.begin(), pts.end(),
                  [](const CurveRow& a, const CurveRow& b) { return a.k < b.k; });
        svg << "<polyline fill=\"none\" stroke=\"" << palette[color % 5]
            << "\" stroke-width=\"1.5\" points=\"";
        for (const CurveRow& r : pts) {
            svg << px(r.k) << "," << py(r.ssim_value) << " ";
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << ml + pw - 90 << "\" y=\"" << mt + 16 + 16 * color
            << "\" font-size=\"13\" fill=\"" << palette[color % 5] << "\">subsequence " << subseq
            << "</text>\n";
        ++color;
    }
    svg << "<circle cx=\"" << px(best->k) << "\" cy=\"" << py(best->ssim_value)
        << "\" r=\"5\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
    svg << "</svg>\n";
    write_text_file(svg_path, svg.str());

    char buf[128];
    std::snprintf(buf, sizeof(buf), "subseq=%d k=%d ssim=%.9f\n", best->subseq, best->k,
                  best->ssim_value);
    std::cout << buf;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-guided frame interpolation: synchronize, register, interpolate"};
    app.require_subcommand(1);

    // convert
    std::string conv_in, conv_out;
    auto* convert = app.add_subcommand("convert", "convert event streams between EVT-CSV and EVB1");
    convert->add_option("input", conv_in, "input .csv or .evb1 file")->required();
    convert->add_option("output", conv_out, "output .csv or .evb1 file")->required();

    // synth
    SynthOptions synth_opt;
    auto* synth = app.add_subcommand("synth", "render a synthetic scene and its event stream");
    synth->add_option("--scene", synth_opt.scene_path, "scene file (defaults to the demo scene)");
    synth->add_option("--out", synth_opt.out_dir, "output directory")->required();
    synth->add_option("--fps", synth_opt.fps, "frame rate (default 120)");
    synth->add_option("--shift", synth_opt.shift, "event timestamp shift to inject, microseconds");
    synth->add_option("--contrast", synth_opt.contrast, "event threshold (default 0.15)");
    synth->add_option("--epsilon", synth_opt.epsilon, "log-intensity floor (default 1)");
    synth->add_option("--sim-step", synth_opt.sim_step, "simulation step, microseconds (default 100)");
    synth->add_option("--supersample", synth_opt.supersample, "anti-aliasing grid (default 4)");
    synth->add_option("--noise-sigma", synth_opt.noise_sigma, "threshold jitter sigma (default 0)");
    synth->add_option("--seed", synth_opt.seed, "jitter seed");
    synth->add_option("--reg-dx", synth_opt.reg_dx, "event camera view shift x");
    synth->add_option("--reg-dy", synth_opt.reg_dy, "event camera view shift y");
    synth->add_option("--reg-r", synth_opt.reg_r, "event camera view scale");
    synth->add_option("--event-width", synth_opt.event_width, "event camera width (default scene)");
    synth->add_option("--event-height", synth_opt.event_height, "event camera height");
    synth->add_flag("--rgb", synth_opt.rgb, "write PPM frames instead of PGM");

    // register
    std::string reg_pair1, reg_pair2, reg_out;
    auto* reg_cmd = app.add_subcommand("register", "estimate shift and scale from two feature pairs");
    reg_cmd->add_option("--pair1", reg_pair1, "event_x,event_y,rgb_x,rgb_y")->required();
    reg_cmd->add_option("--pair2", reg_pair2, "event_x,event_y,rgb_x,rgb_y")->required();
    reg_cmd->add_option("--out", reg_out, "registration file to write");

    // project
    std::string proj_events, proj_reg, proj_out;
    long long proj_offset = 0;
    int proj_w = 0, proj_h = 0;
    auto* project = app.add_subcommand("project", "project an event stream into frame coordinates");
    project->add_option("--events", proj_events, "input events")->required();
    project->add_option("--reg", proj_reg, "registration file (default identity)");
    project->add_option("--offset", proj_offset, "temporal shift dt, microseconds");
    project->add_option("--width", proj_w, "target width")->required();
    project->add_option("--height", proj_h, "target height")->required();
    project->add_option("--out", proj_out, "output events file")->required();

    // align
    AlignOptions align_opt;
    long long align_coarse = 0;
    auto* align = app.add_subcommand("align", "recover the temporal offset between streams");
    align->add_option("--frames", align_opt.frames_path, "frame manifest")->required();
    align->add_option("--events", align_opt.events_path, "event stream")->required();
    align->add_option("--reg", align_opt.reg_path, "registration file (default identity)");
    auto* coarse_opt = align->add_option("--coarse", align_coarse,
                                         "manual coarse offset, microseconds (skips the scan)");
    align->add_option("--coarse-step", align_opt.coarse_step, "coarse scan step (default 25000)");
    align->add_option("--candidates", align_opt.fine.n_candidates,
                      "fine candidates with --coarse (default 250)");
    align->add_option("--step", align_opt.fine.step, "fine step, microseconds (default 100)");
    align->add_option("--window", align_opt.fine.window, "accumulation window (default 25000)");
    align->add_option("--interleave", align_opt.fine.interleave, "subsequences (default 3)");
    align->add_option("--ssim-frames", align_opt.fine.ssim_frames, "difference images (default 10)");
    align->add_option("--ssim-start", align_opt.fine.start_frame, "first difference frame");
    align->add_flag("--unsigned", align_opt.unsigned_accum, "accumulate event counts, not polarity");
    align->add_option("--ssim-domain", align_opt.domain, "compare in 'frame' or 'event' geometry");
    align->add_option("--ssim-diff", align_opt.diff,
                      "difference images: 'count' (threshold-quantized log intensity) or 'linear'");
    align->add_option("--contrast", align_opt.fine.contrast,
                      "threshold for the count difference domain (default 0.15)");
    align->add_option("--report", align_opt.report_path, "report file");
    align->add_option("--curve", align_opt.curve_path, "score curve CSV");

    // metrics
    std::string met_a, met_b;
    auto* metrics = app.add_subcommand("metrics", "print ssim and psnr for two frames");
    metrics->add_option("a", met_a, "first frame (pgm/ppm)")->required();
    metrics->add_option("b", met_b, "second frame (pgm/ppm)")->required();

    // voxel
    std::string vox_events, vox_out;
    long long vox_t0 = 0, vox_t1 = 0;
    int vox_bins = 5;
    auto* voxel = app.add_subcommand("voxel", "serialize an event slice as a voxel grid");
    voxel->add_option("--events", vox_events, "input events")->required();
    voxel->add_option("--t0", vox_t0, "window start, microseconds")->required();
    voxel->add_option("--t1", vox_t1, "window end, microseconds")->required();
    voxel->add_option("--bins", vox_bins, "temporal bins (default 5)");
    voxel->add_option("--out", vox_out, "output grid file")->required();

    // interp
    InterpOptions interp_opt;
    auto* interp = app.add_subcommand("interp", "generate intermediate frames from events");
    interp->add_option("--left", interp_opt.left_path, "left boundary frame");
    interp->add_option("--right", interp_opt.right_path, "right boundary frame");
    interp->add_option("--left-t", interp_opt.left_t, "left timestamp, microseconds");
    interp->add_option("--right-t", interp_opt.right_t, "right timestamp, microseconds");
    interp->add_option("--events", interp_opt.events_path, "registered event stream")->required();
    interp->add_option("--sequence", interp_opt.sequence_path,
                       "frame manifest for subsample/upscale evaluation");
    interp->add_option("--subsample", interp_opt.subsample, "keep every n-th frame");
    interp->add_flag("--grid", interp_opt.grid, "run the standard subsample/upscale grid");
    interp->add_option("--factor", interp_opt.factor, "upscale factor (default 3)");
    interp->add_option("--method", interp_opt.method, "synthesis|warp|blend (default blend)");
    interp->add_option("--contrast", interp_opt.contrast, "contrast constant (default 0.15)");
    interp->add_option("--epsilon", interp_opt.epsilon, "log floor (default 1)");
    interp->add_option("--alpha", interp_opt.alpha, "warp weight in the blend (default 0.5)");
    interp->add_option("--block", interp_opt.block, "block size (default 16)");
    interp->add_option("--radius", interp_opt.radius, "search radius (default 8)");
    interp->add_option("--energy-floor", interp_opt.energy_floor, "events per block (default 4)");
    interp->add_flag("--calibrate", interp_opt.calibrate, "estimate contrast from the boundary pair");
    interp->add_option("--out", interp_opt.out_dir, "output directory");
    interp->add_option("--report", interp_opt.report_path, "report file (sequence mode)");

    // plot-ssim
    std::string plot_csv, plot_svg;
    auto* plot = app.add_subcommand("plot-ssim", "draw the score curve as an SVG");
    plot->add_option("csv", plot_csv, "score curve CSV from align")->required();
    plot->add_option("svg", plot_svg, "output SVG path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (convert->parsed()) return cmd_convert(conv_in, conv_out);
        if (synth->parsed()) return cmd_synth(synth_opt);
        if (reg_cmd->parsed()) return cmd_register(reg_pair1, reg_pair2, reg_out);
        if (project->parsed()) {
            return cmd_project(proj_events, proj_reg, proj_offset, proj_w, proj_h, proj_out);
        }
        if (align->parsed()) {
            if (coarse_opt->count() > 0) align_opt.manual_coarse = align_coarse;
            return cmd_align(align_opt);
        }
        if (metrics->parsed()) return cmd_metrics(met_a, met_b);
        if (voxel->parsed()) return cmd_voxel(vox_events, vox_t0, vox_t1, vox_bins, vox_out);
        if (interp->parsed()) return cmd_interp(interp_opt);
        if (plot->parsed()) return cmd_plot_ssim(plot_csv, plot_svg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
