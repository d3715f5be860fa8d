#ifndef EVFI_INTERP_HPP
#define EVFI_INTERP_HPP

#include <cstdint>
#include <vector>

#include "evfi/types.hpp"

namespace evfi {

/// Per-pixel displacement in pixels spanning one full frame interval.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<double> u;
    std::vector<double> v;

    FlowField() = default;
    FlowField(int w, int h)
        : width(w), height(h),
          u(static_cast<std::size_t>(w) * h, 0.0), v(static_cast<std::size_t>(w) * h, 0.0) {}

    double u_at(int x, int y) const { return u[static_cast<std::size_t>(y) * width + x]; }
    double v_at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

enum class InterpMethod { Synthesis, Warp, Blend };

enum class IntegrateDirection { ForwardFromLeft, BackwardFromRight };

struct InterpolationRequest {
    GrayFrame left;
    GrayFrame right;
    EventStream events;             // registered to frame geometry
    std::vector<Timestamp> targets; // delta-t from left.t, strictly increasing
    double contrast = 0.15;
    double epsilon = 1.0;
    InterpMethod method = InterpMethod::Blend;
    double alpha = 0.5;             // warp weight in the final blend
    int block = 16;
    int search_radius = 8;
    double energy_floor = 4.0;      // events per block below which flow is zero
};

/// Brightness integration: clamp((base + eps) * exp(c * S) - eps, 0, 255)
/// where S is the per-pixel signed polarity sum between base.t and t_target
/// (negated in the backward direction). The exact inverse of the threshold
/// event-camera model.
GrayFrame synthesis_integrate(const GrayFrame& base, const EventStream& events,
                              Timestamp t_target, double contrast, double epsilon,
                              IntegrateDirection direction);

/// Block matching between the normalized accumulations of [t_i, t_mid) and
/// [t_mid, t_end); the per-block displacement is doubled to span the full
/// interval and bilinearly interpolated to a per-pixel field. Blocks whose
/// accumulated event energy is below energy_floor get zero flow.
FlowField estimate_flow(const EventStream& events, Timestamp t_i, Timestamp t_mid,
                        Timestamp t_end, int block, int search_radius,
                        double energy_floor = 4.0);

/// Backward warp with bilinear sampling and edge clamping:
/// from the left frame, out(x) = frame(x - tau * flow(x));
/// from the right frame, out(x) = frame(x + (1 - tau) * flow(x)).
GrayFrame warp_frame(const GrayFrame& frame, const FlowField& flow, double tau,
                     IntegrateDirection direction);

/// Residual block-matching flow from `warped` toward `synthesized`, on
/// intensity images. Guaranteed not to increase the mean absolute difference
/// to `synthesized` when applied (falls back to zero flow otherwise).
FlowField refine_warp(const GrayFrame& warped, const GrayFrame& synthesized, int block,
                      int search_radius);

/// Convex combination with weights alpha*(1-tau), alpha*tau, (1-alpha)*(1-tau),
/// (1-alpha)*tau for (warp_left, warp_right, synth_left, synth_right).
GrayFrame blend(const GrayFrame& warp_left, const GrayFrame& warp_right,
                const GrayFrame& synth_left, const GrayFrame& synth_right, double tau,
                double alpha = 0.5);

/// Runs the requested method for every target and returns the intermediate
/// frames with strictly increasing timestamps inside (left.t, right.t).
FrameSequence interpolate(const InterpolationRequest& request);

/// The N-1 equally spaced intermediate offsets for an xN upscale of one pair.
std::vector<Timestamp> upscale_targets(Timestamp t_left, Timestamp t_right, int factor);

struct UpscaleParams {
    int factor = 3;
    InterpMethod method = InterpMethod::Blend;
    double contrast = 0.15;
    double epsilon = 1.0;
    double alpha = 0.5;
    int block = 16;
    int search_radius = 8;
    double energy_floor = 4.0;
};

/// xN upscale of a whole sequence: M frames in, M + (M-1)(N-1) frames out.
FrameSequence upscale_sequence(const FrameSequence& seq, const EventStream& events,
                               const UpscaleParams& params);

/// Estimates the contrast constant by minimizing the forward-synthesis MSE at
/// the right boundary frame (golden-section search over [lo, hi]).
double calibrate_contrast(const GrayFrame& left, const GrayFrame& right,
                          const EventStream& events, double epsilon,
                          double lo = 0.01, double hi = 1.0);

/// Per-channel interpolation of an RGB pair with the shared event stream.
std::vector<RgbFrame> interpolate_rgb(const RgbFrame& left, const RgbFrame& right,
                                      const EventStream& events,
                                      const std::vector<Timestamp>& targets,
                                      const UpscaleParams& params);

// --- Subsample/upscale evaluation (drives the CLI experiment grid) -----------

struct PositionStats {
    int position = 0;       // 1 .. factor-1 within each pair
    int pairs = 0;          // how many pairs contributed
    double psnr_interp = 0; // means over contributing pairs
    double ssim_interp = 0;
    double psnr_repeat = 0; // frame-repeat baseline (reuse the left frame)
    double ssim_repeat = 0;
};

struct SequenceEval {
    int subsample = 1;
    int factor = 1;
    std::vector<PositionStats> positions;
    double mean_psnr_interp = 0;
    double mean_psnr_repeat = 0;
    double mean_ssim_interp = 0;
};

/// Drops all but every `subsample`-th frame of `original`, upscales back by
/// `params.factor`, and scores the interpolated frames against the held-out
/// originals at their exact timestamps. Interpolated frames without a
/// matching original are skipped.
SequenceEval evaluate_subsample_upscale(const FrameSequence& original, const EventStream& events,
                                        int subsample, const UpscaleParams& params);

} // namespace evfi

#endif
