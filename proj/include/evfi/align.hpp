#ifndef EVFI_ALIGN_HPP
#define EVFI_ALIGN_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "evfi/accum.hpp"
#include "evfi/types.hpp"

namespace evfi {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// One matched feature: where it appears on the event camera and where the
/// same feature appears on the frame camera.
struct FeaturePair {
    Vec2 event_pt;
    Vec2 rgb_pt;
};

/// Shift (dx, dy) in event-camera pixels and scale ratio r mapping
/// event-camera coordinates onto frame-camera coordinates.
struct SpatialRegistration {
    double dx = 0.0;
    double dy = 0.0;
    double r = 1.0;

    bool is_identity() const { return dx == 0.0 && dy == 0.0 && r == 1.0; }
};

struct AlignConfig {
    int n_candidates = 250;
    Timestamp step = 100;       // microseconds between candidates
    Timestamp window = 25000;   // accumulation window, microseconds
    int interleave = 3;         // number of interleaved subsequences
    int ssim_frames = 10;       // difference images averaged per candidate
    int start_frame = 0;        // first subsequence frame used for differences
    double contrast = 0.15;     // threshold for the EventCount difference domain

    void validate(Timestamp subsequence_period) const;
};

/// Result of the fine temporal search. score_curve[m][k] is the mean SSIM of
/// subsequence m at candidate k; empty_cells lists (m, k) pairs whose
/// accumulation windows contained no events (scored as -1).
struct TemporalAlignment {
    int subsequence = 0;
    int k = 0;
    Timestamp offset_us = 0;
    double score = 0.0;
    std::vector<std::vector<double>> score_curve;
    std::vector<std::pair<int, int>> empty_cells;
};

/// Composed event->frame map: (x, y, t) -> (r*(x-dx), r*(y-dy), t - dt_us).
struct Projection {
    SpatialRegistration registration;
    Timestamp dt_us = 0;
    int target_width = 0;
    int target_height = 0;
};

enum class SsimDomain { FrameCamera, EventCamera };

/// Value domain for the frame-difference images the search compares against.
/// EventCount quantizes |log(I_b + 1) - log(I_a + 1)| by the contrast
/// threshold, i.e. the per-pixel event count an ideal threshold camera would
/// emit for that change; matched windows then agree count-for-count, which
/// pins the score peak on the true offset. Linear uses the plain |I_b - I_a|
/// grayscale difference.
enum class DiffDomain { EventCount, Linear };

/// Subsequence m holds frames m, m+factor, m+2*factor, ...
std::vector<FrameSequence> split_interleaved(const FrameSequence& seq, int factor);

/// Coarse scan over multiples of scan_step: maximizes SSIM between one
/// normalized accumulation frame and the sequence's strongest frame
/// difference. Only used to center the fine search.
Timestamp coarse_offset(const FrameSequence& rgb, const EventStream& events,
                        Timestamp scan_step = 25000, AccumMode mode = AccumMode::Signed,
                        DiffDomain diff_domain = DiffDomain::EventCount,
                        double contrast = 0.15);

/// Fine search of the offset grid {coarse + k*step}. For each subsequence and
/// candidate, events accumulated over each shifted frame-difference interval
/// are registered to frame geometry, normalized and compared by SSIM; scores
/// average over ssim_frames difference images. Ties break toward smaller
/// subsequence index, then smaller k.
TemporalAlignment temporal_search(const FrameSequence& rgb, const EventStream& events,
                                  Timestamp coarse, const SpatialRegistration& reg,
                                  const AlignConfig& cfg,
                                  AccumMode mode = AccumMode::Signed,
                                  SsimDomain domain = SsimDomain::FrameCamera,
                                  DiffDomain diff_domain = DiffDomain::EventCount);

/// (dx, dy) = feature location on the event camera minus location on the
/// frame camera, component-wise.
Vec2 estimate_shift(const Vec2& feat_event, const Vec2& feat_rgb);

/// r = frame-camera feature distance / event-camera feature distance.
double estimate_scale(const FeaturePair& pair1, const FeaturePair& pair2);

Projection build_projection(const SpatialRegistration& reg, Timestamp dt_us,
                            int target_width, int target_height);

/// Closed-form inverse of build_projection's map, on real coordinates.
Vec2 unproject_point(const Projection& proj, const Vec2& frame_pt);

struct ProjectedEvent {
    double x = 0.0;
    double y = 0.0;
    Timestamp t = 0;
    bool out_of_frame = false;
    bool negative_t = false;
};

ProjectedEvent project_event(const Projection& proj, const Event& e);

struct ProjectionResult {
    EventStream stream;
    std::size_t dropped_out_of_frame = 0;
    std::size_t dropped_negative_t = 0;
};

/// Projects every event, rounds coordinates half-away-from-zero, drops
/// out-of-frame or negative-time events, re-sorts by shifted timestamp.
ProjectionResult project_stream(const Projection& proj, const EventStream& s);

/// Resamples an accumulation image into frame-camera geometry through the
/// registration (bilinear, zero outside the source).
RealImage resample_registered(const AccumulationFrame& accum, const SpatialRegistration& reg,
                              int target_width, int target_height);

/// Resamples a grayscale image into event-camera geometry through the
/// inverse registration (used by the event-domain SSIM comparison).
RealImage resample_to_event(const GrayFrame& frame, const SpatialRegistration& reg,
                            int event_width, int event_height);

// --- Pipeline driver (shared by the CLI and the acceptance suite) -----------

struct AlignDriverConfig {
    AlignConfig fine;
    std::optional<Timestamp> manual_coarse; // skip the coarse scan when set
    Timestamp coarse_step = 25000;
    AccumMode mode = AccumMode::Signed;
    SsimDomain domain = SsimDomain::FrameCamera;
    DiffDomain diff_domain = DiffDomain::EventCount;
};

struct AlignOutcome {
    Timestamp coarse = 0;       // coarse estimate (or the manual value)
    Timestamp fine_start = 0;   // offset of candidate k = 0
    TemporalAlignment alignment;
};

/// Runs coarse scan + fine search. In automatic mode the fine grid is
/// widened to 2*(window/step)+1 candidates centered on the coarse estimate so
/// that the coarse scan's +-scan_step error bound is always covered; with a
/// manual coarse estimate the configured candidate count starts there.
AlignOutcome run_alignment(const FrameSequence& rgb, const EventStream& events,
                           const SpatialRegistration& reg, const AlignDriverConfig& cfg);

void write_score_curve_csv(std::ostream& os, const TemporalAlignment& a);
void write_align_report(std::ostream& os, const AlignOutcome& o);

// Registration file: one line, "dx=<v> dy=<v> r=<v>".
SpatialRegistration read_registration_file(const std::filesystem::path& path);
void write_registration_file(const SpatialRegistration& reg, const std::filesystem::path& path);

} // namespace evfi

#endif
