#ifndef EVFI_SYNTH_HPP
#define EVFI_SYNTH_HPP

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "evfi/types.hpp"

namespace evfi {

/// A moving primitive: a disc or an axis-aligned rectangle of constant
/// intensity travelling at constant velocity. Later objects occlude earlier
/// ones.
struct SceneObject {
    enum class Shape { Disc, Rect };
    Shape shape = Shape::Disc;
    double intensity = 255.0;
    double cx = 0.0, cy = 0.0;      // center at t = 0, sub-pixel units
    double vx = 0.0, vy = 0.0;      // pixels per second
    double radius = 1.0;            // disc only
    double extent_x = 1.0;          // rect only, full width
    double extent_y = 1.0;          // rect only, full height
};

struct SceneSpec {
    int width = 0;
    int height = 0;
    double background = 0.0;        // intensity in [0, 255]
    Timestamp duration = 0;         // microseconds
    std::vector<SceneObject> objects;

    void validate() const;
};

/// Optional bi-camera emulation: the event camera observes the scene through
/// pixel map (x, y) -> (r*(x - dx), r*(y - dy)) and may have its own
/// geometry (0 means "same as the scene").
struct CameraView {
    double dx = 0.0;
    double dy = 0.0;
    double r = 1.0;
    int width = 0;
    int height = 0;

    bool is_identity() const { return dx == 0.0 && dy == 0.0 && r == 1.0 && width == 0 && height == 0; }
};

/// Idealized log-intensity threshold event camera. A pixel emits one event of
/// polarity sign(dL) each time |log(I + epsilon) - L_ref| reaches contrast;
/// L_ref advances by exactly +-contrast per event. Optional seeded Gaussian
/// jitter on the threshold is off by default.
struct EventCameraModel {
    double contrast = 0.15;
    double epsilon = 1.0;
    Timestamp sim_step = 100;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Analytic render at time t; each pixel is the mean of supersample^2
/// sub-pixel point samples.
GrayFrame render_frame(const SceneSpec& scene, Timestamp t, int supersample,
                       const CameraView& view = {});

/// Exact intensity of one pixel at time t (the quantity render_frame fills in).
double pixel_intensity(const SceneSpec& scene, int x, int y, Timestamp t, int supersample,
                       const CameraView& view = {});

/// Frames at t = round(k * 1e6 * den / num) for k = 0, 1, ... while t <= duration.
FrameSequence generate_rgb_sequence(const SceneSpec& scene, Rational fps, int supersample,
                                    const CameraView& view = {});

EventStream generate_events(const SceneSpec& scene, const EventCameraModel& model,
                            int supersample = 4, const CameraView& view = {});

/// Replicates a grayscale render into three identical channels.
RgbFrame gray_to_rgb(const GrayFrame& frame);

// Scene files: "key=value" lines for the global fields (width, height,
// background, duration_us), then one "[object]" section per primitive with
// shape=disc|rect, intensity, center=x,y, velocity=vx,vy and radius or
// extent=w,h. '#' starts a comment.
SceneSpec parse_scene(std::string_view text);
SceneSpec read_scene_file(const std::filesystem::path& path);
std::string write_scene(const SceneSpec& scene);

/// Built-in demo scene: one bright disc crossing a darker background.
SceneSpec demo_scene();

} // namespace evfi

#endif
