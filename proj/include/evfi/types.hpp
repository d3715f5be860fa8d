#ifndef EVFI_TYPES_HPP
#define EVFI_TYPES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evfi {

/// Microsecond timestamp. All clocks in this library count integer
/// microseconds from an arbitrary per-device zero.
using Timestamp = std::int64_t;

/// Error thrown by parsers, validators and pipeline stages. The message is
/// the diagnostic; no partially repaired data is ever returned.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    double as_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// One brightness-change event: pixel (x, y), time t in microseconds,
/// polarity p in {-1, +1}.
struct Event {
    std::int32_t x = 0;
    std::int32_t y = 0;
    Timestamp t = 0;
    std::int8_t p = 1;

    friend bool operator==(const Event& a, const Event& b) {
        return a.x == b.x && a.y == b.y && a.t == b.t && a.p == b.p;
    }
};

/// Time-ordered event collection with fixed sensor geometry.
/// Events are non-decreasing in t; ties keep insertion order.
struct EventStream {
    int width = 0;
    int height = 0;
    std::vector<Event> events;

    bool empty() const { return events.empty(); }
    std::size_t size() const { return events.size(); }

    /// Throws Error if any event violates the bounds/ordering invariants.
    void validate() const;
};

/// Returns the sub-stream with t0 <= t < t1 (half-open), order preserved.
EventStream slice_events(const EventStream& s, Timestamp t0, Timestamp t1);

/// Adds delta to every timestamp. Throws if any result would be negative.
EventStream shift_events(const EventStream& s, Timestamp delta);

/// Single-channel frame. Pixels are row-major doubles in [0, 255];
/// t is the capture timestamp in microseconds.
struct GrayFrame {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;
    Timestamp t = 0;

    GrayFrame() = default;
    GrayFrame(int w, int h, double fill = 0.0, Timestamp ts = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill), t(ts) {}

    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Three-channel frame, interleaved RGB, values in [0, 255].
struct RgbFrame {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;
    Timestamp t = 0;

    RgbFrame() = default;
    RgbFrame(int w, int h, double fill = 0.0, Timestamp ts = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill), t(ts) {}

    double at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    double& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

/// Frames sorted by strictly increasing timestamp, one shared geometry.
struct FrameSequence {
    std::vector<GrayFrame> frames;
    Rational nominal_fps{0, 1};

    std::size_t size() const { return frames.size(); }
    void validate() const;
};

/// BT.601 luma: 0.299 R + 0.587 G + 0.114 B. Timestamp preserved.
GrayFrame to_grayscale(const RgbFrame& frame);

/// Unconstrained real-valued image, used for signed or resampled data that
/// does not satisfy the [0, 255] frame invariant.
struct RealImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    RealImage() = default;
    RealImage(int w, int h, double fill = 0.0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

} // namespace evfi

#endif
