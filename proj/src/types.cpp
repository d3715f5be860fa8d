#include "evfi/types.hpp"

#include <algorithm>

#include "detail.hpp"

namespace evfi {

void EventStream::validate() const {
    if (width <= 0 || height <= 0) {
        throw Error(detail::msg("invalid sensor geometry ", width, "x", height));
    }
    Timestamp prev = 0;
    bool first = true;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Event& e = events[i];
        if (e.p != 1 && e.p != -1) {
            throw Error(detail::msg("polarity ", static_cast<int>(e.p), " outside {-1,+1} at event ", i));
        }
        if (e.x < 0 || e.x >= width || e.y < 0 || e.y >= height) {
            throw Error(detail::msg("event ", i, " at (", e.x, ",", e.y, ") outside ", width, "x", height));
        }
        if (e.t < 0) {
            throw Error(detail::msg("negative timestamp ", e.t, " at event ", i));
        }
        if (!first && e.t < prev) {
            throw Error(detail::msg("non-monotone timestamps at event ", i, " (", e.t, " after ", prev, ")"));
        }
        prev = e.t;
        first = false;
    }
}

EventStream slice_events(const EventStream& s, Timestamp t0, Timestamp t1) {
    if (t0 > t1) {
        throw Error(detail::msg("slice_events: t0 ", t0, " > t1 ", t1));
    }
    auto cmp = [](const Event& e, Timestamp t) { return e.t < t; };
    auto begin = std::lower_bound(s.events.begin(), s.events.end(), t0, cmp);
    auto end = std::lower_bound(begin, s.events.end(), t1, cmp);

    EventStream out;
    out.width = s.width;
    out.height = s.height;
    out.events.assign(begin, end);
    return out;
}

EventStream shift_events(const EventStream& s, Timestamp delta) {
    EventStream out;
    out.width = s.width;
    out.height = s.height;
    out.events.reserve(s.events.size());
    for (const Event& e : s.events) {
        if (e.t + delta < 0) {
            throw Error(detail::msg("shift_events: timestamp ", e.t, " + ", delta, " is negative"));
        }
        Event shifted = e;
        shifted.t += delta;
        out.events.push_back(shifted);
    }
    return out;
}

void FrameSequence::validate() const {
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const GrayFrame& f = frames[i];
        if (f.width != frames[0].width || f.height != frames[0].height) {
            throw Error(detail::msg("frame ", i, " geometry ", f.width, "x", f.height,
                                    " differs from ", frames[0].width, "x", frames[0].height));
        }
        if (i > 0 && f.t <= frames[i - 1].t) {
            throw Error(detail::msg("frame timestamps not strictly increasing at index ", i));
        }
    }
}

GrayFrame to_grayscale(const RgbFrame& frame) {
    GrayFrame out(frame.width, frame.height, 0.0, frame.t);
    const std::size_t n = static_cast<std::size_t>(frame.width) * frame.height;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = frame.pixels[i * 3 + 0];
        const double g = frame.pixels[i * 3 + 1];
        const double b = frame.pixels[i * 3 + 2];
        // 0.299 R + 0.587 G + 0.114 B, written so that (v,v,v) -> v is exact.
        out.pixels[i] = b + 0.299 * (r - b) + 0.587 * (g - b);
    }
    return out;
}

} // namespace evfi
