#ifndef EVFI_ACCUM_HPP
#define EVFI_ACCUM_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "evfi/types.hpp"

namespace evfi {

/// Signed per-pixel polarity sums over [t0, t0 + window).
struct AccumulationFrame {
    int width = 0;
    int height = 0;
    std::vector<std::int64_t> values;
    Timestamp t0 = 0;
    Timestamp window = 0;

    AccumulationFrame() = default;
    AccumulationFrame(int w, int h, Timestamp start = 0, Timestamp win = 0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0), t0(start), window(win) {}

    std::int64_t at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    std::int64_t& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Signed accumulation keeps polarity sums; unsigned counts every event as +1.
enum class AccumMode { Signed, Unsigned };

AccumulationFrame accumulate(const EventStream& s, Timestamp t0, Timestamp window,
                             AccumMode mode = AccumMode::Signed);

/// Frame k accumulates over [t_start + k*period, t_start + k*period + window).
std::vector<AccumulationFrame> accumulate_sequence(const EventStream& s, Timestamp t_start,
                                                   Timestamp period, Timestamp window, int n,
                                                   AccumMode mode = AccumMode::Signed);

/// B temporal bins of bilinearly splatted polarity mass over [t0, t1).
struct VoxelGrid {
    int width = 0;
    int height = 0;
    int bins = 0;
    std::vector<double> data; // bin-major, then row-major
    Timestamp t0 = 0;
    Timestamp t1 = 0;

    VoxelGrid() = default;
    VoxelGrid(int w, int h, int b, Timestamp start, Timestamp end)
        : width(w), height(h), bins(b),
          data(static_cast<std::size_t>(w) * h * b, 0.0), t0(start), t1(end) {}

    double at(int bin, int x, int y) const {
        return data[(static_cast<std::size_t>(bin) * height + y) * width + x];
    }
    double& at(int bin, int x, int y) {
        return data[(static_cast<std::size_t>(bin) * height + y) * width + x];
    }
};

/// Each event splits its polarity between the two bins bracketing
/// u = (t - t0) * (B - 1) / (t1 - t0). Events outside [t0, t1) are ignored.
VoxelGrid to_voxel_grid(const EventStream& s, Timestamp t0, Timestamp t1, int bins);

/// |values| scaled so the max maps to 255; an all-zero frame stays zero.
GrayFrame normalize_accum(const AccumulationFrame& frame);

/// Same normalization for real-valued images (e.g. resampled accumulations).
GrayFrame normalize_abs(const RealImage& img, Timestamp t = 0);

/// Per-pixel |a - b|; result carries b's timestamp.
GrayFrame frame_abs_diff(const GrayFrame& a, const GrayFrame& b);

/// Mean SSIM, 11x11 Gaussian window sigma=1.5, L=255, valid-region average.
/// Requires matching geometry of at least 11x11.
double ssim(const GrayFrame& a, const GrayFrame& b);

/// 10*log10(255^2 / MSE); +infinity for identical frames.
double psnr(const GrayFrame& a, const GrayFrame& b);

// Voxel grid file format "EVG1": text header (width, height, bins, t0, t1)
// followed by bins*height*width little-endian float64 values, bin-major.
void write_voxel_grid(const VoxelGrid& g, const std::filesystem::path& path);
VoxelGrid read_voxel_grid(const std::filesystem::path& path);

} // namespace evfi

#endif
