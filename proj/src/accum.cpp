#include "evfi/accum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "detail.hpp"
#include "evfi/io.hpp"

namespace evfi {

namespace {

/// Index range [first, last) of events with t0 <= t < t1.
std::pair<std::size_t, std::size_t> event_range(const EventStream& s, Timestamp t0, Timestamp t1) {
    auto cmp = [](const Event& e, Timestamp t) { return e.t < t; };
    auto begin = std::lower_bound(s.events.begin(), s.events.end(), t0, cmp);
    auto end = std::lower_bound(begin, s.events.end(), t1, cmp);
    return {static_cast<std::size_t>(begin - s.events.begin()),
            static_cast<std::size_t>(end - s.events.begin())};
}

} // namespace

AccumulationFrame accumulate(const EventStream& s, Timestamp t0, Timestamp window, AccumMode mode) {
    if (window <= 0) {
        throw Error(detail::msg("accumulate: window ", window, " must be positive"));
    }
    AccumulationFrame frame(s.width, s.height, t0, window);
    const auto [first, last] = event_range(s, t0, t0 + window);

    // Integer adds commute exactly, so chunked parallel accumulation gives
    // the same frame for any schedule or thread count.
    const std::size_t n = last - first;
    if (n >= 262144) {
        constexpr int kChunks = 64;
        std::vector<std::vector<std::int64_t>> partial(kChunks);
#pragma omp parallel for schedule(dynamic)
        for (int c = 0; c < kChunks; ++c) {
            const std::size_t lo = first + n * c / kChunks;
            const std::size_t hi = first + n * (c + 1) / kChunks;
            if (lo == hi) continue;
            auto& buf = partial[c];
            buf.assign(frame.values.size(), 0);
            for (std::size_t i = lo; i < hi; ++i) {
                const Event& e = s.events[i];
                buf[static_cast<std::size_t>(e.y) * s.width + e.x] +=
                    (mode == AccumMode::Signed) ? e.p : 1;
            }
        }
        for (const auto& buf : partial) {
            if (buf.empty()) continue;
            for (std::size_t i = 0; i < frame.values.size(); ++i) frame.values[i] += buf[i];
        }
    } else {
        for (std::size_t i = first; i < last; ++i) {
            const Event& e = s.events[i];
            frame.values[static_cast<std::size_t>(e.y) * s.width + e.x] +=
                (mode == AccumMode::Signed) ? e.p : 1;
        }
    }
    return frame;
}

std::vector<AccumulationFrame> accumulate_sequence(const EventStream& s, Timestamp t_start,
                                                   Timestamp period, Timestamp window, int n,
                                                   AccumMode mode) {
    if (n < 1) {
        throw Error(detail::msg("accumulate_sequence: n ", n, " must be >= 1"));
    }
    std::vector<AccumulationFrame> frames;
    frames.reserve(n);
    for (int k = 0; k < n; ++k) {
        frames.push_back(accumulate(s, t_start + static_cast<Timestamp>(k) * period, window, mode));
    }
    return frames;
}

VoxelGrid to_voxel_grid(const EventStream& s, Timestamp t0, Timestamp t1, int bins) {
    if (t1 <= t0) {
        throw Error(detail::msg("to_voxel_grid: t1 ", t1, " must exceed t0 ", t0));
    }
    if (bins < 1) {
        throw Error(detail::msg("to_voxel_grid: bins ", bins, " must be >= 1"));
    }
    VoxelGrid grid(s.width, s.height, bins, t0, t1);
    const auto [first, last] = event_range(s, t0, t1);
    const double scale = static_cast<double>(bins - 1) / static_cast<double>(t1 - t0);
    const std::size_t plane = static_cast<std::size_t>(s.width) * s.height;

    // Fixed chunk count keeps the floating-point merge order independent of
    // the schedule and the thread count.
    constexpr int kChunks = 64;
    const std::size_t n = last - first;
    if (n >= 262144) {
        std::vector<std::vector<double>> partial(kChunks);
#pragma omp parallel for schedule(dynamic)
        for (int c = 0; c < kChunks; ++c) {
            const std::size_t lo = first + n * c / kChunks;
            const std::size_t hi = first + n * (c + 1) / kChunks;
            if (lo == hi) continue;
            auto& buf = partial[c];
            buf.assign(grid.data.size(), 0.0);
            for (std::size_t i = lo; i < hi; ++i) {
                const Event& e = s.events[i];
                const double u = static_cast<double>(e.t - t0) * scale;
                const int b0 = static_cast<int>(u);
                const double frac = u - b0;
                const std::size_t px = static_cast<std::size_t>(e.y) * s.width + e.x;
                buf[b0 * plane + px] += e.p * (1.0 - frac);
                if (b0 + 1 < bins) buf[(b0 + 1) * plane + px] += e.p * frac;
            }
        }
        for (int c = 0; c < kChunks; ++c) {
            if (partial[c].empty()) continue;
            for (std::size_t i = 0; i < grid.data.size(); ++i) grid.data[i] += partial[c][i];
        }
    } else {
        for (std::size_t i = first; i < last; ++i) {
            const Event& e = s.events[i];
            const double u = static_cast<double>(e.t - t0) * scale;
            const int b0 = static_cast<int>(u);
            const double frac = u - b0;
            const std::size_t px = static_cast<std::size_t>(e.y) * s.width + e.x;
            grid.data[b0 * plane + px] += e.p * (1.0 - frac);
            if (b0 + 1 < bins) grid.data[(b0 + 1) * plane + px] += e.p * frac;
        }
    }
    return grid;
}

GrayFrame normalize_accum(const AccumulationFrame& frame) {
    GrayFrame out(frame.width, frame.height, 0.0, frame.t0);
    std::int64_t max_abs = 0;
    for (std::int64_t v : frame.values) max_abs = std::max(max_abs, std::abs(v));
    if (max_abs == 0) return out;
    const double scale = 255.0 / static_cast<double>(max_abs);
    for (std::size_t i = 0; i < frame.values.size(); ++i) {
        out.pixels[i] = std::abs(static_cast<double>(frame.values[i])) * scale;
    }
    return out;
}

GrayFrame normalize_abs(const RealImage& img, Timestamp t) {
    GrayFrame out(img.width, img.height, 0.0, t);
    double max_abs = 0.0;
    for (double v : img.values) max_abs = std::max(max_abs, std::abs(v));
    if (max_abs == 0.0) return out;
    const double scale = 255.0 / max_abs;
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        out.pixels[i] = std::abs(img.values[i]) * scale;
    }
    return out;
}

GrayFrame frame_abs_diff(const GrayFrame& a, const GrayFrame& b) {
    if (a.width != b.width || a.height != b.height) {
        throw Error(detail::msg("frame_abs_diff: geometry mismatch ", a.width, "x", a.height, " vs ",
                                b.width, "x", b.height));
    }
    GrayFrame out(a.width, a.height, 0.0, b.t);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = std::abs(a.pixels[i] - b.pixels[i]);
    }
    return out;
}

// --- SSIM ---------------------------------------------------------------------

namespace ssim_detail {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

const std::array<double, kWindow>& gaussian_kernel() {
    static const std::array<double, kWindow> kernel = [] {
        std::array<double, kWindow> k{};
        double sum = 0.0;
        for (int i = 0; i < kWindow; ++i) {
            const double d = i - (kWindow - 1) / 2.0;
            k[i] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
            sum += k[i];
        }
        for (double& v : k) v /= sum;
        return k;
    }();
    return kernel;
}

/// Valid-region separable Gaussian filter: output is (h-10) x (w-10).
void filter_valid(const std::vector<double>& src, int w, int h, std::vector<double>& tmp,
                  std::vector<double>& dst) {
    const auto& g = gaussian_kernel();
    const int ow = w - kWindow + 1;
    const int oh = h - kWindow + 1;
    tmp.resize(static_cast<std::size_t>(ow) * h);
    dst.resize(static_cast<std::size_t>(ow) * oh);

#pragma omp parallel for schedule(static) if (!detail::in_parallel())
    for (int y = 0; y < h; ++y) {
        const double* row = src.data() + static_cast<std::size_t>(y) * w;
        double* out = tmp.data() + static_cast<std::size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWindow; ++i) acc += g[i] * row[x + i];
            out[x] = acc;
        }
    }
#pragma omp parallel for schedule(static) if (!detail::in_parallel())
    for (int y = 0; y < oh; ++y) {
        double* out = dst.data() + static_cast<std::size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWindow; ++i) acc += g[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[x] = acc;
        }
    }
}

} // namespace ssim_detail

double ssim(const GrayFrame& a, const GrayFrame& b) {
    using namespace ssim_detail;
    if (a.width != b.width || a.height != b.height) {
        throw Error(detail::msg("ssim: geometry mismatch ", a.width, "x", a.height, " vs ", b.width,
                                "x", b.height));
    }
    if (a.width < kWindow || a.height < kWindow) {
        throw Error(detail::msg("ssim: frame ", a.width, "x", a.height, " smaller than the ", kWindow,
                                "x", kWindow, " window"));
    }

    const std::size_t n = a.pixels.size();
    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a.pixels[i] * a.pixels[i];
        bb[i] = b.pixels[i] * b.pixels[i];
        ab[i] = a.pixels[i] * b.pixels[i];
    }

    std::vector<double> tmp, mu1, mu2, m11, m22, m12;
    filter_valid(a.pixels, a.width, a.height, tmp, mu1);
    filter_valid(b.pixels, a.width, a.height, tmp, mu2);
    filter_valid(aa, a.width, a.height, tmp, m11);
    filter_valid(bb, a.width, a.height, tmp, m22);
    filter_valid(ab, a.width, a.height, tmp, m12);

    const int ow = a.width - kWindow + 1;
    const int oh = a.height - kWindow + 1;

    // Per-row partial sums keep the reduction order fixed for any schedule.
    std::vector<double> row_sum(oh, 0.0);
#pragma omp parallel for schedule(static) if (!detail::in_parallel())
    for (int y = 0; y < oh; ++y) {
        double acc = 0.0;
        for (int x = 0; x < ow; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * ow + x;
            const double s1 = m11[i] - mu1[i] * mu1[i];
            const double s2 = m22[i] - mu2[i] * mu2[i];
            const double s12 = m12[i] - mu1[i] * mu2[i];
            const double num = (2.0 * mu1[i] * mu2[i] + kC1) * (2.0 * s12 + kC2);
            const double den = (mu1[i] * mu1[i] + mu2[i] * mu2[i] + kC1) * (s1 + s2 + kC2);
            acc += num / den;
        }
        row_sum[y] = acc;
    }
    double total = 0.0;
    for (double v : row_sum) total += v;
    return total / (static_cast<double>(ow) * oh);
}

double psnr(const GrayFrame& a, const GrayFrame& b) {
    if (a.width != b.width || a.height != b.height) {
        throw Error(detail::msg("psnr: geometry mismatch ", a.width, "x", a.height, " vs ", b.width,
                                "x", b.height));
    }
    double se = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        se += d * d;
    }
    if (se == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = se / static_cast<double>(a.pixels.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

// --- Voxel grid file ----------------------------------------------------------

void write_voxel_grid(const VoxelGrid& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(detail::msg("cannot write ", path.string()));
    out << "EVG1\n"
        << "width " << g.width << "\n"
        << "height " << g.height << "\n"
        << "bins " << g.bins << "\n"
        << "t0 " << g.t0 << "\n"
        << "t1 " << g.t1 << "\n"
        << "data float64le\n";
    out.write(reinterpret_cast<const char*>(g.data.data()),
              static_cast<std::streamsize>(g.data.size() * sizeof(double)));
}

VoxelGrid read_voxel_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(detail::msg("cannot open ", path.string()));
    std::string magic, key;
    std::getline(in, magic);
    if (magic != "EVG1") throw Error(detail::msg(path.string(), ": bad magic '", magic, "'"));

    int width = 0, height = 0, bins = 0;
    Timestamp t0 = 0, t1 = 0;
    std::string dtype;
    for (int i = 0; i < 6; ++i) {
        in >> key;
        if (key == "width") in >> width;
        else if (key == "height") in >> height;
        else if (key == "bins") in >> bins;
        else if (key == "t0") in >> t0;
        else if (key == "t1") in >> t1;
        else if (key == "data") in >> dtype;
        else throw Error(detail::msg(path.string(), ": unexpected header key '", key, "'"));
    }
    if (dtype != "float64le") {
        throw Error(detail::msg(path.string(), ": unsupported data type '", dtype, "'"));
    }
    in.get(); // newline after the header
    if (width <= 0 || height <= 0 || bins <= 0) {
        throw Error(detail::msg(path.string(), ": invalid grid header"));
    }
    VoxelGrid g(width, height, bins, t0, t1);
    in.read(reinterpret_cast<char*>(g.data.data()),
            static_cast<std::streamsize>(g.data.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != g.data.size() * sizeof(double)) {
        throw Error(detail::msg(path.string(), ": truncated grid payload"));
    }
    return g;
}

} // namespace evfi
