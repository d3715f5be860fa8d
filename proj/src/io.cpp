#include "evfi/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>

#include "detail.hpp"

namespace evfi {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

long long parse_int(std::string_view field, int line_no, const char* what) {
    field = trim(field);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw Error(detail::msg("malformed ", what, " '", std::string(field), "' at line ", line_no));
    }
    return value;
}

std::vector<std::string_view> split(std::string_view s, char delim) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            parts.push_back(s.substr(start));
            break;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (static_cast<std::uint16_t>(p[1]) << 8));
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

} // namespace

EventStream parse_events_csv(std::string_view text) {
    EventStream out;
    int line_no = 0;
    bool have_header = false;
    std::size_t start = 0;
    Timestamp prev_t = 0;
    bool first_event = true;

    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        std::string_view line = (end == std::string_view::npos) ? text.substr(start)
                                                                : text.substr(start, end - start);
        start = (end == std::string_view::npos) ? text.size() + 1 : end + 1;
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;

        if (!have_header) {
            auto fields = split(line, ',');
            if (fields.size() != 2 || trim(fields[0]).substr(0, 6) != "width=" ||
                trim(fields[1]).substr(0, 7) != "height=") {
                throw Error(detail::msg("malformed header '", std::string(line), "' at line ", line_no,
                                        " (expected width=<u>,height=<u>)"));
            }
            out.width = static_cast<int>(parse_int(trim(fields[0]).substr(6), line_no, "width"));
            out.height = static_cast<int>(parse_int(trim(fields[1]).substr(7), line_no, "height"));
            if (out.width <= 0 || out.height <= 0 || out.width > 65535 || out.height > 65535) {
                throw Error(detail::msg("sensor geometry ", out.width, "x", out.height,
                                        " out of range at line ", line_no));
            }
            have_header = true;
            continue;
        }

        auto fields = split(line, ',');
        if (fields.size() != 4) {
            throw Error(detail::msg("malformed line ", line_no, ": expected x,y,t_us,p got '",
                                    std::string(line), "'"));
        }
        Event e;
        e.x = static_cast<std::int32_t>(parse_int(fields[0], line_no, "x"));
        e.y = static_cast<std::int32_t>(parse_int(fields[1], line_no, "y"));
        e.t = parse_int(fields[2], line_no, "timestamp");
        const long long p = parse_int(fields[3], line_no, "polarity");
        if (p != 1 && p != -1) {
            throw Error(detail::msg("polarity ", p, " outside {-1,+1} at line ", line_no));
        }
        e.p = static_cast<std::int8_t>(p);
        if (e.x < 0 || e.x >= out.width || e.y < 0 || e.y >= out.height) {
            throw Error(detail::msg("coordinates (", e.x, ",", e.y, ") out of bounds ",
                                    out.width, "x", out.height, " at line ", line_no));
        }
        if (e.t < 0) {
            throw Error(detail::msg("negative timestamp at line ", line_no));
        }
        if (!first_event && e.t < prev_t) {
            throw Error(detail::msg("non-monotone timestamps at line ", line_no));
        }
        prev_t = e.t;
        first_event = false;
        out.events.push_back(e);
    }

    if (!have_header) {
        throw Error("missing EVT-CSV header line width=<u>,height=<u>");
    }
    return out;
}

std::string write_events_csv(const EventStream& s) {
    std::string out = detail::msg("width=", s.width, ",height=", s.height, "\n");
    for (const Event& e : s.events) {
        out += detail::msg(e.x, ",", e.y, ",", e.t, ",", static_cast<int>(e.p), "\n");
    }
    return out;
}

namespace {
constexpr std::size_t kEvb1Header = 16;
constexpr std::size_t kEvb1Record = 13;
} // namespace

EventStream parse_events_binary(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kEvb1Header || std::memcmp(bytes.data(), "EVB1", 4) != 0) {
        throw Error("bad magic: not an EVB1 stream");
    }
    EventStream out;
    out.width = get_u16(bytes.data() + 4);
    out.height = get_u16(bytes.data() + 6);
    const std::uint64_t count = get_u64(bytes.data() + 8);
    if (count > (bytes.size() - kEvb1Header) / kEvb1Record + 1) {
        throw Error(detail::msg("truncated EVB1 stream: expected ",
                                kEvb1Header + count * kEvb1Record, " bytes, have ", bytes.size()));
    }

    const std::size_t expected = kEvb1Header + count * kEvb1Record;
    if (bytes.size() < expected) {
        throw Error(detail::msg("truncated EVB1 stream: expected ", expected, " bytes, have ",
                                bytes.size()));
    }
    if (bytes.size() > expected) {
        throw Error(detail::msg("declared count ", count, " leaves ", bytes.size() - expected,
                                " trailing bytes"));
    }

    out.events.reserve(count);
    const std::uint8_t* p = bytes.data() + kEvb1Header;
    for (std::uint64_t i = 0; i < count; ++i, p += kEvb1Record) {
        Event e;
        e.x = get_u16(p);
        e.y = get_u16(p + 2);
        e.t = static_cast<Timestamp>(get_u64(p + 4));
        e.p = static_cast<std::int8_t>(p[12]);
        out.events.push_back(e);
    }
    out.validate();
    return out;
}

std::vector<std::uint8_t> write_events_binary(const EventStream& s) {
    std::vector<std::uint8_t> out;
    out.reserve(kEvb1Header + s.events.size() * kEvb1Record);
    for (char c : {'E', 'V', 'B', '1'}) out.push_back(static_cast<std::uint8_t>(c));
    put_u16(out, static_cast<std::uint16_t>(s.width));
    put_u16(out, static_cast<std::uint16_t>(s.height));
    put_u64(out, s.events.size());
    for (const Event& e : s.events) {
        put_u16(out, static_cast<std::uint16_t>(e.x));
        put_u16(out, static_cast<std::uint16_t>(e.y));
        put_u64(out, static_cast<std::uint64_t>(e.t));
        out.push_back(static_cast<std::uint8_t>(e.p));
    }
    return out;
}

EventStream read_events_file(const std::filesystem::path& path) {
    if (path.extension() == ".csv") {
        return parse_events_csv(read_text_file(path));
    }
    const auto bytes = read_binary_file(path);
    return parse_events_binary(bytes);
}

void write_events_file(const EventStream& s, const std::filesystem::path& path) {
    if (path.extension() == ".csv") {
        write_text_file(path, write_events_csv(s));
    } else {
        const auto bytes = write_events_binary(s);
        write_binary_file(path, bytes);
    }
}

// --- PGM / PPM ---------------------------------------------------------------

namespace {

/// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_pnm_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

struct PnmHeader {
    int width = 0;
    int height = 0;
};

PnmHeader read_pnm_header(std::istream& in, const char* magic, const std::filesystem::path& path) {
    const std::string m = next_pnm_token(in);
    if (m != magic) {
        throw Error(detail::msg(path.string(), ": expected ", magic, " header, got '", m, "'"));
    }
    PnmHeader h;
    h.width = static_cast<int>(parse_int(next_pnm_token(in), 1, "width"));
    h.height = static_cast<int>(parse_int(next_pnm_token(in), 1, "height"));
    const long long maxval = parse_int(next_pnm_token(in), 1, "maxval");
    if (maxval != 255) {
        throw Error(detail::msg(path.string(), ": unsupported maxval ", maxval, " (only 255)"));
    }
    if (h.width <= 0 || h.height <= 0) {
        throw Error(detail::msg(path.string(), ": invalid dimensions ", h.width, "x", h.height));
    }
    return h;
}

std::uint8_t quantize(double v) {
    long long q = detail::round_half_away(v);
    q = std::clamp<long long>(q, 0, 255);
    return static_cast<std::uint8_t>(q);
}

} // namespace

GrayFrame read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(detail::msg("cannot open ", path.string()));
    const PnmHeader h = read_pnm_header(in, "P5", path);
    GrayFrame frame(h.width, h.height);
    std::vector<std::uint8_t> raw(frame.pixels.size());
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw Error(detail::msg(path.string(), ": truncated pixel payload"));
    }
    std::copy(raw.begin(), raw.end(), frame.pixels.begin());
    return frame;
}

void write_pgm(const GrayFrame& frame, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(detail::msg("cannot write ", path.string()));
    out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
    std::vector<std::uint8_t> raw(frame.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize(frame.pixels[i]);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

RgbFrame read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(detail::msg("cannot open ", path.string()));
    const PnmHeader h = read_pnm_header(in, "P6", path);
    RgbFrame frame(h.width, h.height);
    std::vector<std::uint8_t> raw(frame.pixels.size());
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw Error(detail::msg(path.string(), ": truncated pixel payload"));
    }
    std::copy(raw.begin(), raw.end(), frame.pixels.begin());
    return frame;
}

void write_ppm(const RgbFrame& frame, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(detail::msg("cannot write ", path.string()));
    out << "P6\n" << frame.width << " " << frame.height << "\n255\n";
    std::vector<std::uint8_t> raw(frame.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize(frame.pixels[i]);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

// --- Manifest ----------------------------------------------------------------

Manifest read_manifest(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    Manifest m;
    int line_no = 0;
    bool have_fps = false;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        std::string_view line = (end == std::string_view::npos)
                                    ? std::string_view(text).substr(start)
                                    : std::string_view(text).substr(start, end - start);
        start = (end == std::string_view::npos) ? text.size() + 1 : end + 1;
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;

        if (!have_fps) {
            if (line.substr(0, 12) != "nominal_fps=") {
                throw Error(detail::msg(path.string(), ": line ", line_no,
                                        ": expected nominal_fps=<num>/<den> header"));
            }
            auto frac = split(line.substr(12), '/');
            if (frac.size() != 2) {
                throw Error(detail::msg(path.string(), ": line ", line_no, ": malformed fps fraction"));
            }
            m.nominal_fps.num = parse_int(frac[0], line_no, "fps numerator");
            m.nominal_fps.den = parse_int(frac[1], line_no, "fps denominator");
            if (m.nominal_fps.num <= 0 || m.nominal_fps.den <= 0) {
                throw Error(detail::msg(path.string(), ": line ", line_no, ": fps must be positive"));
            }
            have_fps = true;
            continue;
        }

        const std::size_t comma = line.rfind(',');
        if (comma == std::string_view::npos) {
            throw Error(detail::msg(path.string(), ": line ", line_no, ": expected <filename>,<t_us>"));
        }
        ManifestEntry entry;
        entry.filename = std::string(trim(line.substr(0, comma)));
        entry.t = parse_int(line.substr(comma + 1), line_no, "timestamp");
        if (!m.entries.empty() && entry.t <= m.entries.back().t) {
            throw Error(detail::msg(path.string(), ": line ", line_no,
                                    ": timestamps not strictly increasing"));
        }
        m.entries.push_back(std::move(entry));
    }
    if (!have_fps) {
        throw Error(detail::msg(path.string(), ": missing nominal_fps header"));
    }
    return m;
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
    std::string text = detail::msg("nominal_fps=", m.nominal_fps.num, "/", m.nominal_fps.den, "\n");
    for (const ManifestEntry& e : m.entries) {
        text += detail::msg(e.filename, ",", e.t, "\n");
    }
    write_text_file(path, text);
}

FrameSequence read_frame_sequence(const std::filesystem::path& manifest_path) {
    const Manifest m = read_manifest(manifest_path);
    const std::filesystem::path dir = manifest_path.parent_path();
    FrameSequence seq;
    seq.nominal_fps = m.nominal_fps;
    seq.frames.reserve(m.entries.size());
    for (const ManifestEntry& e : m.entries) {
        const std::filesystem::path file = dir / e.filename;
        GrayFrame frame;
        if (file.extension() == ".ppm") {
            frame = to_grayscale(read_ppm(file));
        } else {
            frame = read_pgm(file);
        }
        frame.t = e.t;
        if (!seq.frames.empty() &&
            (frame.width != seq.frames[0].width || frame.height != seq.frames[0].height)) {
            throw Error(detail::msg(file.string(), ": dimension mismatch with manifest sequence (",
                                    frame.width, "x", frame.height, " vs ", seq.frames[0].width, "x",
                                    seq.frames[0].height, ")"));
        }
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

std::filesystem::path write_frame_sequence(const FrameSequence& seq, const std::filesystem::path& dir,
                                           const std::string& prefix, const std::string& manifest_name) {
    std::filesystem::create_directories(dir);
    Manifest m;
    m.nominal_fps = seq.nominal_fps;
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s%06zu.pgm", prefix.c_str(), i);
        write_pgm(seq.frames[i], dir / name);
        m.entries.push_back({name, seq.frames[i].t});
    }
    const std::filesystem::path manifest_path = dir / manifest_name;
    write_manifest(m, manifest_path);
    return manifest_path;
}

// --- File helpers ------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(detail::msg("cannot open ", path.string()));
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(detail::msg("cannot write ", path.string()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(detail::msg("cannot open ", path.string()));
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(detail::msg("cannot write ", path.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace evfi
