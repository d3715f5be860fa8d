#ifndef EVFI_IO_HPP
#define EVFI_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evfi/types.hpp"

namespace evfi {

// --- Event stream formats ---------------------------------------------------
//
// EVT-CSV: first line "width=<u>,height=<u>", then one "x,y,t_us,p" line per
// event, p in {-1, 1}, ASCII, LF line endings.
//
// EVB1 (little-endian): magic "EVB1", width u16, height u16, count u64,
// then `count` records of x u16, y u16, t u64, p i8 (13 bytes each).

EventStream parse_events_csv(std::string_view text);
std::string write_events_csv(const EventStream& s);

EventStream parse_events_binary(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_events_binary(const EventStream& s);

EventStream read_events_file(const std::filesystem::path& path);
void write_events_file(const EventStream& s, const std::filesystem::path& path);

// --- Frames (binary PGM / PPM, maxval 255) ----------------------------------
//
// Values are rounded half-away-from-zero on write. Timestamps live in the
// sidecar manifest, not in the image files.

GrayFrame read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayFrame& frame, const std::filesystem::path& path);

RgbFrame read_ppm(const std::filesystem::path& path);
void write_ppm(const RgbFrame& frame, const std::filesystem::path& path);

// --- Frame manifest ----------------------------------------------------------
//
// One text file per sequence: a "nominal_fps=<num>/<den>" header line, then
// "<filename>,<t_us>" lines sorted by t_us. Filenames are relative to the
// manifest's directory.

struct ManifestEntry {
    std::string filename;
    Timestamp t = 0;
};

struct Manifest {
    Rational nominal_fps{0, 1};
    std::vector<ManifestEntry> entries;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& m, const std::filesystem::path& path);

/// Loads every frame referenced by a manifest. PGM files load directly;
/// PPM files are converted through to_grayscale.
FrameSequence read_frame_sequence(const std::filesystem::path& manifest_path);

/// Writes frames as <prefix>NNNNNN.pgm plus a manifest file into dir.
/// Returns the manifest path.
std::filesystem::path write_frame_sequence(const FrameSequence& seq,
                                           const std::filesystem::path& dir,
                                           const std::string& prefix = "frame_",
                                           const std::string& manifest_name = "manifest.txt");

// --- Small text helpers shared by CLI-facing files ---------------------------

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace evfi

#endif
