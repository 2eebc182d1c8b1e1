#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "holotrack/grid.hpp"

namespace holotrack {

using Gray8 = Grid<std::uint8_t>;

/// Binary PGM (P5, maxval 255).
Gray8 read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Gray8& image);

/// 8-bit grayscale PNG. Colour inputs are converted to gray on load.
Gray8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Gray8& image);

/// Dispatches on extension (.png, .pgm/.pnm). Throws DataError otherwise.
Gray8 read_gray(const std::filesystem::path& path);
void write_gray(const std::filesystem::path& path, const Gray8& image);

/// Sidecar metadata for raw float dumps.
struct RawHeader {
    int nx = 0;
    int ny = 0;
    double z_um = 0.0;
    std::string config_hash;
    std::string quantity;  ///< e.g. "amplitude" or "probability"
};

/// Writes nx*ny little-endian float32 values to `path` and a text header to
/// `path` + ".hdr".
void write_float_raw(const std::filesystem::path& path, const Grid<float>& values, const RawHeader& header);

/// Reads a raw float32 file. When the sidecar header exists its dimensions are
/// used; otherwise the expected dimensions must be supplied. A size mismatch
/// raises DataError naming the file.
Grid<float> read_float_raw(const std::filesystem::path& path, int expected_nx = -1, int expected_ny = -1);
RawHeader read_raw_header(const std::filesystem::path& header_path);

/// Rounds and clips to [0, 255].
Gray8 to_gray8(const Grid<double>& image, double scale = 1.0);

}  // namespace holotrack
