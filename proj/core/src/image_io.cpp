#include "holotrack/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <png.h>

#include "holotrack/error.hpp"

namespace holotrack {

namespace fs = std::filesystem;

namespace {

std::string lower_ext(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

void skip_ws_and_comments(std::istream& in) {
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Gray8 read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5") throw DataError(path.string() + ": not a binary PGM (P5)");
    int nx = 0, ny = 0, maxval = 0;
    skip_ws_and_comments(in);
    in >> nx;
    skip_ws_and_comments(in);
    in >> ny;
    skip_ws_and_comments(in);
    in >> maxval;
    if (!in || nx <= 0 || ny <= 0) throw DataError(path.string() + ": malformed PGM header");
    if (maxval != 255) throw DataError(path.string() + ": only 8-bit PGM (maxval 255) is supported");
    in.get();  // single whitespace after maxval
    Gray8 img(nx, ny);
    in.read(reinterpret_cast<char*>(img.data()), static_cast<std::streamsize>(img.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.size())) {
        throw DataError(path.string() + ": truncated PGM data");
    }
    return img;
}

void write_pgm(const fs::path& path, const Gray8& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "P5\n" << image.nx() << ' ' << image.ny() << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data()), static_cast<std::streamsize>(image.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

Gray8 read_png(const fs::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        throw DataError(path.string() + ": " + img.message);
    }
    img.format = PNG_FORMAT_GRAY;
    Gray8 out(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, out.data(), 0, nullptr)) {
        std::string msg = img.message;
        png_image_free(&img);
        throw DataError(path.string() + ": " + msg);
    }
    return out;
}

void write_png(const fs::path& path, const Gray8& image) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.nx());
    img.height = static_cast<png_uint_32>(image.ny());
    img.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.data(), 0, nullptr)) {
        throw DataError("cannot write " + path.string() + ": " + img.message);
    }
}

Gray8 read_gray(const fs::path& path) {
    const auto ext = lower_ext(path);
    if (ext == ".png") return read_png(path);
    if (ext == ".pgm" || ext == ".pnm") return read_pgm(path);
    throw DataError(path.string() + ": unsupported image extension (expected .png or .pgm)");
}

void write_gray(const fs::path& path, const Gray8& image) {
    const auto ext = lower_ext(path);
    if (ext == ".png") return write_png(path, image);
    if (ext == ".pgm" || ext == ".pnm") return write_pgm(path, image);
    throw DataError(path.string() + ": unsupported image extension (expected .png or .pgm)");
}

void write_float_raw(const fs::path& path, const Grid<float>& values, const RawHeader& header) {
    static_assert(sizeof(float) == 4);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * 4));
    } else {
        for (float v : values.values()) {
            auto bits = std::bit_cast<std::uint32_t>(v);
            char b[4] = {char(bits & 0xff), char((bits >> 8) & 0xff), char((bits >> 16) & 0xff),
                         char((bits >> 24) & 0xff)};
            out.write(b, 4);
        }
    }
    if (!out) throw DataError("write failed: " + path.string());

    std::ofstream hdr(path.string() + ".hdr");
    hdr.precision(17);
    hdr << "nx " << values.nx() << "\nny " << values.ny() << "\nz_um " << header.z_um << "\nconfig_hash "
        << (header.config_hash.empty() ? "-" : header.config_hash) << "\nquantity "
        << (header.quantity.empty() ? "-" : header.quantity) << "\ndtype float32_le\n";
    if (!hdr) throw DataError("write failed: " + path.string() + ".hdr");
}

RawHeader read_raw_header(const fs::path& header_path) {
    std::ifstream in(header_path);
    if (!in) throw DataError("cannot open " + header_path.string());
    RawHeader h;
    std::string key;
    while (in >> key) {
        if (key == "nx") in >> h.nx;
        else if (key == "ny") in >> h.ny;
        else if (key == "z_um") in >> h.z_um;
        else if (key == "config_hash") in >> h.config_hash;
        else if (key == "quantity") in >> h.quantity;
        else {
            std::string ignored;
            in >> ignored;
        }
    }
    if (h.nx <= 0 || h.ny <= 0) throw DataError(header_path.string() + ": malformed raw header");
    return h;
}

Grid<float> read_float_raw(const fs::path& path, int expected_nx, int expected_ny) {
    int nx = expected_nx;
    int ny = expected_ny;
    const fs::path hdr = path.string() + ".hdr";
    if (fs::exists(hdr)) {
        const auto h = read_raw_header(hdr);
        if ((expected_nx > 0 && h.nx != expected_nx) || (expected_ny > 0 && h.ny != expected_ny)) {
            throw DataError(path.string() + ": header dimensions " + std::to_string(h.nx) + "x" +
                            std::to_string(h.ny) + " do not match expected " + std::to_string(expected_nx) + "x" +
                            std::to_string(expected_ny));
        }
        nx = h.nx;
        ny = h.ny;
    }
    if (nx <= 0 || ny <= 0) throw DataError(path.string() + ": dimensions unknown (no header)");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    Grid<float> out(nx, ny);
    std::vector<unsigned char> bytes(out.size() * 4);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()) || in.peek() != std::char_traits<char>::eof()) {
        throw DataError(path.string() + ": expected " + std::to_string(bytes.size()) + " bytes of float32 data");
    }
    auto v = out.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::uint32_t bits = std::uint32_t(bytes[4 * i]) | (std::uint32_t(bytes[4 * i + 1]) << 8) |
                                   (std::uint32_t(bytes[4 * i + 2]) << 16) | (std::uint32_t(bytes[4 * i + 3]) << 24);
        v[i] = std::bit_cast<float>(bits);
    }
    return out;
}

Gray8 to_gray8(const Grid<double>& image, double scale) {
    Gray8 out(image.nx(), image.ny());
    auto in = image.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double v = std::round(in[i] * scale);
        o[i] = static_cast<std::uint8_t>(std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 255.0));
    }
    return out;
}

}  // namespace holotrack
