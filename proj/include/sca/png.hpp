#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include "sca/errors.hpp"

namespace sca {

// Minimal 8-bit grayscale PNG encoder: IHDR + IDAT (zlib wrapper around stored
// deflate blocks) + IEND, filter byte 0 per scanline. Fully deterministic and
// dependency-free; every abundance-map export is byte-reproducible.

namespace detail {

inline std::uint32_t crc32_bytes(const unsigned char* p, std::size_t len, std::uint32_t seed = 0xffffffffu) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = seed;
    for (std::size_t i = 0; i < len; ++i) c = table[(c ^ p[i]) & 0xffu] ^ (c >> 8);
    return c;
}

inline std::uint32_t adler32(const unsigned char* p, std::size_t len) {
    std::uint32_t a = 1, b = 0;
    for (std::size_t i = 0; i < len; ++i) {
        a = (a + p[i]) % 65521u;
        b = (b + a) % 65521u;
    }
    return (b << 16) | a;
}

inline void push_be32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

inline void push_chunk(std::vector<unsigned char>& out, const char type[4],
                       const std::vector<unsigned char>& data) {
    push_be32(out, static_cast<std::uint32_t>(data.size()));
    std::vector<unsigned char> body(type, type + 4);
    body.insert(body.end(), data.begin(), data.end());
    out.insert(out.end(), body.begin(), body.end());
    push_be32(out, crc32_bytes(body.data(), body.size()) ^ 0xffffffffu);
}

} // namespace detail

inline std::vector<unsigned char> encode_gray_png(std::size_t width, std::size_t height,
                                                  const std::vector<unsigned char>& pixels) {
    if (width == 0 || height == 0)
        throw contract_error("encode_gray_png: zero dimension");
    if (pixels.size() != width * height)
        throw contract_error("encode_gray_png: pixel count " + std::to_string(pixels.size()) +
                             " != " + std::to_string(width) + "x" + std::to_string(height));

    std::vector<unsigned char> out{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

    std::vector<unsigned char> ihdr;
    detail::push_be32(ihdr, static_cast<std::uint32_t>(width));
    detail::push_be32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(0); // grayscale
    ihdr.push_back(0); // deflate
    ihdr.push_back(0); // adaptive filtering
    ihdr.push_back(0); // no interlace
    detail::push_chunk(out, "IHDR", ihdr);

    // raw scanline stream: filter byte 0 + row
    std::vector<unsigned char> raw;
    raw.reserve(height * (width + 1));
    for (std::size_t y = 0; y < height; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), pixels.begin() + static_cast<std::ptrdiff_t>(y * width),
                   pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * width));
    }

    // zlib wrapper + stored (uncompressed) deflate blocks of <= 65535 bytes
    std::vector<unsigned char> idat{0x78, 0x01};
    std::size_t pos = 0;
    do {
        const std::size_t len = std::min<std::size_t>(65535, raw.size() - pos);
        const bool final = pos + len == raw.size();
        idat.push_back(final ? 1 : 0);
        idat.push_back(static_cast<unsigned char>(len & 0xff));
        idat.push_back(static_cast<unsigned char>(len >> 8));
        idat.push_back(static_cast<unsigned char>(~len & 0xff));
        idat.push_back(static_cast<unsigned char>((~len >> 8) & 0xff));
        idat.insert(idat.end(), raw.begin() + static_cast<std::ptrdiff_t>(pos),
                    raw.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    } while (pos < raw.size());
    detail::push_be32(idat, detail::adler32(raw.data(), raw.size()));
    detail::push_chunk(out, "IDAT", idat);

    detail::push_chunk(out, "IEND", {});
    return out;
}

inline void write_gray_png(const std::string& path, std::size_t width, std::size_t height,
                           const std::vector<unsigned char>& pixels) {
    const std::vector<unsigned char> bytes = encode_gray_png(width, height, pixels);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error(path + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw format_error(path + ": write failed");
}

} // namespace sca
