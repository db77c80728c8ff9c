#include <catch_amalgamated.hpp>

#include "sca/export.hpp"
#include "sca/io.hpp"
#include "sca/png.hpp"
#include "sca/synth.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

using sca::Matrix;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "sca-io-tests";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::vector<unsigned char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

void spit(const fs::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::uint32_t read_be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

} // namespace

TEST_CASE("dataset container round-trips bitwise") {
    sca::Rng rng(301);
    sca::HsiDataset ds;
    ds.y = Matrix(6, 4);
    for (std::size_t i = 0; i < ds.y.size(); ++i) ds.y.data()[i] = rng.uniform(0.0, 1.0);
    ds.y(2, 1) = 0.0;
    ds.y(3, 3) = 1.0;
    ds.width = 3;
    ds.height = 2;
    ds.wavelengths = {400.5, 500.0, 600.25, 700.125};
    ds.scale_params = sca::ScaleParams{-0.25, 3.5};

    const fs::path p = temp_dir() / "roundtrip.hsx";
    sca::save_hsx(p.string(), ds);
    const sca::HsiDataset back = sca::load_hsx(p.string());

    REQUIRE(back.y.rows() == 6);
    REQUIRE(back.y.cols() == 4);
    CHECK(std::memcmp(back.y.data(), ds.y.data(), ds.y.size() * sizeof(double)) == 0);
    CHECK(back.width == 3);
    CHECK(back.height == 2);
    CHECK(back.wavelengths == ds.wavelengths);
    REQUIRE(back.scale_params.has_value());
    CHECK(back.scale_params->y_min == -0.25);
    CHECK(back.scale_params->y_max == 3.5);
}

TEST_CASE("dataset container works without optional fields") {
    sca::HsiDataset ds;
    ds.y = Matrix(2, 3, 0.5);
    ds.width = 2;
    ds.height = 1;
    const fs::path p = temp_dir() / "plain.hsx";
    sca::save_hsx(p.string(), ds);
    const sca::HsiDataset back = sca::load_hsx(p.string());
    CHECK(back.wavelengths.empty());
    CHECK_FALSE(back.scale_params.has_value());
    CHECK(back.y == ds.y);
}

TEST_CASE("payload bytes are little-endian f64 in row-major order") {
    sca::HsiDataset ds;
    ds.y = Matrix(1, 2);
    ds.y(0, 0) = 1.0; // 0x3FF0000000000000
    ds.y(0, 1) = 2.0; // 0x4000000000000000
    ds.width = 1;
    ds.height = 1;
    const fs::path p = temp_dir() / "endian.hsx";
    sca::save_hsx(p.string(), ds);
    const auto bytes = slurp(p);
    REQUIRE(bytes.size() > 16);
    const std::size_t header = static_cast<std::size_t>(
        std::find(bytes.begin(), bytes.end(), '\n') - bytes.begin() + 1);
    REQUIRE(bytes.size() == header + 16);
    const unsigned char one[8] = {0, 0, 0, 0, 0, 0, 0xf0, 0x3f};
    const unsigned char two[8] = {0, 0, 0, 0, 0, 0, 0, 0x40};
    CHECK(std::memcmp(bytes.data() + header, one, 8) == 0);
    CHECK(std::memcmp(bytes.data() + header + 8, two, 8) == 0);
}

TEST_CASE("malformed containers are rejected with located errors") {
    sca::HsiDataset ds;
    ds.y = Matrix(4, 3, 0.25);
    ds.width = 4;
    ds.height = 1;
    const fs::path good = temp_dir() / "good.hsx";
    sca::save_hsx(good.string(), ds);
    auto bytes = slurp(good);
    const std::size_t header = static_cast<std::size_t>(
        std::find(bytes.begin(), bytes.end(), '\n') - bytes.begin() + 1);

    SECTION("wrong magic") {
        auto bad = bytes;
        const std::string needle = "HSX1";
        auto it = std::search(bad.begin(), bad.end(), needle.begin(), needle.end());
        REQUIRE(it != bad.end());
        *it = 'Q';
        const fs::path p = temp_dir() / "badmagic.hsx";
        spit(p, bad);
        CHECK_THROWS_MATCHES(sca::load_hsx(p.string()), sca::format_error,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("magic")));
    }
    SECTION("header is not JSON") {
        const fs::path p = temp_dir() / "notjson.hsx";
        spit(p, {'h', 'i', '\n', 0, 0});
        CHECK_THROWS_MATCHES(sca::load_hsx(p.string()), sca::format_error,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("header")));
    }
    SECTION("truncated payload names the byte offset") {
        auto bad = bytes;
        bad.resize(bad.size() - 8); // drop exactly one trailing value
        const fs::path p = temp_dir() / "trunc.hsx";
        spit(p, bad);
        try {
            sca::load_hsx(p.string());
            FAIL("expected format_error");
        } catch (const sca::format_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find(std::to_string(12 * sizeof(double))) != std::string::npos);
            CHECK(msg.find(std::to_string(header)) != std::string::npos);
        }
    }
    SECTION("trailing bytes after the payload") {
        auto bad = bytes;
        bad.push_back(0x00);
        const fs::path p = temp_dir() / "trailing.hsx";
        spit(p, bad);
        CHECK_THROWS_MATCHES(sca::load_hsx(p.string()), sca::format_error,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("trailing")));
    }
    SECTION("unsupported dtype") {
        std::string hdr(reinterpret_cast<const char*>(bytes.data()), header);
        const std::size_t at = hdr.find("f64");
        REQUIRE(at != std::string::npos);
        hdr.replace(at, 3, "f32");
        std::vector<unsigned char> bad(hdr.begin(), hdr.end());
        bad.insert(bad.end(), bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
        const fs::path p = temp_dir() / "dtype.hsx";
        spit(p, bad);
        CHECK_THROWS_MATCHES(sca::load_hsx(p.string()), sca::format_error,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("dtype")));
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(sca::load_hsx((temp_dir() / "nope.hsx").string()), sca::format_error);
    }
}

TEST_CASE("weight containers round-trip and are kind-checked") {
    sca::Rng rng(303);
    sca::ScaWeights w{Matrix(5, 2), Matrix(2, 5)};
    for (std::size_t i = 0; i < w.encoder.size(); ++i) w.encoder.data()[i] = rng.normal();
    for (std::size_t i = 0; i < w.decoder.size(); ++i) w.decoder.data()[i] = rng.normal();

    const fs::path p = temp_dir() / "weights.hsx";
    sca::save_weights(p.string(), w);
    const sca::ScaWeights back = sca::load_weights(p.string());
    CHECK(back.encoder == w.encoder);
    CHECK(back.decoder == w.decoder);

    // a dataset container is not a weights container, and vice versa
    sca::HsiDataset ds;
    ds.y = Matrix(2, 2, 0.5);
    ds.width = 2;
    ds.height = 1;
    const fs::path dsp = temp_dir() / "ds-for-weights.hsx";
    sca::save_hsx(dsp.string(), ds);
    CHECK_THROWS_AS(sca::load_weights(dsp.string()), sca::format_error);
    CHECK_THROWS_AS(sca::load_hsx(p.string()), sca::format_error);
}

TEST_CASE("csv matrices round-trip through full precision") {
    sca::Rng rng(305);
    Matrix m(7, 3);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * 1e-3;
    m(0, 0) = 1.0 / 3.0;
    const fs::path p = temp_dir() / "mat.csv";
    sca::save_csv_matrix(p.string(), m);
    const Matrix back = sca::load_csv_matrix(p.string());
    REQUIRE(back.same_shape(m));
    CHECK(std::memcmp(back.data(), m.data(), m.size() * sizeof(double)) == 0);
}

TEST_CASE("csv parser handles a crafted literal") {
    const fs::path p = temp_dir() / "crafted.csv";
    {
        std::ofstream out(p);
        out << "1.5,-2\n0.25,1e3\n";
    }
    const Matrix m = sca::load_csv_matrix(p.string());
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 2);
    CHECK(m(0, 0) == 1.5);
    CHECK(m(0, 1) == -2.0);
    CHECK(m(1, 0) == 0.25);
    CHECK(m(1, 1) == 1000.0);
}

TEST_CASE("csv parser reports malformed content by position") {
    SECTION("non-numeric cell") {
        const fs::path p = temp_dir() / "badcell.csv";
        {
            std::ofstream out(p);
            out << "1,2\n3,oops\n";
        }
        try {
            sca::load_csv_matrix(p.string());
            FAIL("expected format_error");
        } catch (const sca::format_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("line 2") != std::string::npos);
            CHECK(msg.find("column 2") != std::string::npos);
        }
    }
    SECTION("ragged row") {
        const fs::path p = temp_dir() / "ragged.csv";
        {
            std::ofstream out(p);
            out << "1,2,3\n4,5\n";
        }
        CHECK_THROWS_MATCHES(sca::load_csv_matrix(p.string()), sca::format_error,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("line 2")));
    }
    SECTION("trailing junk in a cell") {
        const fs::path p = temp_dir() / "junk.csv";
        {
            std::ofstream out(p);
            out << "1,2\n3,4x\n";
        }
        CHECK_THROWS_AS(sca::load_csv_matrix(p.string()), sca::format_error);
    }
    SECTION("empty file") {
        const fs::path p = temp_dir() / "empty.csv";
        { std::ofstream out(p); }
        CHECK_THROWS_AS(sca::load_csv_matrix(p.string()), sca::format_error);
    }
}

TEST_CASE("generic dataset loading treats csv as a flat pixel list") {
    const fs::path p = temp_dir() / "flat.csv";
    {
        std::ofstream out(p);
        out << "0.1,0.2\n0.3,0.4\n0.5,0.6\n";
    }
    const sca::HsiDataset ds = sca::load_dataset(p.string());
    CHECK(ds.y.rows() == 3);
    CHECK(ds.y.cols() == 2);
    CHECK(ds.width == 3);
    CHECK(ds.height == 1);
    CHECK_THROWS_AS(sca::load_dataset((temp_dir() / "x.weird").string()), sca::format_error);
}

TEST_CASE("png encoder emits a structurally valid grayscale image") {
    Matrix a(6, 1); // raster order, width 3, height 2
    a(0, 0) = 0.0;
    a(1, 0) = 1.0;
    a(2, 0) = 0.5;
    a(3, 0) = -0.4; // clamps to 0
    a(4, 0) = 2.0;  // clamps to 255
    a(5, 0) = 0.25;
    const std::vector<unsigned char> px = sca::abundance_pixels(a, 0, 3, 2);
    const std::vector<unsigned char> png = sca::encode_gray_png(3, 2, px);

    // signature
    const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    REQUIRE(png.size() > 8);
    CHECK(std::memcmp(png.data(), sig, 8) == 0);

    // IHDR: 3x2, bit depth 8, color type 0
    REQUIRE(read_be32(png.data() + 8) == 13);
    CHECK(std::memcmp(png.data() + 12, "IHDR", 4) == 0);
    CHECK(read_be32(png.data() + 16) == 3);
    CHECK(read_be32(png.data() + 20) == 2);
    CHECK(png[24] == 8);
    CHECK(png[25] == 0);

    // walk chunks, recomputing CRCs and collecting IDAT
    std::size_t at = 8;
    std::vector<unsigned char> idat;
    bool saw_iend = false;
    while (at + 12 <= png.size()) {
        const std::uint32_t len = read_be32(png.data() + at);
        REQUIRE(at + 12 + len <= png.size());
        const unsigned char* type = png.data() + at + 4;
        const std::uint32_t stored_crc = read_be32(png.data() + at + 8 + len);
        std::vector<unsigned char> span(type, type + 4 + len);
        CHECK((sca::detail::crc32_bytes(span.data(), span.size()) ^ 0xffffffffu) == stored_crc);
        if (std::memcmp(type, "IDAT", 4) == 0)
            idat.insert(idat.end(), type + 4, type + 4 + len);
        if (std::memcmp(type, "IEND", 4) == 0) saw_iend = true;
        at += 12 + len;
    }
    CHECK(saw_iend);
    CHECK(at == png.size());

    // zlib stream: header, stored-deflate blocks, adler32 of the raw scanlines
    REQUIRE(idat.size() > 6);
    CHECK(idat[0] == 0x78);
    CHECK(idat[1] == 0x01);
    std::vector<unsigned char> raw;
    std::size_t z = 2;
    bool final_block = false;
    while (!final_block) {
        REQUIRE(z + 5 <= idat.size());
        final_block = (idat[z] & 1) != 0;
        REQUIRE((idat[z] >> 1) == 0); // stored, not compressed
        const std::size_t n = idat[z + 1] | (std::size_t(idat[z + 2]) << 8);
        REQUIRE((idat[z + 3] | (std::size_t(idat[z + 4]) << 8)) == (n ^ 0xffff));
        REQUIRE(z + 5 + n <= idat.size());
        raw.insert(raw.end(), idat.begin() + static_cast<std::ptrdiff_t>(z + 5),
                   idat.begin() + static_cast<std::ptrdiff_t>(z + 5 + n));
        z += 5 + n;
    }
    REQUIRE(z + 4 == idat.size());
    CHECK(sca::detail::adler32(raw.data(), raw.size()) == read_be32(idat.data() + z));

    // scanlines: filter byte 0 then pixels, rounded-clamped grayscale
    REQUIRE(raw.size() == 2 * (1 + 3));
    const unsigned char expect[8] = {0, 0, 255, 128, 0, 0, 255, 64};
    CHECK(std::memcmp(raw.data(), expect, 8) == 0);
}

TEST_CASE("png encoding is deterministic and handles flat images") {
    const std::vector<unsigned char> px(20, 85);
    const auto a = sca::encode_gray_png(4, 5, px);
    const auto b = sca::encode_gray_png(4, 5, px);
    CHECK(a == b);

    // every pixel decodes to the same grayscale value
    // (stored blocks mean pixels appear literally in the stream)
    std::size_t count85 = 0;
    for (unsigned char c : a) count85 += c == 85;
    CHECK(count85 >= 20);
}

TEST_CASE("abundance map export writes one image per member") {
    auto [ds, gt] = sca::synth_generate(2, 8, 12, 307, 1.0);
    const fs::path prefix = temp_dir() / "maps";
    const auto files =
        sca::export_abundance_maps(prefix.string(), gt.abundances, ds.width, ds.height);
    REQUIRE(files.size() == 2);
    for (const auto& f : files) {
        CAPTURE(f);
        CHECK(fs::exists(f));
        const auto bytes = slurp(f);
        REQUIRE(bytes.size() > 24);
        CHECK(read_be32(bytes.data() + 16) == ds.width);
        CHECK(read_be32(bytes.data() + 20) == ds.height);
    }
    CHECK(files[0].find("member0") != std::string::npos);
    CHECK(files[1].find("member1") != std::string::npos);

    // raster mismatch is a contract violation
    CHECK_THROWS_AS(sca::export_abundance_maps(prefix.string(), gt.abundances, 5, 7),
                    sca::contract_error);
}

TEST_CASE("pixel mapping follows round-to-nearest on the 255 scale") {
    Matrix a(3, 1);
    a(0, 0) = 0.0;
    a(1, 0) = 1.0;
    a(2, 0) = 0.5;
    const auto px = sca::abundance_pixels(a, 0, 3, 1);
    REQUIRE(px.size() == 3);
    CHECK(px[0] == 0);
    CHECK(px[1] == 255);
    CHECK(px[2] == 128);
}

TEST_CASE("spectra csv export interleaves band index, members, and truth") {
    Matrix dec(2, 3);
    for (std::size_t i = 0; i < dec.size(); ++i) dec.data()[i] = 0.1 * static_cast<double>(i + 1);
    Matrix truth = dec;
    truth(0, 0) += 0.05;
    const fs::path p = temp_dir() / "spectra.csv";
    sca::export_spectra_csv(p.string(), dec, &truth);

    std::ifstream in(p);
    std::string header;
    std::getline(in, header);
    CHECK(header == "band,member0,member1,truth0,truth1");
    std::string line1;
    std::getline(in, line1);
    CHECK(line1.rfind("0,", 0) == 0);
    std::size_t rows = 1;
    std::string rest;
    while (std::getline(in, rest))
        if (!rest.empty()) ++rows;
    CHECK(rows == 3);
}
