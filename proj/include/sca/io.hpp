#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sca/dataset.hpp"
#include "sca/matrix.hpp"
#include "sca/model.hpp"

namespace sca {

// HSX container: one UTF-8 JSON header line
//   {"magic":"HSX1","n":N,"f":F,"width":W,"height":H,"dtype":"f64", ...}
// terminated by '\n', immediately followed by n*f little-endian float64 values
// in row-major order. Weights files reuse the container with
// {"magic":"HSX1","kind":"sca-weights","f":F,"k":K,"dtype":"f64"} and an
// encoder-then-decoder payload of 2*F*K values.

namespace detail {

inline void put_f64_le(std::ostream& os, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64_le(const unsigned char* b) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

inline std::string read_header_line(std::ifstream& in, const std::string& path) {
    std::string line;
    char c;
    while (in.get(c)) {
        if (c == '\n') return line;
        line.push_back(c);
        if (line.size() > (1u << 20))
            throw format_error(path + ": no header newline within the first 1 MiB");
    }
    throw format_error(path + ": file ends inside the header line (offset " +
                       std::to_string(line.size()) + ")");
}

inline nlohmann::json parse_header(const std::string& line, const std::string& path) {
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw format_error(path + ": header is not valid JSON: " + e.what());
    }
    if (!h.is_object() || !h.contains("magic") || h["magic"] != "HSX1")
        throw format_error(path + ": bad magic at offset 0 (expected HSX1 header)");
    if (!h.contains("dtype") || h["dtype"] != "f64")
        throw format_error(path + ": unsupported dtype (only f64)");
    return h;
}

inline std::size_t header_uint(const nlohmann::json& h, const char* key, const std::string& path) {
    if (!h.contains(key) || !h[key].is_number_unsigned() || h[key].get<std::uint64_t>() == 0)
        throw format_error(path + ": header field '" + key + "' missing or not a positive integer");
    return static_cast<std::size_t>(h[key].get<std::uint64_t>());
}

inline void read_payload(std::ifstream& in, const std::string& path, std::size_t header_len,
                         std::size_t count, double* out) {
    const std::size_t expect = count * 8;
    std::vector<unsigned char> buf(1u << 16);
    std::size_t done = 0;
    while (done < expect) {
        const std::size_t want = std::min(buf.size(), expect - done);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(want));
        const std::size_t got = static_cast<std::size_t>(in.gcount());
        if (got == 0)
            throw format_error(path + ": truncated payload: expected " + std::to_string(expect) +
                               " bytes at offset " + std::to_string(header_len) + ", file ends after " +
                               std::to_string(done));
        for (std::size_t i = 0; i + 8 <= got; i += 8) out[(done + i) / 8] = get_f64_le(buf.data() + i);
        if (got % 8 != 0 && done + got < expect)
            throw format_error(path + ": payload not a multiple of 8 bytes near offset " +
                               std::to_string(header_len + done + got));
        done += got;
    }
    char extra;
    if (in.get(extra))
        throw format_error(path + ": trailing bytes after payload at offset " +
                           std::to_string(header_len + expect));
}

} // namespace detail

inline void save_hsx(const std::string& path, const HsiDataset& ds) {
    validate_dataset(ds, "save_hsx");
    nlohmann::json h{{"magic", "HSX1"},
                     {"n", ds.pixels()},
                     {"f", ds.bands()},
                     {"width", ds.width},
                     {"height", ds.height},
                     {"dtype", "f64"}};
    if (!ds.wavelengths.empty()) h["wavelengths"] = ds.wavelengths;
    if (ds.scale_params)
        h["scale"] = {{"y_min", ds.scale_params->y_min}, {"y_max", ds.scale_params->y_max}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error(path + ": cannot open for writing");
    out << h.dump() << '\n';
    for (std::size_t i = 0; i < ds.y.size(); ++i) detail::put_f64_le(out, ds.y.data()[i]);
    if (!out) throw format_error(path + ": write failed");
}

inline HsiDataset load_hsx(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error(path + ": cannot open");
    const std::string line = detail::read_header_line(in, path);
    const nlohmann::json h = detail::parse_header(line, path);
    if (h.contains("kind") && h["kind"] != "dataset")
        throw format_error(path + ": holds '" + h["kind"].get<std::string>() + "', not a dataset");
    const std::size_t n = detail::header_uint(h, "n", path);
    const std::size_t f = detail::header_uint(h, "f", path);
    if (f != 0 && n > std::numeric_limits<std::size_t>::max() / 8 / f)
        throw format_error(path + ": n*f overflows");
    HsiDataset ds;
    ds.y = Matrix(n, f);
    auto opt_uint = [&](const char* key) -> std::size_t {
        if (!h.contains(key)) return 0;
        if (!h[key].is_number_unsigned())
            throw format_error(path + ": header field '" + std::string(key) +
                               "' must be a nonnegative integer");
        return static_cast<std::size_t>(h[key].get<std::uint64_t>());
    };
    ds.width = opt_uint("width");
    ds.height = opt_uint("height");
    if (h.contains("wavelengths")) {
        ds.wavelengths = h["wavelengths"].get<std::vector<double>>();
        if (ds.wavelengths.size() != f)
            throw format_error(path + ": wavelengths length " + std::to_string(ds.wavelengths.size()) +
                               " != f " + std::to_string(f));
    }
    if (h.contains("scale"))
        ds.scale_params = ScaleParams{h["scale"]["y_min"].get<double>(), h["scale"]["y_max"].get<double>()};
    detail::read_payload(in, path, line.size() + 1, n * f, ds.y.data());
    validate_dataset(ds, ("load_hsx " + path).c_str());
    return ds;
}

inline void save_weights(const std::string& path, const ScaWeights& w) {
    const std::size_t f = w.encoder.rows(), k = w.encoder.cols();
    if (w.decoder.rows() != k || w.decoder.cols() != f)
        throw contract_error("save_weights: inconsistent shapes " + shape_str(w.encoder) + "/" +
                             shape_str(w.decoder));
    nlohmann::json h{{"magic", "HSX1"}, {"kind", "sca-weights"}, {"f", f}, {"k", k}, {"dtype", "f64"}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error(path + ": cannot open for writing");
    out << h.dump() << '\n';
    for (std::size_t i = 0; i < w.encoder.size(); ++i) detail::put_f64_le(out, w.encoder.data()[i]);
    for (std::size_t i = 0; i < w.decoder.size(); ++i) detail::put_f64_le(out, w.decoder.data()[i]);
    if (!out) throw format_error(path + ": write failed");
}

inline ScaWeights load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error(path + ": cannot open");
    const std::string line = detail::read_header_line(in, path);
    const nlohmann::json h = detail::parse_header(line, path);
    if (!h.contains("kind") || h["kind"] != "sca-weights")
        throw format_error(path + ": not a weights file (kind missing or wrong)");
    const std::size_t f = detail::header_uint(h, "f", path);
    const std::size_t k = detail::header_uint(h, "k", path);
    ScaWeights w{Matrix(f, k), Matrix(k, f)};
    std::vector<double> flat(2 * f * k);
    detail::read_payload(in, path, line.size() + 1, flat.size(), flat.data());
    for (std::size_t i = 0; i < f * k; ++i) w.encoder.data()[i] = flat[i];
    for (std::size_t i = 0; i < k * f; ++i) w.decoder.data()[i] = flat[f * k + i];
    require_finite(w.encoder, "load_weights encoder");
    require_finite(w.decoder, "load_weights decoder");
    return w;
}

inline Matrix load_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw format_error(path + ": cannot open");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            const std::string cell = line.substr(pos, comma - pos);
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() && (cell[used] == ' ' || cell[used] == '\t')) ++used;
                if (used != cell.size()) throw std::invalid_argument("trailing junk");
                row.push_back(v);
            } catch (const std::exception&) {
                throw format_error(path + ": line " + std::to_string(lineno) + ", column " +
                                   std::to_string(row.size() + 1) + ": not a number: '" + cell + "'");
            }
            pos = comma + 1;
            if (comma == line.size()) break;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw format_error(path + ": line " + std::to_string(lineno) + " has " +
                               std::to_string(row.size()) + " columns, expected " +
                               std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw format_error(path + ": no data rows");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    require_finite(m, ("load_csv_matrix " + path).c_str());
    return m;
}

inline void save_csv_matrix(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw format_error(path + ": cannot open for writing");
    char buf[64];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            if (j) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw format_error(path + ": write failed");
}

/// Dispatch by extension: .hsx containers, or .csv as an N x F cube with
/// width=N, height=1 raster geometry.
inline HsiDataset load_dataset(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".hsx") return load_hsx(path);
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
        HsiDataset ds;
        ds.y = load_csv_matrix(path);
        ds.width = ds.pixels();
        ds.height = 1;
        validate_dataset(ds, ("load_dataset " + path).c_str());
        return ds;
    }
    throw format_error(path + ": unknown dataset extension (expected .hsx or .csv)");
}

} // namespace sca
