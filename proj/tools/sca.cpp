// sca: train and inspect a bi-orthogonal unmixing autoencoder from the shell.
//
// Subcommands: synth, train, eval, export, tail, sweep. Every command reads
// optional defaults from a JSON config file (--config), with explicit flags
// taking precedence, and records the resolved values in a manifest so a run
// can be reproduced exactly from its artifacts.
//
// Exit codes: 0 success, 1 contract/format/usage error, 2 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include "sca/export.hpp"
#include "sca/io.hpp"
#include "sca/metrics.hpp"
#include "sca/optim.hpp"
#include "sca/synth.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw sca::format_error(path + ": cannot open config");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw sca::format_error(path + ": config is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw sca::format_error(path + ": config must be a JSON object");
    return j;
}

/// Precedence: explicit flag > config file entry > built-in default.
template <typename T>
void merge_cfg(const CLI::App& cmd, const json& cfg, const std::string& flag, const char* key,
               T& value) {
    if (cmd.count(flag) > 0 || !cfg.contains(key)) return;
    const json& v = cfg.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean())
            throw sca::format_error(std::string("config key '") + key + "' must be a boolean");
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned())
            throw sca::format_error(std::string("config key '") + key +
                                    "' must be a nonnegative integer");
    }
    try {
        value = v.get<T>();
    } catch (const json::exception& e) {
        throw sca::format_error(std::string("config key '") + key + "': " + e.what());
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sca::format_error(path + ": cannot open");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw sca::format_error(path + ": not valid JSON: " + e.what());
    }
    return j;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw sca::format_error(path.string() + ": cannot open for writing");
    out << j.dump(2) << '\n';
    if (!out) throw sca::format_error(path.string() + ": write failed");
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sca::format_error(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw sca::format_error(path.string() + ": write failed");
}

/// Abundance matrices travel as HSX containers or plain CSV.
sca::Matrix load_matrix_any(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".hsx") return sca::load_hsx(path).y;
    return sca::load_csv_matrix(path);
}

struct GtPieces {
    std::optional<sca::Matrix> endmembers;
    std::optional<sca::Matrix> abundances;
    std::vector<std::size_t> outlier_indices;
};

/// Ground truth comes either from explicit files or from a synth manifest
/// (whose artifact paths are resolved relative to the manifest's directory).
GtPieces resolve_gt(const std::string& manifest_path, const std::string& e_path,
                    const std::string& a_path) {
    GtPieces out;
    if (!e_path.empty()) out.endmembers = sca::load_csv_matrix(e_path);
    if (!a_path.empty()) out.abundances = load_matrix_any(a_path);
    if (!manifest_path.empty()) {
        const json m = read_json_file(manifest_path);
        const fs::path base = fs::path(manifest_path).parent_path();
        if (m.contains("ground_truth")) {
            const json& g = m.at("ground_truth");
            if (!out.endmembers && g.contains("endmembers"))
                out.endmembers =
                    sca::load_csv_matrix((base / g.at("endmembers").get<std::string>()).string());
            if (!out.abundances && g.contains("abundances"))
                out.abundances =
                    load_matrix_any((base / g.at("abundances").get<std::string>()).string());
        }
        if (m.contains("outlier_indices"))
            for (const json& v : m.at("outlier_indices"))
                out.outlier_indices.push_back(v.get<std::size_t>());
    }
    return out;
}

json report_to_json(const sca::EvalReport& r) {
    return json{{"k_truth", r.k_truth},
                {"k_extracted", r.k_extracted},
                {"null_threshold", r.null_threshold},
                {"masked_rows", r.masked_rows},
                {"permutation", r.permutation},
                {"null_members", r.null_members},
                {"sad_per_member", r.sad_per_member},
                {"rmse_a_per_member", r.rmse_a_per_member},
                {"sad_mean", r.sad_mean},
                {"rmse_a", r.rmse_a},
                {"rmse_e", r.rmse_e},
                {"rmse_y", r.rmse_y},
                {"decoder_range_violations", r.decoder_range_violations}};
}

json published_reference_json() {
    json out = json::object();
    for (const sca::ReferenceResult& ref : sca::kReferenceResults)
        out[ref.scene] = json{{"rmse_y", ref.rmse_y},
                              {"rmse_e", ref.rmse_e},
                              {"sad_e", ref.sad_e},
                              {"rmse_a", ref.rmse_a}};
    return out;
}

std::string join_indices(const std::vector<std::size_t>& v) {
    if (v.empty()) return "none";
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
    std::size_t k = 3, f = 60, n = 2000;
    std::uint64_t seed = 0;
    double purity = 1.0;
    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t noise_seed = 1;
    std::size_t outliers = 0;
    std::uint64_t outlier_seed = 2;
    std::string out = ".";
    std::string config;
};

int run_synth(const CLI::App& cmd, SynthArgs a) {
    const json cfg = load_config_file(a.config);
    merge_cfg(cmd, cfg, "--k", "k", a.k);
    merge_cfg(cmd, cfg, "--f", "f", a.f);
    merge_cfg(cmd, cfg, "--n", "n", a.n);
    merge_cfg(cmd, cfg, "--seed", "seed", a.seed);
    merge_cfg(cmd, cfg, "--purity", "purity", a.purity);
    merge_cfg(cmd, cfg, "--snr", "snr_db", a.snr_db);
    merge_cfg(cmd, cfg, "--noise-seed", "noise_seed", a.noise_seed);
    merge_cfg(cmd, cfg, "--outliers", "outliers", a.outliers);
    merge_cfg(cmd, cfg, "--outlier-seed", "outlier_seed", a.outlier_seed);
    merge_cfg(cmd, cfg, "--out", "out", a.out);

    const auto t0 = std::chrono::steady_clock::now();
    auto [ds, gt] = sca::synth_generate(a.k, a.f, a.n, a.seed, a.purity);
    std::vector<std::size_t> outlier_idx;
    if (std::isfinite(a.snr_db)) ds = sca::add_noise(ds, {a.snr_db, a.noise_seed});
    if (a.outliers > 0) {
        auto [dirty, idx] = sca::add_outliers(ds, {a.outliers, a.outlier_seed});
        ds = std::move(dirty);
        outlier_idx = std::move(idx);
    }

    const fs::path out(a.out);
    fs::create_directories(out);
    sca::save_hsx((out / "dataset.hsx").string(), ds);
    sca::save_csv_matrix((out / "endmembers.csv").string(), gt.endmembers);
    sca::HsiDataset ab;
    ab.y = gt.abundances;
    ab.width = ds.width;
    ab.height = ds.height;
    sca::save_hsx((out / "abundances.hsx").string(), ab);

    json manifest{
        {"kind", "synth"},
        {"params",
         {{"k", a.k},
          {"f", a.f},
          {"n", a.n},
          {"seed", a.seed},
          {"purity", a.purity},
          {"snr_db", std::isfinite(a.snr_db) ? json(a.snr_db) : json(nullptr)},
          {"noise_seed", a.noise_seed},
          {"outliers", a.outliers},
          {"outlier_seed", a.outlier_seed}}},
        {"artifacts",
         {{"dataset", "dataset.hsx"}, {"endmembers", "endmembers.csv"}, {"abundances", "abundances.hsx"}}},
        {"ground_truth", {{"endmembers", "endmembers.csv"}, {"abundances", "abundances.hsx"}}},
        {"outlier_indices", outlier_idx},
        {"wall_clock_sec", seconds_since(t0)}};
    write_json_file(out / "manifest.json", manifest);

    std::cout << "scene: " << a.n << " pixels x " << a.f << " bands, " << a.k << " members ("
              << ds.width << "x" << ds.height << " raster)\n";
    if (std::isfinite(a.snr_db)) std::cout << "noise: " << fmt(a.snr_db) << " dB target SNR\n";
    if (a.outliers > 0) std::cout << "outliers: " << join_indices(outlier_idx) << "\n";
    std::cout << "wrote: " << (out / "dataset.hsx").string() << ", endmembers.csv, abundances.hsx, "
              << "manifest.json\n";
    return 0;
}

// ---------------------------------------------------------------- train ----

struct TrainArgs {
    std::string data;
    std::string out = ".";
    std::size_t k = 3;
    double lambda = 0.001;
    std::size_t epochs = 20, steps = 1000, batch = 64;
    double lr = 1e-4, epsilon = sca::kDefaultEpsilon;
    std::uint64_t seed = 0;
    std::size_t log_every = 100;
    std::string init = "random";
    std::string gt;
    std::string config;
};

int run_train(const CLI::App& cmd, TrainArgs a) {
    const json cfg = load_config_file(a.config);
    merge_cfg(cmd, cfg, "--data", "data", a.data);
    merge_cfg(cmd, cfg, "--out", "out", a.out);
    merge_cfg(cmd, cfg, "--k", "k", a.k);
    merge_cfg(cmd, cfg, "--lambda", "lambda", a.lambda);
    merge_cfg(cmd, cfg, "--epochs", "epochs", a.epochs);
    merge_cfg(cmd, cfg, "--steps", "steps_per_epoch", a.steps);
    merge_cfg(cmd, cfg, "--batch", "batch_size", a.batch);
    merge_cfg(cmd, cfg, "--lr", "lr", a.lr);
    merge_cfg(cmd, cfg, "--epsilon", "epsilon", a.epsilon);
    merge_cfg(cmd, cfg, "--seed", "seed", a.seed);
    merge_cfg(cmd, cfg, "--log-every", "log_every", a.log_every);
    merge_cfg(cmd, cfg, "--init", "init", a.init);
    merge_cfg(cmd, cfg, "--gt", "gt", a.gt);
    if (a.data.empty()) throw sca::contract_error("train: --data is required");

    const auto t0 = std::chrono::steady_clock::now();
    const sca::HsiDataset raw = sca::load_dataset(a.data);
    const sca::HsiDataset scaled = sca::scale(raw);

    sca::TrainConfig tc;
    tc.k = a.k;
    tc.lambda = a.lambda;
    tc.epochs = a.epochs;
    tc.steps_per_epoch = a.steps;
    tc.batch_size = a.batch;
    tc.lr = a.lr;
    tc.epsilon = a.epsilon;
    tc.seed = a.seed;
    tc.log_every = a.log_every;

    sca::ScaWeights w0;
    if (a.init == "random") {
        w0 = sca::init_weights(raw.bands(), tc.k, a.seed);
    } else if (a.init == "gt") {
        if (a.gt.empty())
            throw sca::contract_error("train: --init gt needs --gt <endmembers.csv>");
        const sca::Matrix e_true = sca::load_csv_matrix(a.gt);
        if (cmd.count("--k") > 0 && e_true.rows() != tc.k)
            throw sca::contract_error("train: --k " + std::to_string(tc.k) + " contradicts " + a.gt +
                                      " with " + std::to_string(e_true.rows()) + " rows");
        tc.k = e_true.rows();
        w0 = sca::gt_init(sca::scale_endmembers(e_true, *scaled.scale_params));
    } else {
        throw sca::contract_error("train: --init must be 'random' or 'gt', got '" + a.init + "'");
    }

    auto [w, hist] = sca::train(scaled, tc, std::move(w0));

    auto [a_full, yhat] = sca::forward(scaled.y, w, tc.epsilon);
    const std::vector<std::size_t> nulls = sca::detect_null_members(a_full, 1e-3);
    const sca::LossBreakdown final_loss = sca::loss(scaled.y, w, tc.lambda, tc.epsilon);

    const fs::path out(a.out);
    fs::create_directories(out);
    sca::save_weights((out / "weights.hsx").string(), w);
    write_text_file(out / "history.csv", hist.to_csv());

    json manifest{{"kind", "train"},
                  {"data", a.data},
                  {"config",
                   {{"k", tc.k},
                    {"lambda", tc.lambda},
                    {"epochs", tc.epochs},
                    {"steps_per_epoch", tc.steps_per_epoch},
                    {"batch_size", tc.batch_size},
                    {"lr", tc.lr},
                    {"epsilon", tc.epsilon},
                    {"seed", tc.seed},
                    {"log_every", tc.log_every}}},
                  {"init", a.init},
                  {"gt_endmembers", a.gt.empty() ? json(nullptr) : json(a.gt)},
                  {"scale", {{"y_min", scaled.scale_params->y_min}, {"y_max", scaled.scale_params->y_max}}},
                  {"artifacts", {{"weights", "weights.hsx"}, {"history", "history.csv"}}},
                  {"final_loss",
                   {{"recon", final_loss.recon},
                    {"biorth", final_loss.biorth},
                    {"volume", final_loss.volume},
                    {"total", final_loss.total},
                    {"lambda", final_loss.lambda}}},
                  {"tail_bound", hist.tail_bound},
                  {"null_members", nulls},
                  {"wall_clock_sec", seconds_since(t0)}};
    write_json_file(out / "manifest.json", manifest);

    std::cout << "final recon: " << fmt(final_loss.recon) << "\n"
              << "final biorth: " << fmt(final_loss.biorth) << "\n"
              << "final volume: " << fmt(final_loss.volume) << "\n"
              << "final total: " << fmt(final_loss.total) << "\n"
              << "tail bound: " << fmt(hist.tail_bound) << "\n"
              << "null members: " << join_indices(nulls) << "\n"
              << "wrote: " << (out / "weights.hsx").string() << ", history.csv, manifest.json\n";
    return 0;
}

// ----------------------------------------------------------------- eval ----

struct EvalArgs {
    std::string data, weights;
    std::string gt_endmembers, gt_abundances, manifest;
    bool exclude_outliers = false;
    std::vector<std::size_t> exclude_rows;
    double epsilon = sca::kDefaultEpsilon;
    double null_threshold = 1e-3;
    std::string out = ".";
    std::string config;
};

int run_eval(const CLI::App& cmd, EvalArgs a) {
    const json cfg = load_config_file(a.config);
    merge_cfg(cmd, cfg, "--data", "data", a.data);
    merge_cfg(cmd, cfg, "--weights", "weights", a.weights);
    merge_cfg(cmd, cfg, "--gt-endmembers", "gt_endmembers", a.gt_endmembers);
    merge_cfg(cmd, cfg, "--gt-abundances", "gt_abundances", a.gt_abundances);
    merge_cfg(cmd, cfg, "--manifest", "manifest", a.manifest);
    merge_cfg(cmd, cfg, "--exclude-outliers", "exclude_outliers", a.exclude_outliers);
    merge_cfg(cmd, cfg, "--epsilon", "epsilon", a.epsilon);
    merge_cfg(cmd, cfg, "--null-threshold", "null_threshold", a.null_threshold);
    merge_cfg(cmd, cfg, "--out", "out", a.out);
    if (a.data.empty() || a.weights.empty())
        throw sca::contract_error("eval: --data and --weights are required");

    const sca::HsiDataset raw = sca::load_dataset(a.data);
    const sca::ScaWeights w = sca::load_weights(a.weights);
    const GtPieces gt = resolve_gt(a.manifest, a.gt_endmembers, a.gt_abundances);
    if (a.exclude_outliers && a.manifest.empty())
        throw sca::contract_error("eval: --exclude-outliers needs --manifest for the indices");

    std::vector<std::size_t> excluded = a.exclude_rows;
    if (a.exclude_outliers)
        excluded.insert(excluded.end(), gt.outlier_indices.begin(), gt.outlier_indices.end());

    const fs::path out(a.out);
    fs::create_directories(out);

    if (!gt.endmembers || !gt.abundances) {
        if (gt.endmembers || gt.abundances)
            throw sca::contract_error(
                "eval: ground truth needs both --gt-endmembers and --gt-abundances");
        // Ground-truth-free mode: only self-contained quantities.
        const sca::HsiDataset scaled = sca::scale(raw);
        const sca::LossBreakdown bd = sca::loss(scaled.y, w, 0.0, a.epsilon);
        const double span = scaled.scale_params->y_max - scaled.scale_params->y_min;
        const double rmse_y = bd.recon * span / std::sqrt(static_cast<double>(raw.bands()));
        const char* note =
            "no ground truth given; pass --gt-endmembers and --gt-abundances (or --manifest) "
            "for SAD/RMSE(A)/RMSE(E)";
        json rep{{"kind", "eval"},
                 {"mode", "gt-free"},
                 {"data", a.data},
                 {"weights", a.weights},
                 {"note", note},
                 {"rmse_y", rmse_y},
                 {"biorth", bd.biorth},
                 {"volume", bd.volume}};
        write_json_file(out / "report.json", rep);
        write_text_file(out / "report_row.csv", "data,rmse_y,biorth,volume\n" + a.data + "," +
                                                    fmt(rmse_y) + "," + fmt(bd.biorth) + "," +
                                                    fmt(bd.volume) + "\n");
        std::cout << "note: " << note << "\n"
                  << "rmse_y: " << fmt(rmse_y) << "\n"
                  << "biorth: " << fmt(bd.biorth) << "\n"
                  << "volume: " << fmt(bd.volume) << "\n"
                  << "wrote: " << (out / "report.json").string() << ", report_row.csv\n";
        return 0;
    }

    const sca::GroundTruth truth{*gt.endmembers, *gt.abundances};
    const sca::EvalReport rep =
        sca::evaluate(w, raw, truth, a.epsilon, a.null_threshold, excluded);

    json full{{"kind", "eval"},
              {"data", a.data},
              {"weights", a.weights},
              {"excluded_rows", excluded},
              {"report", report_to_json(rep)},
              {"published_reference", published_reference_json()}};
    write_json_file(out / "report.json", full);

    std::string row_hdr =
        "data,k_truth,k_extracted,masked_rows,null_members,sad_mean,rmse_a,rmse_e,rmse_y,"
        "decoder_range_violations\n";
    std::string row = a.data + "," + std::to_string(rep.k_truth) + "," +
                      std::to_string(rep.k_extracted) + "," + std::to_string(rep.masked_rows) +
                      "," + std::to_string(rep.null_members.size()) + "," + fmt(rep.sad_mean) +
                      "," + fmt(rep.rmse_a) + "," + fmt(rep.rmse_e) + "," + fmt(rep.rmse_y) + "," +
                      std::to_string(rep.decoder_range_violations) + "\n";
    write_text_file(out / "report_row.csv", row_hdr + row);

    std::cout << "sad_mean: " << fmt(rep.sad_mean) << "\n"
              << "rmse_a: " << fmt(rep.rmse_a) << "\n"
              << "rmse_e: " << fmt(rep.rmse_e) << "\n"
              << "rmse_y: " << fmt(rep.rmse_y) << "\n"
              << "null members: " << join_indices(rep.null_members) << "\n"
              << "masked rows: " << rep.masked_rows << "\n"
              << "wrote: " << (out / "report.json").string() << ", report_row.csv\n";
    return 0;
}

// --------------------------------------------------------------- export ----

struct ExportArgs {
    std::string data, weights;
    std::string gt_endmembers, gt_abundances, manifest;
    std::string out = ".";
    std::string prefix = "map";
    double epsilon = sca::kDefaultEpsilon;
    std::string config;
};

int run_export(const CLI::App& cmd, ExportArgs a) {
    const json cfg = load_config_file(a.config);
    merge_cfg(cmd, cfg, "--data", "data", a.data);
    merge_cfg(cmd, cfg, "--weights", "weights", a.weights);
    merge_cfg(cmd, cfg, "--gt-endmembers", "gt_endmembers", a.gt_endmembers);
    merge_cfg(cmd, cfg, "--gt-abundances", "gt_abundances", a.gt_abundances);
    merge_cfg(cmd, cfg, "--manifest", "manifest", a.manifest);
    merge_cfg(cmd, cfg, "--out", "out", a.out);
    merge_cfg(cmd, cfg, "--prefix", "prefix", a.prefix);
    merge_cfg(cmd, cfg, "--epsilon", "epsilon", a.epsilon);
    if (a.data.empty() || a.weights.empty())
        throw sca::contract_error("export: --data and --weights are required");

    const sca::HsiDataset raw = sca::load_dataset(a.data);
    const sca::ScaWeights w = sca::load_weights(a.weights);
    const GtPieces gt = resolve_gt(a.manifest, a.gt_endmembers, a.gt_abundances);

    const sca::HsiDataset scaled = sca::scale(raw);
    auto [a_full, yhat] = sca::forward(scaled.y, w, a.epsilon);
    const sca::Matrix e_un = sca::unscale_endmembers(w.decoder, *scaled.scale_params);

    const fs::path out(a.out);
    fs::create_directories(out);
    const std::string pfx = (out / a.prefix).string();
    std::vector<std::string> written;

    if (raw.has_geometry()) {
        for (std::string& p : sca::export_abundance_maps(pfx, a_full, raw.width, raw.height))
            written.push_back(std::move(p));
        if (gt.endmembers && gt.abundances) {
            const sca::GroundTruth truth{*gt.endmembers, *gt.abundances};
            const sca::EvalReport rep = sca::evaluate(w, raw, truth, a.epsilon);
            for (std::string& p : sca::export_diff_maps(pfx, a_full, *gt.abundances,
                                                        rep.permutation, raw.width, raw.height))
                written.push_back(std::move(p));
        }
    } else {
        std::cerr << "warning: dataset has no raster geometry; skipping abundance maps\n";
    }

    sca::export_spectra_csv((out / "spectra.csv").string(), e_un,
                            gt.endmembers ? &*gt.endmembers : nullptr);
    written.push_back((out / "spectra.csv").string());
    sca::export_abundance_csv((out / "scatter.csv").string(), a_full);
    written.push_back((out / "scatter.csv").string());
    sca::export_abundance_csv((out / "projection.csv").string(), a_full, 2);
    written.push_back((out / "projection.csv").string());

    for (const std::string& p : written) std::cout << "wrote: " << p << "\n";
    return 0;
}

// ----------------------------------------------------------------- tail ----

struct TailArgs {
    std::string data;
    std::size_t k = 0;
    std::string weights;
    double epsilon = sca::kDefaultEpsilon;
    std::string config;
};

int run_tail(const CLI::App& cmd, TailArgs a) {
    const json cfg = load_config_file(a.config);
    merge_cfg(cmd, cfg, "--data", "data", a.data);
    merge_cfg(cmd, cfg, "--k", "k", a.k);
    merge_cfg(cmd, cfg, "--weights", "weights", a.weights);
    merge_cfg(cmd, cfg, "--epsilon", "epsilon", a.epsilon);
    if (a.data.empty() || a.k == 0)
        throw sca::contract_error("tail: --data and --k are required");

    const sca::HsiDataset raw = sca::load_dataset(a.data);
    const sca::HsiDataset scaled = sca::scale(raw);
    const double raw_tail = sca::tail_energy(scaled.y, a.k);
    const double bound = raw_tail / std::sqrt(static_cast<double>(raw.pixels()));
    std::cout << "tail_energy: " << fmt(raw_tail) << "\n"
              << "tail_bound: " << fmt(bound) << "\n";
    if (!a.weights.empty()) {
        const sca::ScaWeights w = sca::load_weights(a.weights);
        const sca::LossBreakdown bd = sca::loss(scaled.y, w, 0.0, a.epsilon);
        std::cout << "recon: " << fmt(bd.recon) << "\n"
                  << "margin: " << fmt(bd.recon - bound) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------- sweep ----

struct SweepArgs {
    std::string mode;
    std::string out = "sweep";
    std::size_t k = 3, f = 60, n = 2000;
    std::uint64_t seed = 0;
    double purity = 1.0;
    std::size_t epochs = 20, steps = 1000, batch = 64;
    double lr = 1e-4, epsilon = sca::kDefaultEpsilon;
    double lambda = 0.001;
    std::string config;
};

int run_sweep(const CLI::App& cmd, SweepArgs a) {
    const json cfg = load_config_file(a.config);
    merge_cfg(cmd, cfg, "--mode", "mode", a.mode);
    merge_cfg(cmd, cfg, "--out", "out", a.out);
    merge_cfg(cmd, cfg, "--k", "k", a.k);
    merge_cfg(cmd, cfg, "--f", "f", a.f);
    merge_cfg(cmd, cfg, "--n", "n", a.n);
    merge_cfg(cmd, cfg, "--seed", "seed", a.seed);
    merge_cfg(cmd, cfg, "--purity", "purity", a.purity);
    merge_cfg(cmd, cfg, "--epochs", "epochs", a.epochs);
    merge_cfg(cmd, cfg, "--steps", "steps_per_epoch", a.steps);
    merge_cfg(cmd, cfg, "--batch", "batch_size", a.batch);
    merge_cfg(cmd, cfg, "--lr", "lr", a.lr);
    merge_cfg(cmd, cfg, "--epsilon", "epsilon", a.epsilon);
    merge_cfg(cmd, cfg, "--lambda", "lambda", a.lambda);
    if (a.mode != "noise" && a.mode != "outliers")
        throw sca::contract_error("sweep: --mode must be 'noise' or 'outliers', got '" + a.mode +
                                  "'");

    const double snr_grid[] = {100.0, 50.0, 40.0, 30.0, 20.0};
    const double lambda_grid[] = {0.05, 0.1, 0.5, 1.0, 10.0};
    const std::size_t outlier_grid[] = {5, 10, 20, 50, 100};

    const auto t0 = std::chrono::steady_clock::now();
    auto [base, gt] = sca::synth_generate(a.k, a.f, a.n, a.seed, a.purity);

    const fs::path out(a.out);
    fs::create_directories(out);
    std::string table =
        "mode,snr_db,lambda,outlier_count,k_train,seed,sad_mean,rmse_a,rmse_e,rmse_y,"
        "null_members,final_recon,tail_bound\n";
    std::vector<std::string> cells;

    auto run_cell = [&](const std::string& tag, const sca::HsiDataset& data, std::size_t k_train,
                        double lambda, double snr_db, std::size_t outlier_count,
                        const std::vector<std::size_t>& mask) {
        const sca::HsiDataset scaled = sca::scale(data);
        sca::TrainConfig tc;
        tc.k = k_train;
        tc.lambda = lambda;
        tc.epochs = a.epochs;
        tc.steps_per_epoch = a.steps;
        tc.batch_size = a.batch;
        tc.lr = a.lr;
        tc.epsilon = a.epsilon;
        tc.seed = a.seed;
        auto [w, hist] = sca::train(scaled, tc, sca::init_weights(a.f, k_train, a.seed));
        const sca::EvalReport rep = sca::evaluate(w, data, gt, a.epsilon, 1e-3, mask);
        const double recon = hist.records.empty() ? 0.0 : hist.records.back().full.recon;

        const fs::path cell = out / tag;
        fs::create_directories(cell);
        sca::save_weights((cell / "weights.hsx").string(), w);
        write_json_file(cell / "report.json",
                        json{{"report", report_to_json(rep)},
                             {"snr_db", std::isfinite(snr_db) ? json(snr_db) : json(nullptr)},
                             {"lambda", lambda},
                             {"outlier_count", outlier_count},
                             {"k_train", k_train}});
        cells.push_back(tag);

        char num[64];
        std::string row = a.mode;
        if (std::isfinite(snr_db)) {
            std::snprintf(num, sizeof num, "%g", snr_db);
            row += std::string(",") + num;
        } else {
            row += ",";
        }
        std::snprintf(num, sizeof num, "%g", lambda);
        row += std::string(",") + num;
        row += "," + std::to_string(outlier_count) + "," + std::to_string(k_train) + "," +
               std::to_string(a.seed) + "," + fmt(rep.sad_mean) + "," + fmt(rep.rmse_a) + "," +
               fmt(rep.rmse_e) + "," + fmt(rep.rmse_y) + "," +
               std::to_string(rep.null_members.size()) + "," + fmt(recon) + "," +
               fmt(hist.tail_bound) + "\n";
        table += row;
        std::cout << "cell " << tag << ": sad_mean=" << fmt(rep.sad_mean)
                  << " rmse_a=" << fmt(rep.rmse_a) << " nulls=" << rep.null_members.size() << "\n";
    };

    if (a.mode == "noise") {
        for (std::size_t i = 0; i < std::size(snr_grid); ++i) {
            const sca::HsiDataset noisy =
                sca::add_noise(base, {snr_grid[i], a.seed + 1 + i});
            for (double lambda : lambda_grid) {
                char tag[64];
                std::snprintf(tag, sizeof tag, "cell_snr%g_lambda%g", snr_grid[i], lambda);
                run_cell(tag, noisy, a.k, lambda, snr_grid[i], 0, {});
            }
        }
    } else {
        for (std::size_t count : outlier_grid) {
            auto [dirty, idx] = sca::add_outliers(base, {count, a.seed + 1 + count});
            char tag[64];
            std::snprintf(tag, sizeof tag, "cell_outliers%zu", count);
            run_cell(tag, dirty, a.k + 1, a.lambda,
                     std::numeric_limits<double>::infinity(), count, idx);
        }
    }

    write_text_file(out / "sweep.csv", table);
    json manifest{{"kind", "sweep"},
                  {"mode", a.mode},
                  {"params",
                   {{"k", a.k},
                    {"f", a.f},
                    {"n", a.n},
                    {"seed", a.seed},
                    {"purity", a.purity},
                    {"epochs", a.epochs},
                    {"steps_per_epoch", a.steps},
                    {"batch_size", a.batch},
                    {"lr", a.lr},
                    {"epsilon", a.epsilon},
                    {"lambda", a.lambda}}},
                  {"cells", cells},
                  {"wall_clock_sec", seconds_since(t0)}};
    write_json_file(out / "manifest.json", manifest);
    std::cout << "wrote: " << (out / "sweep.csv").string() << " (" << cells.size() << " cells)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bi-orthogonal autoencoder for linear hyperspectral unmixing"};
    app.require_subcommand(1);

    SynthArgs sa;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene with known ground truth");
    synth->add_option("--k", sa.k, "endmember count")->capture_default_str();
    synth->add_option("--f", sa.f, "band count")->capture_default_str();
    synth->add_option("--n", sa.n, "pixel count")->capture_default_str();
    synth->add_option("--seed", sa.seed, "generator seed")->capture_default_str();
    synth->add_option("--purity", sa.purity, "vertex purity in (0,1]")->capture_default_str();
    synth->add_option("--snr", sa.snr_db, "add Gaussian noise at this SNR (dB); omit for none");
    synth->add_option("--noise-seed", sa.noise_seed, "noise stream seed")->capture_default_str();
    synth->add_option("--outliers", sa.outliers, "replace this many pixels with uniform spectra")
        ->capture_default_str();
    synth->add_option("--outlier-seed", sa.outlier_seed, "outlier stream seed")->capture_default_str();
    synth->add_option("--out", sa.out, "output directory")->capture_default_str();
    synth->add_option("--config", sa.config, "JSON config file (flags win)");

    TrainArgs ta;
    CLI::App* train = app.add_subcommand("train", "fit weights to a dataset");
    train->add_option("--data", ta.data, "dataset (.hsx or .csv)");
    train->add_option("--out", ta.out, "output directory")->capture_default_str();
    train->add_option("--k", ta.k, "prescribed member count")->capture_default_str();
    train->add_option("--lambda", ta.lambda, "volume penalty weight")->capture_default_str();
    train->add_option("--epochs", ta.epochs, "epochs")->capture_default_str();
    train->add_option("--steps", ta.steps, "steps per epoch")->capture_default_str();
    train->add_option("--batch", ta.batch, "batch size")->capture_default_str();
    train->add_option("--lr", ta.lr, "learning rate")->capture_default_str();
    train->add_option("--epsilon", ta.epsilon, "activation epsilon")->capture_default_str();
    train->add_option("--seed", ta.seed, "init + batch sampling seed")->capture_default_str();
    train->add_option("--log-every", ta.log_every, "full-data loss logging stride")
        ->capture_default_str();
    train->add_option("--init", ta.init, "weight init: random | gt")->capture_default_str();
    train->add_option("--gt", ta.gt, "endmember CSV for --init gt (original units)");
    train->add_option("--config", ta.config, "JSON config file (flags win)");

    EvalArgs ea;
    CLI::App* eval = app.add_subcommand("eval", "score weights against ground truth");
    eval->add_option("--data", ea.data, "dataset (.hsx or .csv)");
    eval->add_option("--weights", ea.weights, "weights file");
    eval->add_option("--gt-endmembers", ea.gt_endmembers, "truth endmember CSV (original units)");
    eval->add_option("--gt-abundances", ea.gt_abundances, "truth abundances (.hsx or .csv)");
    eval->add_option("--manifest", ea.manifest, "synth manifest.json supplying ground truth");
    eval->add_flag("--exclude-outliers", ea.exclude_outliers,
                   "mask the manifest's outlier_indices out of the metrics");
    eval->add_option("--exclude-rows", ea.exclude_rows, "extra pixel rows to mask");
    eval->add_option("--epsilon", ea.epsilon, "activation epsilon")->capture_default_str();
    eval->add_option("--null-threshold", ea.null_threshold, "null-member abundance threshold")
        ->capture_default_str();
    eval->add_option("--out", ea.out, "output directory")->capture_default_str();
    eval->add_option("--config", ea.config, "JSON config file (flags win)");

    ExportArgs xa;
    CLI::App* exp = app.add_subcommand("export", "write abundance maps, spectra and scatters");
    exp->add_option("--data", xa.data, "dataset (.hsx or .csv)");
    exp->add_option("--weights", xa.weights, "weights file");
    exp->add_option("--gt-endmembers", xa.gt_endmembers, "truth endmember CSV");
    exp->add_option("--gt-abundances", xa.gt_abundances, "truth abundances (.hsx or .csv)");
    exp->add_option("--manifest", xa.manifest, "synth manifest.json supplying ground truth");
    exp->add_option("--out", xa.out, "output directory")->capture_default_str();
    exp->add_option("--prefix", xa.prefix, "map filename prefix")->capture_default_str();
    exp->add_option("--epsilon", xa.epsilon, "activation epsilon")->capture_default_str();
    exp->add_option("--config", xa.config, "JSON config file (flags win)");

    TailArgs la;
    CLI::App* tail = app.add_subcommand("tail", "print the rank-k residual lower bound");
    tail->add_option("--data", la.data, "dataset (.hsx or .csv)");
    tail->add_option("--k", la.k, "rank");
    tail->add_option("--weights", la.weights, "optional weights for the recon margin");
    tail->add_option("--epsilon", la.epsilon, "activation epsilon")->capture_default_str();
    tail->add_option("--config", la.config, "JSON config file (flags win)");

    SweepArgs wa;
    CLI::App* sweep = app.add_subcommand("sweep", "grid runs over noise or outlier settings");
    sweep->add_option("--mode", wa.mode, "noise | outliers");
    sweep->add_option("--out", wa.out, "output directory")->capture_default_str();
    sweep->add_option("--k", wa.k, "true member count")->capture_default_str();
    sweep->add_option("--f", wa.f, "band count")->capture_default_str();
    sweep->add_option("--n", wa.n, "pixel count")->capture_default_str();
    sweep->add_option("--seed", wa.seed, "seed for data + training")->capture_default_str();
    sweep->add_option("--purity", wa.purity, "vertex purity")->capture_default_str();
    sweep->add_option("--epochs", wa.epochs, "epochs per cell")->capture_default_str();
    sweep->add_option("--steps", wa.steps, "steps per epoch")->capture_default_str();
    sweep->add_option("--batch", wa.batch, "batch size")->capture_default_str();
    sweep->add_option("--lr", wa.lr, "learning rate")->capture_default_str();
    sweep->add_option("--epsilon", wa.epsilon, "activation epsilon")->capture_default_str();
    sweep->add_option("--lambda", wa.lambda, "volume weight (outlier mode)")->capture_default_str();
    sweep->add_option("--config", wa.config, "JSON config file (flags win)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return run_synth(*synth, sa);
        if (train->parsed()) return run_train(*train, ta);
        if (eval->parsed()) return run_eval(*eval, ea);
        if (exp->parsed()) return run_export(*exp, xa);
        if (tail->parsed()) return run_tail(*tail, la);
        if (sweep->parsed()) return run_sweep(*sweep, wa);
    } catch (const sca::singular_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const sca::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const sca::contract_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const sca::format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1; // unreachable: require_subcommand guarantees one branch
}
