#include "mrcdm/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "mrcdm/baselines.hpp"
#include "mrcdm/csv.hpp"
#include "mrcdm/errors.hpp"
#include "mrcdm/threads.hpp"

namespace mrcdm {

std::string DatasetSpec::id() const {
    if (!use_synth) return "csv:" + csv_path + ":" + column;
    return "synth:n=" + std::to_string(synth.n_points) + ":seed=" + std::to_string(synth.seed);
}

PreparedData prepare_dataset(const DatasetSpec& spec, const SplitSpec& split) {
    TimeSeries raw = spec.use_synth ? synthesize(spec.synth) : read_ett_csv(spec.csv_path, spec.column);
    if (!raw.fully_observed()) raw = interpolate_missing(raw);
    raw = clip_outliers_3sigma(raw);

    PreparedData out;
    out.dataset_id = spec.id();
    Splits s = chronological_split(raw, split);
    out.normalizer = fit_normalizer(s.train);
    out.splits.train = normalize(s.train, out.normalizer);
    out.splits.val = normalize(s.val, out.normalizer);
    out.splits.test = normalize(s.test, out.normalizer);
    return out;
}

MetricReport evaluate_model(const Model& model, const TimeSeries& test, Rng eval_rng) {
    const auto windows = make_windows(test, static_cast<std::size_t>(model.cfg.seq_len),
                                      static_cast<std::size_t>(model.cfg.horizon),
                                      static_cast<std::size_t>(model.cfg.horizon));
    std::vector<MetricReport> reports(windows.size());
    parallel_for(windows.size(), [&](std::size_t w) {
        Rng rng = eval_rng.fork(w);
        const TimeSeries pred = forecast(model, windows[w].history, rng);
        reports[w] = compute_metrics(pred, windows[w].target);
    });
    return average_reports(reports);
}

MetricReport evaluate_baseline(const std::string& name, const PreparedData& data, int seq_len,
                               int horizon, Rng eval_rng) {
    const auto windows = make_windows(data.splits.test, static_cast<std::size_t>(seq_len),
                                      static_cast<std::size_t>(horizon),
                                      static_cast<std::size_t>(horizon));
    ArimaModel arima;
    if (name == "arima") arima = arima_fit(data.splits.train);

    std::vector<MetricReport> reports(windows.size());
    parallel_for(windows.size(), [&](std::size_t w) {
        TimeSeries pred;
        if (name == "seasonal_naive") {
            pred = seasonal_naive(windows[w].history, static_cast<std::size_t>(horizon));
        } else if (name == "naive_last") {
            pred = naive_last(windows[w].history, static_cast<std::size_t>(horizon));
        } else if (name == "arima") {
            Rng rng = eval_rng.fork(w);
            pred = arima_forecast(arima, windows[w].history, static_cast<std::size_t>(horizon), rng)
                       .point;
        } else {
            throw ConfigError("evaluate_baseline: unknown baseline '" + name + "'");
        }
        reports[w] = compute_metrics(pred, windows[w].target);
    });
    return average_reports(reports);
}

RunResult run_single(const ModelConfig& cfg, const PreparedData& data) {
    const auto t0 = std::chrono::steady_clock::now();
    Model model = build_model(cfg);
    RunResult out;
    out.trace = train_model(model, data.splits.train);
    out.metrics = evaluate_model(model, data.splits.test, Rng(cfg.seed).fork(3));
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.config_hash = config_hash(cfg);
    return out;
}

std::vector<ReportRow> run_ablations(const ModelConfig& base, const PreparedData& data,
                                     const std::vector<Variant>& variants,
                                     const std::vector<std::uint64_t>& seeds) {
    std::vector<ReportRow> rows;
    for (Variant v : variants) {
        for (std::uint64_t seed : seeds) {
            ModelConfig cfg = base;
            cfg.variant = v;
            cfg.seed = seed;
            const RunResult r = run_single(cfg, data);
            rows.push_back(ReportRow{variant_name(v), seed, cfg.seq_len, cfg.horizon, r.metrics,
                                     r.config_hash});
        }
    }
    return rows;
}

std::vector<ReportRow> input_length_sweep(const ModelConfig& base, const PreparedData& data,
                                          const std::vector<int>& seq_lens,
                                          const std::vector<std::uint64_t>& seeds) {
    std::vector<ReportRow> rows;
    for (int seq_len : seq_lens) {
        for (std::uint64_t seed : seeds) {
            ModelConfig cfg = base;
            cfg.seq_len = seq_len;
            cfg.seed = seed;
            const RunResult r = run_single(cfg, data);
            rows.push_back(ReportRow{variant_name(cfg.variant), seed, seq_len, cfg.horizon,
                                     r.metrics, r.config_hash});
        }
    }
    return rows;
}

std::vector<ReportRow> multi_horizon(const ModelConfig& base, const PreparedData& data,
                                     const std::vector<int>& horizons,
                                     const std::vector<std::uint64_t>& seeds) {
    std::vector<ReportRow> rows;
    for (int horizon : horizons) {
        for (std::uint64_t seed : seeds) {
            ModelConfig cfg = base;
            cfg.horizon = horizon;
            cfg.seed = seed;
            const RunResult r = run_single(cfg, data);
            rows.push_back(ReportRow{variant_name(cfg.variant), seed, cfg.seq_len, horizon,
                                     r.metrics, r.config_hash});
        }
    }
    return rows;
}

SeedStats multi_seed_stats(const std::vector<MetricReport>& per_seed) {
    if (per_seed.empty()) throw DataError("multi_seed_stats: no reports");
    SeedStats out;
    out.n_seeds = per_seed.size();
    const double n = static_cast<double>(per_seed.size());
    double mse = 0, mae = 0, rmse = 0;
    for (const auto& r : per_seed) {
        mse += r.mse;
        mae += r.mae;
        rmse += r.rmse;
    }
    out.mean.mse = mse / n;
    out.mean.mae = mae / n;
    out.mean.rmse = rmse / n;
    double v_mse = 0, v_mae = 0, v_rmse = 0;
    for (const auto& r : per_seed) {
        v_mse += (r.mse - out.mean.mse) * (r.mse - out.mean.mse);
        v_mae += (r.mae - out.mean.mae) * (r.mae - out.mean.mae);
        v_rmse += (r.rmse - out.mean.rmse) * (r.rmse - out.mean.rmse);
    }
    out.stddev.mse = std::sqrt(v_mse / n);
    out.stddev.mae = std::sqrt(v_mae / n);
    out.stddev.rmse = std::sqrt(v_rmse / n);
    return out;
}

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    cells.reserve(rows.size());
    for (const auto& r : rows) {
        cells.push_back({r.label, std::to_string(r.seed), std::to_string(r.seq_len),
                         std::to_string(r.horizon), format_double(r.metrics.mse),
                         format_double(r.metrics.mae), format_double(r.metrics.rmse),
                         std::to_string(r.metrics.n_windows), r.config_hash});
    }
    write_csv(path, {"label", "seed", "seq_len", "horizon", "mse", "mae", "rmse", "n_windows",
                     "config_hash"},
              cells);
}

void write_manifest(const std::string& path, const ModelConfig& cfg, const std::string& dataset_id,
                    const MetricReport& metrics, double wall_seconds) {
    nlohmann::json j;
    j["artifact_version"] = kArtifactVersion;
    j["config"] = nlohmann::json::parse(model_config_to_json(cfg));
    j["config_hash"] = config_hash(cfg);
    j["seed"] = cfg.seed;
    j["variant"] = variant_name(cfg.variant);
    j["dataset_id"] = dataset_id;
    j["wall_clock_seconds"] = wall_seconds;
    j["metrics"] = {{"mse", metrics.mse},
                    {"mae", metrics.mae},
                    {"rmse", metrics.rmse},
                    {"n_windows", metrics.n_windows}};
    std::ofstream out(path);
    if (!out) throw IoError("write_manifest: cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write_manifest: write failed for " + path);
}

}  // namespace mrcdm
