#pragma once

// Experiment harness: dataset preparation (ingest or synthesize, impute,
// clip, split, normalize), model/baseline evaluation over non-overlapping
// test windows, and the multi-seed, ablation, input-length and multi-horizon
// protocols. Metrics are computed in normalized (z-score) space so synthetic
// and real runs stay comparable.

#include <cstdint>
#include <string>
#include <vector>

#include "mrcdm/datagen.hpp"
#include "mrcdm/metrics.hpp"
#include "mrcdm/pipeline.hpp"
#include "mrcdm/timeseries.hpp"

namespace mrcdm {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Input data: either an ETT-format CSV column or a synthetic draw.
struct DatasetSpec {
    bool use_synth = true;
    SynthConfig synth;
    std::string csv_path;
    std::string column = "LUFL";

    std::string id() const;
};

struct PreparedData {
    Splits splits;  ///< normalized train/val/test
    Normalizer normalizer;
    std::string dataset_id;
};

/// Ingest -> interpolate missing -> 3-sigma clip -> chronological split ->
/// z-score by train statistics.
PreparedData prepare_dataset(const DatasetSpec& spec, const SplitSpec& split = SplitSpec{});

/// Model evaluation over make_windows(test, seq_len, horizon, stride=horizon)
/// in normalized space; windows run in parallel, aggregation is in window
/// order.
MetricReport evaluate_model(const Model& model, const TimeSeries& test, Rng eval_rng);

/// Baselines share the same windows. "arima" is fitted on the train split
/// once and re-filtered through each window history.
MetricReport evaluate_baseline(const std::string& name, const PreparedData& data, int seq_len,
                               int horizon, Rng eval_rng);

struct RunResult {
    MetricReport metrics;
    TrainResult trace;
    double wall_seconds = 0.0;
    std::string config_hash;
};

/// Builds, trains and evaluates one model configuration.
RunResult run_single(const ModelConfig& cfg, const PreparedData& data);

struct ReportRow {
    std::string label;  ///< variant or baseline name
    std::uint64_t seed = 0;
    int seq_len = 0;
    int horizon = 0;
    MetricReport metrics;
    std::string config_hash;
};

/// Every variant trained from scratch per seed with an identical budget.
std::vector<ReportRow> run_ablations(const ModelConfig& base, const PreparedData& data,
                                     const std::vector<Variant>& variants,
                                     const std::vector<std::uint64_t>& seeds);

std::vector<ReportRow> input_length_sweep(const ModelConfig& base, const PreparedData& data,
                                          const std::vector<int>& seq_lens,
                                          const std::vector<std::uint64_t>& seeds);

std::vector<ReportRow> multi_horizon(const ModelConfig& base, const PreparedData& data,
                                     const std::vector<int>& horizons,
                                     const std::vector<std::uint64_t>& seeds);

struct SeedStats {
    MetricReport mean;
    MetricReport stddev;
    std::size_t n_seeds = 0;
};

/// Mean and (population) std per metric across seeds.
SeedStats multi_seed_stats(const std::vector<MetricReport>& per_seed);

/// One CSV row per run; deterministic formatting.
void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows);

/// Reproduction manifest for one run (JSON).
void write_manifest(const std::string& path, const ModelConfig& cfg, const std::string& dataset_id,
                    const MetricReport& metrics, double wall_seconds);

}  // namespace mrcdm
