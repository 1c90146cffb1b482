#include "mrcdm/config.hpp"

#include <fstream>
#include <json.hpp>

#include "mrcdm/errors.hpp"

namespace mrcdm {

namespace {

using nlohmann::json;

/// Collects human-readable problems with their field paths.
struct Problems {
    std::vector<std::string> items;
    void add(const std::string& path, const std::string& what) { items.push_back(path + ": " + what); }
    void raise_if_any(const std::string& context) const {
        if (items.empty()) return;
        std::string msg = context + ":";
        for (const auto& i : items) msg += "\n  - " + i;
        throw ConfigError(msg);
    }
};

template <class T>
void read_field(const json& j, const char* key, T& target, Problems& problems,
                const std::string& path) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception&) {
        problems.add(path + "." + key, "wrong type");
    }
}

void parse_dataset(const json& j, DatasetSpec& ds, Problems& problems) {
    if (j.contains("csv_path")) {
        ds.use_synth = false;
        read_field(j, "csv_path", ds.csv_path, problems, "dataset");
        read_field(j, "column", ds.column, problems, "dataset");
    }
    if (j.contains("synth")) {
        ds.use_synth = true;
        const json& s = j.at("synth");
        read_field(s, "n_points", ds.synth.n_points, problems, "dataset.synth");
        read_field(s, "seed", ds.synth.seed, problems, "dataset.synth");
        read_field(s, "target_mean", ds.synth.target_mean, problems, "dataset.synth");
        read_field(s, "target_std", ds.synth.target_std, problems, "dataset.synth");
        read_field(s, "amp_daily", ds.synth.amp_daily, problems, "dataset.synth");
        read_field(s, "amp_weekly", ds.synth.amp_weekly, problems, "dataset.synth");
        read_field(s, "trend_slope", ds.synth.trend_slope, problems, "dataset.synth");
        read_field(s, "noise_std", ds.synth.noise_std, problems, "dataset.synth");
        read_field(s, "daytime_boost", ds.synth.daytime_boost, problems, "dataset.synth");
        read_field(s, "missing_frac", ds.synth.missing_frac, problems, "dataset.synth");
    }
}

void parse_model(const json& j, ModelConfig& m, Problems& problems) {
    if (j.contains("variant")) {
        try {
            m.variant = variant_from_name(j.at("variant").get<std::string>());
        } catch (const std::exception& e) {
            problems.add("model.variant", e.what());
        }
    }
    read_field(j, "seq_len", m.seq_len, problems, "model");
    read_field(j, "horizon", m.horizon, problems, "model");
    read_field(j, "diffusion_steps", m.diffusion_steps, problems, "model");
    read_field(j, "beta_start", m.beta_start, problems, "model");
    read_field(j, "beta_end", m.beta_end, problems, "model");
    read_field(j, "epochs", m.epochs, problems, "model");
    read_field(j, "batch_size", m.batch_size, problems, "model");
    read_field(j, "learning_rate", m.learning_rate, problems, "model");
    read_field(j, "clip_norm", m.clip_norm, problems, "model");
    read_field(j, "train_stride", m.train_stride, problems, "model");
    read_field(j, "sample_draws", m.sample_draws, problems, "model");
    read_field(j, "seed", m.seed, problems, "model");
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_run_config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("load_run_config: malformed JSON in " + path + ": " + e.what());
    }

    RunConfig cfg;
    Problems problems;
    if (j.contains("dataset")) parse_dataset(j.at("dataset"), cfg.dataset, problems);
    if (j.contains("model")) parse_model(j.at("model"), cfg.model, problems);
    if (j.contains("split")) {
        const json& s = j.at("split");
        read_field(s, "train_frac", cfg.split.train_frac, problems, "split");
        read_field(s, "val_frac", cfg.split.val_frac, problems, "split");
        read_field(s, "test_frac", cfg.split.test_frac, problems, "split");
    }
    read_field(j, "seeds", cfg.seeds, problems, "");
    read_field(j, "out_dir", cfg.out_dir, problems, "");
    read_field(j, "plot", cfg.plot, problems, "");
    read_field(j, "horizons", cfg.horizons, problems, "");
    read_field(j, "seq_lens", cfg.seq_lens, problems, "");
    read_field(j, "ablation_variants", cfg.ablation_variants, problems, "");
    problems.raise_if_any("invalid run config " + path);
    return cfg;
}

void validate_run_config(const RunConfig& cfg) {
    Problems problems;
    if (cfg.dataset.use_synth) {
        if (cfg.dataset.synth.n_points < 1000) problems.add("dataset.synth.n_points", "must be >= 1000");
        if (cfg.dataset.synth.noise_std < 0) problems.add("dataset.synth.noise_std", "must be >= 0");
        if (cfg.dataset.synth.daytime_boost < 1) problems.add("dataset.synth.daytime_boost", "must be >= 1");
    } else if (cfg.dataset.csv_path.empty()) {
        problems.add("dataset.csv_path", "must not be empty");
    }
    const double frac_sum = cfg.split.train_frac + cfg.split.val_frac + cfg.split.test_frac;
    if (std::abs(frac_sum - 1.0) > 1e-9) problems.add("split", "fractions must sum to 1");
    if (cfg.model.seq_len < 2) problems.add("model.seq_len", "must be >= 2");
    if (cfg.model.horizon < 1) problems.add("model.horizon", "must be >= 1");
    if (cfg.model.diffusion_steps < 1) problems.add("model.diffusion_steps", "must be >= 1");
    if (!(cfg.model.beta_start > 0) || !(cfg.model.beta_start <= cfg.model.beta_end) ||
        !(cfg.model.beta_end < 1))
        problems.add("model.beta_start/beta_end", "need 0 < start <= end < 1");
    if (cfg.model.epochs < 0) problems.add("model.epochs", "must be >= 0");
    if (cfg.model.batch_size < 1) problems.add("model.batch_size", "must be >= 1");
    if (cfg.model.learning_rate <= 0) problems.add("model.learning_rate", "must be positive");
    if (cfg.model.train_stride < 1) problems.add("model.train_stride", "must be >= 1");
    if (cfg.model.sample_draws < 1) problems.add("model.sample_draws", "must be >= 1");
    if (cfg.seeds.empty()) problems.add("seeds", "must not be empty");
    if (cfg.out_dir.empty()) problems.add("out_dir", "must not be empty");
    for (const auto& name : cfg.ablation_variants) {
        try {
            variant_from_name(name);
        } catch (const std::exception&) {
            problems.add("ablation_variants", "unknown variant '" + name + "'");
        }
    }
    problems.raise_if_any("invalid run config");
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    if (cfg.dataset.use_synth) {
        j["dataset"]["synth"] = {{"n_points", cfg.dataset.synth.n_points},
                                 {"seed", cfg.dataset.synth.seed},
                                 {"target_mean", cfg.dataset.synth.target_mean},
                                 {"target_std", cfg.dataset.synth.target_std},
                                 {"amp_daily", cfg.dataset.synth.amp_daily},
                                 {"amp_weekly", cfg.dataset.synth.amp_weekly},
                                 {"trend_slope", cfg.dataset.synth.trend_slope},
                                 {"noise_std", cfg.dataset.synth.noise_std},
                                 {"daytime_boost", cfg.dataset.synth.daytime_boost},
                                 {"missing_frac", cfg.dataset.synth.missing_frac}};
    } else {
        j["dataset"] = {{"csv_path", cfg.dataset.csv_path}, {"column", cfg.dataset.column}};
    }
    j["split"] = {{"train_frac", cfg.split.train_frac},
                  {"val_frac", cfg.split.val_frac},
                  {"test_frac", cfg.split.test_frac}};
    j["model"] = json::parse(model_config_to_json(cfg.model));
    j["seeds"] = cfg.seeds;
    j["out_dir"] = cfg.out_dir;
    j["plot"] = cfg.plot;
    j["horizons"] = cfg.horizons;
    j["seq_lens"] = cfg.seq_lens;
    j["ablation_variants"] = cfg.ablation_variants;
    return j.dump(2);
}

}  // namespace mrcdm
