#include <fstream>
#include <json.hpp>

#include "mrcdm/errors.hpp"
#include "mrcdm/pipeline.hpp"

namespace mrcdm {

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;

json config_to_json_obj(const ModelConfig& cfg) {
    return json{{"variant", variant_name(cfg.variant)},
                {"seq_len", cfg.seq_len},
                {"horizon", cfg.horizon},
                {"diffusion_steps", cfg.diffusion_steps},
                {"beta_start", cfg.beta_start},
                {"beta_end", cfg.beta_end},
                {"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"learning_rate", cfg.learning_rate},
                {"clip_norm", cfg.clip_norm},
                {"train_stride", cfg.train_stride},
                {"sample_draws", cfg.sample_draws},
                {"seed", cfg.seed}};
}

ModelConfig config_from_json_obj(const json& j) {
    ModelConfig cfg;
    cfg.variant = variant_from_name(j.at("variant").get<std::string>());
    cfg.seq_len = j.at("seq_len").get<int>();
    cfg.horizon = j.at("horizon").get<int>();
    cfg.diffusion_steps = j.at("diffusion_steps").get<int>();
    cfg.beta_start = j.at("beta_start").get<double>();
    cfg.beta_end = j.at("beta_end").get<double>();
    cfg.epochs = j.at("epochs").get<int>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.clip_norm = j.at("clip_norm").get<double>();
    cfg.train_stride = j.at("train_stride").get<int>();
    cfg.sample_draws = j.at("sample_draws").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

json store_to_json(const nn::ParamStore<Real>& store) {
    json tensors = json::array();
    for (const auto& e : store.entries) {
        json t;
        t["name"] = e.name;
        t["rows"] = e.rows;
        t["cols"] = e.cols;
        json data = json::array();
        const std::size_t count = static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.cols);
        for (std::size_t i = 0; i < count; ++i)
            data.push_back(static_cast<double>(store.theta[static_cast<std::size_t>(e.offset) + i]));
        t["data"] = std::move(data);
        tensors.push_back(std::move(t));
    }
    return tensors;
}

void store_from_json(const json& tensors, nn::ParamStore<Real>& store) {
    if (tensors.size() != store.entries.size())
        throw DataError("checkpoint: expected " + std::to_string(store.entries.size()) +
                        " tensors, file has " + std::to_string(tensors.size()));
    for (std::size_t i = 0; i < store.entries.size(); ++i) {
        const auto& e = store.entries[i];
        const json& t = tensors[i];
        if (t.at("name").get<std::string>() != e.name || t.at("rows").get<int>() != e.rows ||
            t.at("cols").get<int>() != e.cols)
            throw DataError("checkpoint: tensor '" + e.name + "' has mismatching name or shape");
        const auto& data = t.at("data");
        const std::size_t count = static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.cols);
        if (data.size() != count)
            throw DataError("checkpoint: tensor '" + e.name + "' has wrong element count");
        for (std::size_t k = 0; k < count; ++k)
            store.theta[static_cast<std::size_t>(e.offset) + k] =
                static_cast<Real>(data[k].get<double>());
    }
}

}  // namespace

std::string model_config_to_json(const ModelConfig& cfg) { return config_to_json_obj(cfg).dump(); }

ModelConfig model_config_from_json(const std::string& text) {
    return config_from_json_obj(json::parse(text));
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string config_hash(const ModelConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(model_config_to_json(cfg))));
    return buf;
}

void save_checkpoint(const std::string& path, const Model& model) {
    json j;
    j["format_version"] = kCheckpointVersion;
    j["config"] = config_to_json_obj(model.cfg);
    j["config_hash"] = config_hash(model.cfg);
    j["schedule"] = {{"steps", model.schedule.steps},
                     {"beta_start", model.cfg.beta_start},
                     {"beta_end", model.cfg.beta_end},
                     {"alpha_bar_final", model.schedule.alpha_bars.back()}};
    j["diffusion_params"] = store_to_json(model.diff_params);
    j["reconstructor_params"] = store_to_json(model.recon_params);

    std::ofstream out(path);
    if (!out) throw IoError("save_checkpoint: cannot open " + path + " for writing");
    out << j.dump();
    if (!out) throw IoError("save_checkpoint: write failed for " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_checkpoint: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("load_checkpoint: malformed JSON in " + path + ": " + e.what());
    }
    if (j.at("format_version").get<int>() != kCheckpointVersion)
        throw DataError("load_checkpoint: unsupported format version");

    Model model = build_model(config_from_json_obj(j.at("config")));
    store_from_json(j.at("diffusion_params"), model.diff_params);
    store_from_json(j.at("reconstructor_params"), model.recon_params);
    return model;
}

}  // namespace mrcdm
