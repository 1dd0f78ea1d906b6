#include "galmad/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "galmad/error.hpp"
#include "json.hpp"

namespace galmad {

using json = nlohmann::ordered_json;

namespace {

json config_to(const GalMadConfig& c) {
    json j;
    j["n_services"] = c.n_services;
    j["n_features"] = c.n_features;
    j["window_len"] = c.window_len;
    j["d1"] = c.d1;
    j["d2"] = c.d2;
    j["d_z"] = c.d_z;
    j["encoder_hidden"] = c.encoder_hidden;
    j["decoder_hidden"] = c.decoder_hidden;
    j["num_heads"] = c.num_heads;
    j["negative_slope"] = c.negative_slope;
    j["threshold"] = c.threshold;
    j["learning_rate"] = c.learning_rate;
    j["batch_size"] = c.batch_size;
    j["lr_decay_per_epoch"] = c.lr_decay_per_epoch;
    j["epochs"] = c.epochs;
    j["micro_batch"] = c.micro_batch;
    j["seed"] = c.seed;
    return j;
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

GalMadConfig config_from(const json& j) {
    GalMadConfig c;
    read_opt(j, "n_services", c.n_services);
    read_opt(j, "n_features", c.n_features);
    read_opt(j, "window_len", c.window_len);
    read_opt(j, "d1", c.d1);
    read_opt(j, "d2", c.d2);
    read_opt(j, "d_z", c.d_z);
    read_opt(j, "encoder_hidden", c.encoder_hidden);
    read_opt(j, "decoder_hidden", c.decoder_hidden);
    read_opt(j, "num_heads", c.num_heads);
    read_opt(j, "negative_slope", c.negative_slope);
    read_opt(j, "threshold", c.threshold);
    read_opt(j, "learning_rate", c.learning_rate);
    read_opt(j, "batch_size", c.batch_size);
    read_opt(j, "lr_decay_per_epoch", c.lr_decay_per_epoch);
    read_opt(j, "epochs", c.epochs);
    read_opt(j, "micro_batch", c.micro_batch);
    read_opt(j, "seed", c.seed);
    return c;
}

}  // namespace

std::string config_json(const GalMadConfig& c) { return config_to(c).dump(2) + "\n"; }

GalMadConfig parse_config_json(const std::string& text) {
    try {
        GalMadConfig c = config_from(json::parse(text));
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config JSON: ") + e.what());
    }
}

std::string checkpoint_json(GalMad& model, const FeatureSchema& schema, const FeatureOptions& features,
                            const Scaler& scaler) {
    json j;
    j["format"] = "galmad-checkpoint";
    j["version"] = kCheckpointVersion;
    j["variant"] = variant_name(model.variant());
    j["config"] = config_to(model.config());
    j["topology"] = json::parse(model.topology().to_json_text());
    j["schema"] = {{"services", schema.services()}, {"include_response_times", schema.include_response_times()}};
    j["features"] = {{"rate_convert", features.rate_convert},
                     {"ma_short", features.ma_short},
                     {"ma_long", features.ma_long},
                     {"max_fill", features.max_fill},
                     {"step_seconds", features.step_seconds}};
    j["scaler"] = {{"n", scaler.n()},
                   {"k", scaler.k()},
                   {"mean", scaler.mean()},
                   {"std", scaler.stddev()},
                   {"provenance", scaler.provenance()}};
    json params = json::array();
    for (ad::Parameter* p : model.parameters()) {
        params.push_back({{"name", p->name()}, {"shape", p->shape()}, {"data", p->value().buffer()}});
    }
    j["parameters"] = params;
    return j.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("checkpoint: malformed JSON: ") + e.what());
    }
    try {
        if (j.value("format", std::string()) != "galmad-checkpoint") throw ConfigError("checkpoint: unknown format");
        if (!j.contains("version")) throw ConfigError("checkpoint: missing version");
        const int version = j.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw ConfigError("checkpoint: version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
        }
        GalMadConfig config = config_from(j.at("config"));
        Topology topo = Topology::from_json_text(j.at("topology").dump());
        GalMad model(config, parse_variant(j.at("variant").get<std::string>()), topo);
        for (const json& p : j.at("parameters")) {
            ad::Parameter& target = model.parameter(p.at("name").get<std::string>());
            const Shape shape = p.at("shape").get<Shape>();
            if (shape != target.shape()) {
                throw ConfigError("checkpoint: parameter " + target.name() + " has shape " + to_string(shape) +
                                  ", model expects " + to_string(target.shape()));
            }
            std::vector<double> data = p.at("data").get<std::vector<double>>();
            if (data.size() != target.value().size()) {
                throw ConfigError("checkpoint: parameter " + target.name() + " holds " + std::to_string(data.size()) +
                                  " values, shape needs " + std::to_string(target.value().size()));
            }
            target.value() = Tensor(shape, std::move(data));
        }
        if (j.at("parameters").size() != model.parameters().size()) {
            throw ConfigError("checkpoint: parameter count does not match the model");
        }
        const json& sj = j.at("schema");
        FeatureSchema schema(sj.at("services").get<std::vector<std::string>>(),
                             sj.at("include_response_times").get<bool>());
        FeatureOptions features;
        if (j.contains("features")) {
            const json& f = j.at("features");
            read_opt(f, "rate_convert", features.rate_convert);
            read_opt(f, "ma_short", features.ma_short);
            read_opt(f, "ma_long", features.ma_long);
            read_opt(f, "max_fill", features.max_fill);
            read_opt(f, "step_seconds", features.step_seconds);
        }
        const json& sc = j.at("scaler");
        Scaler scaler(sc.at("n").get<std::size_t>(), sc.at("k").get<std::size_t>(),
                      sc.at("mean").get<std::vector<double>>(), sc.at("std").get<std::vector<double>>(),
                      sc.at("provenance").get<std::string>());
        if (schema.n() != config.n_services || schema.k() != config.n_features || scaler.n() != schema.n() ||
            scaler.k() != schema.k()) {
            throw ConfigError("checkpoint: schema, scaler and model dimensions disagree");
        }
        return Checkpoint{std::move(model), std::move(schema), features, std::move(scaler)};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, GalMad& model, const FeatureSchema& schema,
                     const FeatureOptions& features, const Scaler& scaler) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out << checkpoint_json(model, schema, features, scaler);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_checkpoint(ss.str());
}

}  // namespace galmad
