#pragma once

// JSON checkpoints for trained models and cascade manifests.

#include "conpred/cascade.hpp"
#include "conpred/errors.hpp"
#include "conpred/models.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace conpred {

using json = nlohmann::json;

NLOHMANN_JSON_SERIALIZE_ENUM(input_encoding, { { input_encoding::raw, "raw" }, { input_encoding::one_hot, "one_hot" } })
NLOHMANN_JSON_SERIALIZE_ENUM(output_head, { { output_head::identity, "identity" },
                                            { output_head::softmax_standard, "softmax_standard" },
                                            { output_head::softmax_negated, "softmax_negated" } })
NLOHMANN_JSON_SERIALIZE_ENUM(activation, { { activation::relu, "relu" }, { activation::tanh, "tanh" } })
NLOHMANN_JSON_SERIALIZE_ENUM(optimizer_kind, { { optimizer_kind::adam, "adam" }, { optimizer_kind::sgd, "sgd" } })
NLOHMANN_JSON_SERIALIZE_ENUM(model_family, { { model_family::ddt, "ddt" }, { model_family::mlp, "mlp" } })

inline void to_json(json &j, const ddt_config &c) { j = json{ { "depth", c.depth }, { "lambda_base", c.lambda_base }, { "head", c.head } }; }

inline void from_json(const json &j, ddt_config &c) {
    c.depth = j.value("depth", c.depth);
    c.lambda_base = j.value("lambda_base", c.lambda_base);
    c.head = j.value("head", c.head);
}

inline void to_json(json &j, const mlp_config &c) { j = json{ { "hidden", c.hidden }, { "activation", c.act } }; }

inline void from_json(const json &j, mlp_config &c) {
    c.hidden = j.value("hidden", c.hidden);
    c.act = j.value("activation", c.act);
}

inline void to_json(json &j, const train_config &c) {
    j = json{ { "epochs", c.epochs }, { "batch_size", c.batch_size }, { "learning_rate", c.learning_rate }, { "optimizer", c.optimizer } };
}

inline void from_json(const json &j, train_config &c) {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.optimizer = j.value("optimizer", c.optimizer);
}

inline void to_json(json &j, const model_spec &s) {
    j = json{ { "family", s.family }, { "ddt", s.tree }, { "mlp", s.net }, { "encoding", s.encoding }, { "training", s.training } };
}

inline void from_json(const json &j, model_spec &s) {
    s.family = j.value("family", s.family);
    s.encoding = j.value("encoding", s.encoding);
    if (j.contains("ddt")) {
        from_json(j.at("ddt"), s.tree);
    }
    if (j.contains("mlp")) {
        from_json(j.at("mlp"), s.net);
    }
    if (j.contains("training")) {
        from_json(j.at("training"), s.training);
    }
}

inline void to_json(json &j, const cascade_config &c) {
    j = json{ { "max_impurity", c.max_impurity }, { "levels", c.levels } };
    j["min_level_accuracy"] = c.min_level_accuracy ? json(*c.min_level_accuracy) : json(nullptr);
}

inline void from_json(const json &j, cascade_config &c) {
    c.max_impurity = j.value("max_impurity", c.max_impurity);
    c.levels = j.value("levels", c.levels);
    if (j.contains("min_level_accuracy") && !j["min_level_accuracy"].is_null()) {
        c.min_level_accuracy = j["min_level_accuracy"].get<double>();
    } else {
        c.min_level_accuracy.reset();
    }
}

/// FNV-1a over the compact dump of a JSON value, as 16 hex digits.
inline std::string config_hash(const json &j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

inline json checkpoint_json(const classifier &c, std::uint64_t seed, const std::string &hash) {
    json j;
    j["format"] = "conpred-model/1";
    j["encoding"] = c.encoding();
    j["seed"] = seed;
    j["config_hash"] = hash;
    std::visit(
        [&](const auto &m) {
            using M = std::decay_t<decltype(m)>;
            j["inputs"] = m.inputs();
            if constexpr (std::is_same_v<M, ddt>) {
                j["family"] = model_family::ddt;
                j["config"] = m.config();
            } else {
                j["family"] = model_family::mlp;
                j["config"] = m.config();
            }
            const auto p = m.parameters();
            j["parameters"] = std::vector<double>(p.begin(), p.end());
        },
        c.model());
    return j;
}

inline classifier classifier_from_json(const json &j) {
    try {
        if (j.at("format") != "conpred-model/1") {
            throw data_error("unknown checkpoint format");
        }
        const auto inputs = j.at("inputs").get<std::size_t>();
        const auto params = j.at("parameters").get<std::vector<double>>();
        const auto enc = j.at("encoding").get<input_encoding>();
        const auto load = [&](auto model) {
            auto dst = model.parameters();
            if (dst.size() != params.size()) {
                throw data_error("checkpoint parameter count does not match its architecture");
            }
            std::copy(params.begin(), params.end(), dst.begin());
            return classifier(std::move(model), enc);
        };
        if (j.at("family").get<model_family>() == model_family::ddt) {
            return load(ddt(inputs, j.at("config").get<ddt_config>(), 0));
        }
        return load(mlp(inputs, j.at("config").get<mlp_config>(), 0));
    } catch (const json::exception &e) {
        throw data_error(std::string("malformed checkpoint: ") + e.what());
    }
}

inline json read_json_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("cannot open '" + path.string() + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw data_error("invalid JSON in '" + path.string() + "': " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path &path, const json &j) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("cannot open '" + path.string() + "' for writing");
    }
    out << j.dump(2) << '\n';
}

/// Writes manifest.json plus level_<n>.json under `dir`.
inline void save_cascade(const std::filesystem::path &dir, const cascade<classifier> &c, const std::vector<std::string> &feature_names,
                         std::uint64_t seed, const std::string &hash) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["format"] = "conpred-cascade/1";
    manifest["config"] = c.config;
    manifest["seed"] = seed;
    manifest["config_hash"] = hash;
    manifest["features"] = feature_names;
    manifest["levels"] = json::array();
    for (std::size_t i = 0; i < c.models.size(); ++i) {
        const std::string file = "level_" + std::to_string(i + 1) + ".json";
        write_json_file(dir / file, checkpoint_json(c.models[i], level_seed(seed, static_cast<int>(i) + 1), hash));
        json level{ { "checkpoint", file } };
        if (i < c.diagnostics.size()) {
            level["train_unpruned_fraction"] = c.diagnostics[i].unpruned_fraction;
            level["train_accuracy"] = c.diagnostics[i].accuracy ? json(*c.diagnostics[i].accuracy) : json(nullptr);
        }
        manifest["levels"].push_back(level);
    }
    write_json_file(dir / "manifest.json", manifest);
}

struct loaded_cascade {
    cascade<classifier> model;
    std::vector<std::string> feature_names;
};

inline loaded_cascade load_cascade(const std::filesystem::path &dir) {
    const json manifest = read_json_file(dir / "manifest.json");
    try {
        if (manifest.at("format") != "conpred-cascade/1") {
            throw data_error("unknown cascade manifest format");
        }
        loaded_cascade out;
        out.model.config = manifest.at("config").get<cascade_config>();
        out.feature_names = manifest.at("features").get<std::vector<std::string>>();
        for (const auto &level : manifest.at("levels")) {
            out.model.models.push_back(classifier_from_json(read_json_file(dir / level.at("checkpoint").get<std::string>())));
        }
        return out;
    } catch (const json::exception &e) {
        throw data_error(std::string("malformed cascade manifest: ") + e.what());
    }
}

}  // namespace conpred
