// Copyright 2026 The vqcast authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vqcast/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vqcast/common.hpp"

namespace vqcast::config {

namespace {

using nlohmann::json;

void check_keys(const json &obj, const std::set<std::string> &allowed,
                const std::string &where) {
    for (const auto &[key, value] : obj.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
T get_or(const json &obj, const std::string &key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception &e) {
        throw ConfigError("bad value for '" + key + "': " + e.what());
    }
}

} // namespace

RunConfig RunConfig::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");

    json root;
    try {
        root = json::parse(in, nullptr, /*allow_exceptions=*/true,
                           /*ignore_comments=*/true);
    } catch (const json::exception &e) {
        throw ConfigError("config parse error in '" + path.string() +
                          "': " + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be an object");
    check_keys(root,
               {"manifest", "out_dir", "seed", "folds", "variants", "jobs",
                "stride", "raw_units", "model", "corruptions"},
               "config root");

    RunConfig cfg;
    if (!root.contains("manifest")) throw ConfigError("config needs 'manifest'");
    if (!root.contains("out_dir")) throw ConfigError("config needs 'out_dir'");

    const std::filesystem::path base = path.parent_path();
    std::filesystem::path manifest = root.at("manifest").get<std::string>();
    cfg.manifest = manifest.is_absolute() ? manifest : base / manifest;

    std::filesystem::path out = root.at("out_dir").get<std::string>();
    if (!out.is_absolute()) {
        if (const char *env_root = std::getenv("VQCAST_OUT_ROOT")) {
            out = std::filesystem::path(env_root) / out;
        }
    }
    cfg.out_dir = out;

    cfg.seed = get_or<std::uint64_t>(root, "seed", cfg.seed);
    cfg.folds_spec = get_or<std::string>(root, "folds", cfg.folds_spec);
    cfg.jobs = get_or<int>(root, "jobs", cfg.jobs);
    cfg.stride = get_or<int>(root, "stride", cfg.stride);
    cfg.raw_units = get_or<bool>(root, "raw_units", cfg.raw_units);

    if (root.contains("variants")) {
        cfg.variants.clear();
        for (const json &v : root.at("variants")) {
            cfg.variants.push_back(model::variant_from_string(v.get<std::string>()));
        }
    }

    if (root.contains("model")) {
        const json &m = root.at("model");
        check_keys(m,
                   {"window_len", "horizons", "n_qubits", "depth", "entanglement",
                    "hidden_size", "epochs", "batch_size", "learning_rate"},
                   "model");
        cfg.model.window_len = get_or<int>(m, "window_len", cfg.model.window_len);
        cfg.model.n_qubits = get_or<int>(m, "n_qubits", cfg.model.n_qubits);
        cfg.model.depth = get_or<int>(m, "depth", cfg.model.depth);
        cfg.model.entanglement =
            get_or<bool>(m, "entanglement", cfg.model.entanglement);
        cfg.model.hidden_size = get_or<int>(m, "hidden_size", cfg.model.hidden_size);
        cfg.model.epochs = get_or<int>(m, "epochs", cfg.model.epochs);
        cfg.model.batch_size = get_or<int>(m, "batch_size", cfg.model.batch_size);
        cfg.model.learning_rate =
            get_or<double>(m, "learning_rate", cfg.model.learning_rate);
        if (m.contains("horizons")) {
            cfg.model.horizons = m.at("horizons").get<std::vector<int>>();
        }
    }

    if (root.contains("corruptions")) {
        const json &c = root.at("corruptions");
        check_keys(c, {"noise_sigmas", "missing_rates", "seed"}, "corruptions");
        cfg.corruptions.noise_sigmas = get_or<std::vector<double>>(
            c, "noise_sigmas", cfg.corruptions.noise_sigmas);
        cfg.corruptions.missing_rates = get_or<std::vector<double>>(
            c, "missing_rates", cfg.corruptions.missing_rates);
        cfg.corruptions.seed = get_or<std::uint64_t>(c, "seed", cfg.corruptions.seed);
    }

    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    if (variants.empty()) throw ConfigError("at least one variant is required");
    if (stride < 1) throw ConfigError("stride must be positive");
    if (jobs < 0) throw ConfigError("jobs must be non-negative");
    for (double s : corruptions.noise_sigmas) {
        if (s < 0.0) throw ConfigError("noise sigma must be non-negative");
    }
    for (double p : corruptions.missing_rates) {
        if (p < 0.0 || p >= 1.0) throw ConfigError("missing rate must be in [0, 1)");
    }
    for (model::Variant v : variants) {
        model::ModelConfig m = model;
        m.variant = v;
        m.validate();
    }
}

std::uint64_t RunConfig::hash() const {
    // Canonical serialization of everything result-relevant; nlohmann
    // objects keep keys sorted, so dump() is stable.
    json j;
    j["manifest"] = manifest.filename().string();
    j["seed"] = seed;
    j["folds"] = folds_spec;
    j["stride"] = stride;
    j["raw_units"] = raw_units;
    std::vector<std::string> names;
    for (model::Variant v : variants) names.push_back(model::to_string(v));
    j["variants"] = names;
    j["model"] = {{"window_len", model.window_len},
                  {"horizons", model.horizons},
                  {"n_qubits", model.n_qubits},
                  {"depth", model.depth},
                  {"entanglement", model.entanglement},
                  {"hidden_size", model.hidden_size},
                  {"epochs", model.epochs},
                  {"batch_size", model.batch_size},
                  {"learning_rate", model.learning_rate}};
    j["corruptions"] = {{"noise_sigmas", corruptions.noise_sigmas},
                        {"missing_rates", corruptions.missing_rates},
                        {"seed", corruptions.seed}};
    return fnv1a64(j.dump());
}

model::ModelConfig RunConfig::model_for(model::Variant variant,
                                        int fold_index) const {
    model::ModelConfig m = model;
    m.variant = variant;
    m.seed = mix_seed(mix_seed(seed, model::to_string(variant)),
                      static_cast<std::uint64_t>(fold_index));
    return m;
}

std::vector<int> parse_fold_spec(const std::string &spec, int n_folds) {
    std::set<int> picked;
    const std::string trimmed = [&] {
        std::string t = spec;
        t.erase(std::remove_if(t.begin(), t.end(), ::isspace), t.end());
        return t;
    }();
    if (trimmed.empty() || trimmed == "all") {
        for (int i = 1; i <= n_folds; ++i) picked.insert(i);
    } else {
        std::stringstream ss(trimmed);
        std::string part;
        while (std::getline(ss, part, ',')) {
            if (part.empty()) throw ConfigError("empty fold entry in '" + spec + "'");
            const std::size_t dash = part.find('-');
            try {
                if (dash == std::string::npos) {
                    picked.insert(std::stoi(part));
                } else {
                    const int lo = std::stoi(part.substr(0, dash));
                    const int hi = std::stoi(part.substr(dash + 1));
                    if (lo > hi) throw ConfigError("reversed fold range '" + part + "'");
                    for (int i = lo; i <= hi; ++i) picked.insert(i);
                }
            } catch (const std::invalid_argument &) {
                throw ConfigError("malformed fold spec '" + spec + "'");
            } catch (const std::out_of_range &) {
                throw ConfigError("fold index out of range in '" + spec + "'");
            }
        }
    }
    for (int i : picked) {
        if (i < 1 || i > n_folds) {
            throw ConfigError("fold index " + std::to_string(i) +
                              " outside [1, " + std::to_string(n_folds) + "]");
        }
    }
    return {picked.begin(), picked.end()};
}

std::vector<model::Variant> parse_variant_list(const std::string &list) {
    std::vector<model::Variant> out;
    std::stringstream ss(list);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (!part.empty()) out.push_back(model::variant_from_string(part));
    }
    if (out.empty()) throw ConfigError("empty variant list");
    return out;
}

} // namespace vqcast::config
