#include "recdyn/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace recdyn {

namespace {

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = text.find_last_not_of(" \t\r");
    return text.substr(first, last - first + 1);
}

long parse_long(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(value, &used);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects an integer, got '" + value + "'");
    }
    if (used != value.size())
        throw ConfigError("key '" + key + "' expects an integer, got '" + value + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(value, &used);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + value + "'");
    }
    if (used != value.size())
        throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + value + "'");
    return v;
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
    }
    if (used != value.size())
        throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("key '" + key + "' expects true or false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const auto& item : split_list(value)) out.push_back(static_cast<int>(parse_long(key, item)));
    if (out.empty()) throw ConfigError("key '" + key + "' expects a non-empty list");
    return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& item : split_list(value)) out.push_back(parse_double(key, item));
    if (out.empty()) throw ConfigError("key '" + key + "' expects a non-empty list");
    return out;
}

GInitPolicy parse_g_init(const std::string& value) {
    if (value == "random") return GInitPolicy::RandomNormal;
    if (value == "zero") return GInitPolicy::Zero;
    if (value == "trainable") return GInitPolicy::Trainable;
    throw ConfigError("g_init_policy must be random, zero, or trainable; got '" + value + "'");
}

std::string g_init_name(GInitPolicy policy) {
    switch (policy) {
        case GInitPolicy::RandomNormal: return "random";
        case GInitPolicy::Zero: return "zero";
        case GInitPolicy::Trainable: return "trainable";
    }
    return "random";
}

void apply_system_key(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "preset") {
        config.system = SystemSpec::preset(value); // throws ConfigError on bad name
    } else if (key == "sample_dt") {
        config.system.sample_dt = parse_double(key, value);
    } else if (key == "substeps") {
        config.system.substeps = static_cast<int>(parse_long(key, value));
    } else if (key == "params") {
        config.system.params = parse_double_list(key, value);
    } else if (key == "observed") {
        config.system.observed_indices = parse_int_list(key, value);
    } else if (key == "seed") {
        config.seed = parse_u64(key, value);
    } else if (key == "n_keep") {
        config.n_keep = parse_long(key, value);
    } else if (key == "n_transient") {
        config.n_transient = parse_long(key, value);
    } else {
        throw ConfigError("unknown key '" + key + "' in [system]");
    }
}

void apply_train_key(RunConfig& config, const std::string& key, const std::string& value) {
    TrainConfig& t = config.train;
    if (key == "learning_rate") t.learning_rate = parse_double(key, value);
    else if (key == "rms_decay") t.rms_decay = parse_double(key, value);
    else if (key == "rms_epsilon") t.rms_epsilon = parse_double(key, value);
    else if (key == "max_epochs") t.max_epochs = parse_long(key, value);
    else if (key == "patience") t.patience = parse_long(key, value);
    else if (key == "g_init_policy") t.g_init_policy = parse_g_init(value);
    else throw ConfigError("unknown key '" + key + "' in [train]");
}

std::vector<Arch> parse_arch_list(const std::string& key, const std::string& value) {
    std::vector<Arch> out;
    for (const auto& item : split_list(value)) out.push_back(arch_from_name(item));
    if (out.empty()) throw ConfigError("key '" + key + "' expects a non-empty list");
    return out;
}

void apply_experiment_key(RunConfig& config, const std::string& key, const std::string& value) {
    ExperimentConfig& e = config.experiment;
    if (key == "train_sizes") e.train_sizes = parse_int_list(key, value);
    else if (key == "delays") e.delays = parse_int_list(key, value);
    else if (key == "hidden_sizes") e.hidden_sizes = parse_int_list(key, value);
    else if (key == "select_hidden") e.select_hidden = parse_bool(key, value);
    else if (key == "replicates") e.replicates = static_cast<int>(parse_long(key, value));
    else if (key == "horizons") e.horizons = parse_int_list(key, value);
    else if (key == "base_seed") e.base_seed = parse_u64(key, value);
    else if (key == "architectures") e.architectures = parse_arch_list(key, value);
    else throw ConfigError("unknown key '" + key + "' in [experiment]");
}

void apply_oracle_key(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "delays") {
        config.oracle_delays = parse_int_list(key, value);
    } else if (key == "estimator") {
        if (value == "local-linear") config.estimator = EstimatorKind::LocalLinear;
        else if (value == "knn-invdist") config.estimator = EstimatorKind::KnnInvDist;
        else throw ConfigError("estimator must be local-linear or knn-invdist; got '" + value + "'");
    } else if (key == "with_sigma") {
        config.with_sigma = parse_bool(key, value);
    } else {
        throw ConfigError("unknown key '" + key + "' in [oracle]");
    }
}

void apply_output_key(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "directory") config.output_dir = value;
    else if (key == "plot") config.plot = parse_bool(key, value);
    else if (key == "parallel") config.parallel = parse_bool(key, value);
    else throw ConfigError("unknown key '" + key + "' in [output]");
}

} // namespace

void apply_config_value(RunConfig& config, const std::string& section, const std::string& key,
                        const std::string& value) {
    if (section == "system") apply_system_key(config, key, value);
    else if (section == "train") apply_train_key(config, key, value);
    else if (section == "experiment") apply_experiment_key(config, key, value);
    else if (section == "oracle") apply_oracle_key(config, key, value);
    else if (section == "output") apply_output_key(config, key, value);
    else throw ConfigError("unknown config section [" + section + "]");
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    struct Entry {
        std::string section, key, value;
        int line;
    };
    std::vector<Entry> entries;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
            if (section != "system" && section != "train" && section != "experiment" &&
                section != "oracle" && section != "output")
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": unknown config section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": key outside any section");
        entries.push_back({section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no});
    }

    RunConfig config;
    // The preset rewrites the whole SystemSpec, so it must apply before any
    // per-field override regardless of where it sits in the file.
    for (const Entry& e : entries)
        if (e.section == "system" && e.key == "preset") apply_config_value(config, e.section, e.key, e.value);
    for (const Entry& e : entries) {
        if (e.section == "system" && e.key == "preset") continue;
        try {
            apply_config_value(config, e.section, e.key, e.value);
        } catch (const ConfigError& err) {
            throw ConfigError(origin + ":" + std::to_string(e.line) + ": " + err.what());
        }
    }
    return config;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path.string());
}

ExperimentConfig RunConfig::resolved_experiment() const {
    ExperimentConfig e = experiment;
    e.system = system;
    e.train = train;
    return e;
}

void RunConfig::validate() const {
    system.validate();
    train.validate();
    resolved_experiment().validate();
    if (n_keep < 1) throw ConfigError("n_keep must be >= 1");
    if (n_transient < 0) throw ConfigError("n_transient must be >= 0");
    for (int d : oracle_delays)
        if (d < 1) throw ConfigError("oracle delays must be >= 1");
    if (oracle_delays.empty()) throw ConfigError("oracle delays must be non-empty");
}

nlohmann::json config_to_json(const RunConfig& config) {
    nlohmann::json sys{{"kind", config.system.kind_name()},
                       {"params", config.system.params},
                       {"sample_dt", config.system.sample_dt},
                       {"substeps", config.system.substeps},
                       {"observed", config.system.observed_indices},
                       {"seed", config.seed},
                       {"n_keep", config.n_keep},
                       {"n_transient", config.n_transient}};
    nlohmann::json train{{"learning_rate", config.train.learning_rate},
                         {"rms_decay", config.train.rms_decay},
                         {"rms_epsilon", config.train.rms_epsilon},
                         {"max_epochs", config.train.max_epochs},
                         {"patience", config.train.patience},
                         {"g_init_policy", g_init_name(config.train.g_init_policy)}};
    std::vector<std::string> archs;
    for (Arch a : config.experiment.architectures) archs.emplace_back(arch_name(a));
    nlohmann::json experiment{{"train_sizes", config.experiment.train_sizes},
                              {"delays", config.experiment.delays},
                              {"hidden_sizes", config.experiment.hidden_sizes},
                              {"select_hidden", config.experiment.select_hidden},
                              {"replicates", config.experiment.replicates},
                              {"horizons", config.experiment.horizons},
                              {"base_seed", config.experiment.base_seed},
                              {"architectures", archs}};
    nlohmann::json oracle{
        {"delays", config.oracle_delays},
        {"estimator",
         config.estimator == EstimatorKind::LocalLinear ? "local-linear" : "knn-invdist"},
        {"with_sigma", config.with_sigma}};
    nlohmann::json output{{"directory", config.output_dir.string()},
                          {"plot", config.plot},
                          {"parallel", config.parallel}};
    return {{"system", sys},
            {"train", train},
            {"experiment", experiment},
            {"oracle", oracle},
            {"output", output}};
}

} // namespace recdyn
