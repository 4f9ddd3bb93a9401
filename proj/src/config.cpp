// SPDX-License-Identifier: Apache-2.0
#include "gpgait/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace gpgait {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw ConfigError("invalid value '" + value + "' for config key '" + key + "'");
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    bad_value(key, v);
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
    Int out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, v);
}

std::string fmt(double d) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
}

struct Field {
    std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define GPGAIT_DOUBLE(path)                                                                    \
    Field {                                                                                    \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.path = to_double(k, v); }, \
            [](const RunConfig& c) { return fmt(c.path); }                                     \
    }
#define GPGAIT_INT(type, path)                                                                     \
    Field {                                                                                        \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.path = to_int<type>(k, v); }, \
            [](const RunConfig& c) { return std::to_string(c.path); }                              \
    }
#define GPGAIT_BOOL(path)                                                                     \
    Field {                                                                                   \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.path = to_bool(k, v); }, \
            [](const RunConfig& c) { return std::string(c.path ? "true" : "false"); }         \
    }

// Ordered by section; the order is the canonical text order.
const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = {
        {"run.preset", {[](RunConfig& c, const std::string&, const std::string& v) { c.preset = v; },
                        [](const RunConfig& c) { return c.preset; }}},
        {"run.seed", GPGAIT_INT(std::uint64_t, seed)},
        {"run.threads", GPGAIT_INT(int, threads)},
        {"hot.enabled", GPGAIT_BOOL(use_hot)},
        {"hot.normalization", {[](RunConfig& c, const std::string&, const std::string& v) { c.normalization = v; },
                               [](const RunConfig& c) { return c.normalization; }}},
        {"hot.h_unif", GPGAIT_DOUBLE(hot.h_unif)},
        {"hot.phi", GPGAIT_DOUBLE(hot.phi)},
        {"hot.epsilon_extent", GPGAIT_DOUBLE(hot.epsilon_extent)},
        {"net.descriptors",
         {[](RunConfig& c, const std::string&, const std::string& v) {
              c.net.descriptors.clear();
              for (const auto& s : split_list(v)) c.net.descriptors.push_back(parse_descriptor_kind(s));
          },
          [](const RunConfig& c) {
              std::vector<std::string> names;
              for (auto d : c.net.descriptors) names.emplace_back(to_string(d));
              return join(names);
          }}},
        {"net.single_branch", GPGAIT_BOOL(net.single_branch)},
        {"net.parts5_channels",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.net.parts5_channels.clear();
              for (const auto& s : split_list(v)) c.net.parts5_channels.push_back(to_int<int>(k, s));
          },
          [](const RunConfig& c) { return join_ints(c.net.parts5_channels); }}},
        {"net.larger_schemes",
         {[](RunConfig& c, const std::string&, const std::string& v) { c.net.larger_schemes = split_list(v); },
          [](const RunConfig& c) { return join(c.net.larger_schemes); }}},
        {"net.larger_channels", GPGAIT_INT(int, net.larger_channels)},
        {"net.embed_dim", GPGAIT_INT(int, net.embed_dim)},
        {"net.num_classes", GPGAIT_INT(int, net.num_classes)},
        {"net.temporal_kernel", GPGAIT_INT(int, net.temporal_kernel)},
        {"net.attention", GPGAIT_BOOL(net.attention)},
        {"net.partition", GPGAIT_BOOL(net.partition)},
        {"net.bn_momentum", GPGAIT_DOUBLE(net.bn_momentum)},
        {"net.bn_eps", GPGAIT_DOUBLE(net.bn_eps)},
        {"train.subjects_per_batch", GPGAIT_INT(int, train.subjects_per_batch)},
        {"train.samples_per_subject", GPGAIT_INT(int, train.samples_per_subject)},
        {"train.seq_len", GPGAIT_INT(int, train.seq_len)},
        {"train.margin", GPGAIT_DOUBLE(train.margin)},
        {"train.gamma", GPGAIT_DOUBLE(train.gamma)},
        {"train.iterations", GPGAIT_INT(std::int64_t, train.iterations)},
        {"train.lr_init", GPGAIT_DOUBLE(train.lr_init)},
        {"train.lr_max", GPGAIT_DOUBLE(train.lr_max)},
        {"train.lr_final", GPGAIT_DOUBLE(train.lr_final)},
        {"train.phase1", GPGAIT_DOUBLE(train.phase1)},
        {"train.phase2", GPGAIT_DOUBLE(train.phase2)},
        {"train.flip_prob", GPGAIT_DOUBLE(train.flip_prob)},
        {"train.noise_prob", GPGAIT_DOUBLE(train.noise_prob)},
        {"train.noise_sigma", GPGAIT_DOUBLE(train.noise_sigma)},
        {"train.beta1", GPGAIT_DOUBLE(train.beta1)},
        {"train.beta2", GPGAIT_DOUBLE(train.beta2)},
        {"train.adam_eps", GPGAIT_DOUBLE(train.adam_eps)},
        {"train.log_every", GPGAIT_INT(std::int64_t, train.log_every)},
        {"train.checkpoint_every", GPGAIT_INT(std::int64_t, train.checkpoint_every)},
        {"eval.protocol", {[](RunConfig& c, const std::string& k, const std::string& v) {
                               try {
                                   c.protocol = parse_protocol(v);
                               } catch (const Error&) {
                                   bad_value(k, v);
                               }
                           },
                           [](const RunConfig& c) { return std::string(to_string(c.protocol)); }}},
        {"eval.metric", {[](RunConfig& c, const std::string&, const std::string& v) { c.metric = parse_distance_metric(v); },
                         [](const RunConfig& c) { return std::string(to_string(c.metric)); }}},
        {"eval.heatmap_channels", GPGAIT_INT(int, heatmap_channels)},
        {"data.min_frames", GPGAIT_INT(std::size_t, min_frames)},
    };
    return table;
}

#undef GPGAIT_DOUBLE
#undef GPGAIT_INT
#undef GPGAIT_BOOL

}  // namespace

void RunConfig::validate() const {
    hot.validate();
    net.validate();
    train.validate();
    if (threads < 1) throw ConfigError("run.threads must be >= 1");
    if (heatmap_channels < 1) throw ConfigError("eval.heatmap_channels must be >= 1");
    if (normalization == "spine_unit" || normalization == "dataset_independent") {
        throw NotImplementedError("normalization '" + normalization + "' is not implemented");
    }
    if (normalization != "hot") throw ConfigError("unknown normalization '" + normalization + "'");
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"casiab", "oumvlp", "gait3d", "grew", "toy"};
    return names;
}

RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.preset = name;
    if (name == "casiab") {
        c.protocol = Protocol::CasiaB;
    } else if (name == "oumvlp" || name == "grew") {
        c.net.parts5_channels = {64, 128, 128, 128};
        c.net.larger_channels = 128;
        c.train.subjects_per_batch = 32;
        c.train.samples_per_subject = name == "oumvlp" ? 16 : 8;
        c.train.seq_len = name == "oumvlp" ? 30 : 60;
        c.train.iterations = 150000;
        c.protocol = name == "oumvlp" ? Protocol::Oumvlp : Protocol::Grew;
    } else if (name == "gait3d") {
        c.train.subjects_per_batch = 32;
        c.train.samples_per_subject = 4;
        c.train.iterations = 60000;
        c.protocol = Protocol::Gait3d;
    } else if (name == "toy") {
        c.net.parts5_channels = {16, 16, 32};
        c.net.larger_channels = 32;
        c.net.embed_dim = 32;
        c.train.subjects_per_batch = 8;
        c.train.samples_per_subject = 4;
        c.train.seq_len = 30;
        c.train.iterations = 60;
        c.train.log_every = 10;
        c.train.checkpoint_every = 20;
        c.protocol = Protocol::Simple;
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected casiab, oumvlp, gait3d, grew or toy)");
    }
    return c;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
    if (key.rfind("scheme.", 0) == 0) {
        const std::string name = key.substr(7);
        if (name.empty()) throw ConfigError("config key '" + key + "' needs a scheme name");
        PartitionScheme s = parse_scheme(name, value);
        auto& custom = config.net.custom_schemes;
        custom.erase(std::remove_if(custom.begin(), custom.end(), [&](const auto& c) { return c.name == name; }),
                     custom.end());
        custom.push_back(std::move(s));
        return;
    }
    for (const auto& [name, field] : fields()) {
        if (name == key) {
            field.set(config, key, value);
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_text(RunConfig& config, const std::string& text, const std::string& where) {
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ":" + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        set_config_value(config, section.empty() ? key : section + "." + key, value);
    }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config_text(config, buf.str(), path.string());
}

std::string config_to_text(const RunConfig& config) {
    std::string out;
    std::string section;
    for (const auto& [name, field] : fields()) {
        const auto dot = name.find('.');
        const std::string sec = name.substr(0, dot);
        if (sec != section) {
            out += (out.empty() ? "[" : "\n[") + sec + "]\n";
            section = sec;
        }
        out += name.substr(dot + 1) + " = " + field.get(config) + "\n";
    }
    if (!config.net.custom_schemes.empty()) {
        out += "\n[scheme]\n";
        for (const auto& s : config.net.custom_schemes) out += s.name + " = " + format_scheme(s) + "\n";
    }
    return out;
}

RunConfig config_from_text(const std::string& text) {
    RunConfig c;
    apply_config_text(c, text, "embedded config");
    return c;
}

}  // namespace gpgait
