#include "unitta/scenario_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "unitta/errors.hpp"

namespace unitta::io {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
    return parse_text(read_text_file(path), path);
}

KeyValueFile KeyValueFile::parse_text(const std::string& text, const std::string& origin) {
    KeyValueFile f;
    f.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw SchemaError(origin + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw SchemaError(origin + ":" + std::to_string(lineno) + ": empty key or value");
        f.kv_[key] = value;
    }
    return f;
}

bool KeyValueFile::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string KeyValueFile::get_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw SchemaError(origin_ + ": missing required key '" + key + "'");
    return it->second;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

std::uint64_t KeyValueFile::get_u64(const std::string& key) const {
    const std::string v = get_string(key);
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw SchemaError(origin_ + ": key '" + key + "' is not an unsigned integer: '" + v + "'");
    return out;
}

std::uint64_t KeyValueFile::get_u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

double KeyValueFile::get_double(const std::string& key) const {
    const std::string v = get_string(key);
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw SchemaError(origin_ + ": key '" + key + "' is not a number: '" + v + "'");
    }
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw SchemaError(origin_ + ": key '" + key + "' is not a boolean: '" + v + "'");
}

namespace {

markov::AxisConfig axis_from_kv(const KeyValueFile& kv, const std::string& prefix) {
    markov::AxisConfig a;
    a.n = static_cast<std::size_t>(kv.get_u64(prefix + ".n"));
    if (a.n == 0) throw SchemaError(kv.origin() + ": " + prefix + ".n must be >= 1");
    a.correlation_mode = markov::correlation_mode_from_string(kv.get_string(prefix + ".mode"));
    switch (a.correlation_mode) {
        case markov::CorrelationMode::Iid:
            a.alpha1 = kv.get_double(prefix + ".alpha1", 1.0 / static_cast<double>(a.n));
            break;
        case markov::CorrelationMode::Continual:
            a.alpha1 = kv.get_double(prefix + ".alpha1", 1.0);
            break;
        case markov::CorrelationMode::NonIid:
            a.alpha1 = kv.get_double(prefix + ".alpha1");
            break;
    }
    a.beta = kv.get_double(prefix + ".beta", 1.0);
    a.balance_mode = a.beta == 1.0 ? markov::BalanceMode::Balanced
                                   : markov::BalanceMode::Imbalanced;
    return a;
}

}  // namespace

stream::ScenarioConfig scenario_from_kv(const KeyValueFile& kv) {
    stream::ScenarioConfig cfg;
    cfg.length = static_cast<std::size_t>(kv.get_u64("length"));
    cfg.seed = kv.get_u64("seed", 0);
    cfg.force_exact = kv.get_bool("quota", false);
    cfg.domain_axis = axis_from_kv(kv, "domain");
    cfg.class_axis = axis_from_kv(kv, "class");
    return cfg;
}

std::string scenario_to_text(const stream::ScenarioConfig& cfg) {
    char buf[128];
    std::string out;
    auto axis = [&](const char* prefix, const markov::AxisConfig& a) {
        std::snprintf(buf, sizeof(buf), "%s.n = %zu\n", prefix, a.n);
        out += buf;
        out += std::string(prefix) + ".mode = " + markov::to_string(a.correlation_mode) + "\n";
        std::snprintf(buf, sizeof(buf), "%s.alpha1 = %.17g\n", prefix, a.alpha1);
        out += buf;
        std::snprintf(buf, sizeof(buf), "%s.beta = %.17g\n", prefix, a.beta);
        out += buf;
    };
    std::snprintf(buf, sizeof(buf), "length = %zu\nseed = %llu\nquota = %s\n", cfg.length,
                  static_cast<unsigned long long>(cfg.seed), cfg.force_exact ? "true" : "false");
    out += buf;
    axis("domain", cfg.domain_axis);
    axis("class", cfg.class_axis);
    return out;
}

std::string stream_to_csv(const stream::Stream& s) {
    std::string out = "step,domain_id,class_id,sample_id\n";
    char buf[96];
    for (const auto& r : s) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%zu\n", r.step, r.domain_id, r.class_id,
                      r.sample_id);
        out += buf;
    }
    return out;
}

stream::Stream stream_from_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open stream file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path + ": empty file");
    if (trim(line) != "step,domain_id,class_id,sample_id")
        throw SchemaError(path + ": bad header '" + line + "'");
    stream::Stream s;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        stream::SampleRecord r;
        unsigned long long v[4];
        char extra;
        const int got = std::sscanf(line.c_str(), "%llu,%llu,%llu,%llu%c", &v[0], &v[1], &v[2],
                                    &v[3], &extra);
        if (got != 4)
            throw SchemaError(path + ":" + std::to_string(lineno) + ": bad row '" + line + "'");
        r.step = static_cast<std::size_t>(v[0]);
        r.domain_id = static_cast<std::size_t>(v[1]);
        r.class_id = static_cast<std::size_t>(v[2]);
        r.sample_id = static_cast<std::size_t>(v[3]);
        if (r.step != s.size())
            throw SchemaError(path + ":" + std::to_string(lineno) + ": steps must be 0,1,2,...");
        s.push_back(r);
    }
    if (s.empty()) throw SchemaError(path + ": no records");
    return s;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SchemaError("cannot write file '" + path + "'");
    out << content;
    if (!out) throw SchemaError("short write to '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace unitta::io
