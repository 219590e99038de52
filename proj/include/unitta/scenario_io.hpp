#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "unitta/stream.hpp"

namespace unitta::io {

// Flat key = value document with '#' comments. Axis blocks use dotted keys
// (domain.n, class.mode, ...). See configs/README.md for the full schema.
class KeyValueFile {
public:
    static KeyValueFile parse_file(const std::string& path);
    static KeyValueFile parse_text(const std::string& text, const std::string& origin);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }
    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::string> kv_;
    std::string origin_;
};

// Scenario block (length, seed, quota, domain.*, class.*). alpha1 may be
// omitted for iid (defaults to 1/n) and continual (defaults to 1) axes.
stream::ScenarioConfig scenario_from_kv(const KeyValueFile& kv);

std::string scenario_to_text(const stream::ScenarioConfig& cfg);

// Stream CSV: header "step,domain_id,class_id,sample_id", LF endings.
std::string stream_to_csv(const stream::Stream& s);
stream::Stream stream_from_csv_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace unitta::io
