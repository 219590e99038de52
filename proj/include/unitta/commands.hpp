#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace unitta::cli {

// Exit codes: 0 ok, 1 input/schema error, 2 verification failure,
// 3 partial sweep failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitVerify = 2;
inline constexpr int kExitPartial = 3;

struct GenOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;  // overrides the config seed
    bool force_quota = false;
};

struct VerifyOptions {
    std::string stream_path;
    std::string config_path;
};

struct RunOptions {
    std::string config_path;
    std::string out_dir;
    std::string mode = "unitta";
    std::optional<std::uint64_t> seed;
    bool force_quota = false;
};

struct SweepOptions {
    std::string out_dir;
    int grid = 24;                     // 24 or 36
    std::optional<std::string> config_path;  // optional overrides (length, world.*, ...)
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;           // 0 = hardware concurrency
};

// Writes stream.csv, report.json and manifest.json into out_dir.
int cmd_gen(const GenOptions& opt, std::ostream& log);

// Prints one [PASS]/[FAIL] line per check.
int cmd_verify(const VerifyOptions& opt, std::ostream& log);

// Writes metrics.json, bank_snapshot.json and manifest.json into out_dir.
int cmd_run(const RunOptions& opt, std::ostream& log);

// Writes grid.csv and manifest.json into out_dir; one row per setting,
// one column per mode, plus a MEAN row.
int cmd_sweep(const SweepOptions& opt, std::ostream& log);

}  // namespace unitta::cli
