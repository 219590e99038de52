#include "unitta/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <thread>
#include <vector>

#include <json.hpp>

#include "unitta/engine.hpp"
#include "unitta/scenario_io.hpp"

namespace unitta::cli {

namespace fs = std::filesystem;

namespace {

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Writes a file and records (name, size, fnv1a64) for the manifest.
class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void write(const std::string& name, const std::string& content) {
        io::write_text_file((dir_ / name).string(), content);
        nlohmann::json f;
        f["file"] = name;
        f["bytes"] = content.size();
        f["fnv1a64"] = hex64(fnv1a64(content.data(), content.size()));
        files_.push_back(std::move(f));
    }

    void finalize(const std::string& command, const nlohmann::json& inputs) {
        nlohmann::json m;
        m["command"] = command;
        m["inputs"] = inputs;
        m["outputs"] = files_;
        io::write_text_file((dir_ / "manifest.json").string(), m.dump(2) + "\n");
    }

private:
    fs::path dir_;
    nlohmann::json files_ = nlohmann::json::array();
};

stream::ScenarioConfig load_scenario(const std::string& config_path,
                                     const std::optional<std::uint64_t>& seed_override,
                                     bool force_quota) {
    const auto kv = io::KeyValueFile::parse_file(config_path);
    auto cfg = io::scenario_from_kv(kv);
    if (seed_override) cfg.seed = *seed_override;
    if (force_quota) cfg.force_exact = true;
    return cfg;
}

nlohmann::json axis_report_json(const stream::AxisEmpirical& a) {
    nlohmann::json j;
    j["freq"] = a.freq;
    j["self_rate"] = a.self_rate;
    j["imbalance_ratio"] = a.imbalance_ratio;
    return j;
}

struct RunSettings {
    engine::WorldConfig world;
    engine::ModelConfig model;
    engine::EngineConfig engine_cfg;
    std::size_t length = 30000;
    std::uint64_t stream_seed = 1;
};

// world/engine/model blocks shared by run and sweep. Axis sizes follow the
// scenario; everything else has grid defaults.
RunSettings settings_from_kv(const io::KeyValueFile& kv, std::size_t n_domains,
                             std::size_t n_classes) {
    RunSettings s;
    s.world.test_domains = n_domains;
    s.world.classes = n_classes;
    s.world.channels = static_cast<std::size_t>(kv.get_u64("world.channels", 8));
    s.world.height = static_cast<std::size_t>(kv.get_u64("world.height", 4));
    s.world.width = static_cast<std::size_t>(kv.get_u64("world.width", 4));
    s.world.class_separation = kv.get_double("world.class_separation", 4.0);
    s.world.noise = kv.get_double("world.noise", 0.5);
    s.world.ambiguous_fraction = kv.get_double("world.ambiguous_fraction", 0.1);
    s.world.domain_shift = kv.get_double("world.domain_shift", 3.0);
    s.world.scale_jitter = kv.get_double("world.scale_jitter", 0.25);
    s.world.seed = kv.get_u64("world.seed", 9);
    s.model.layers = static_cast<std::size_t>(kv.get_u64("engine.layers", 2));
    s.model.source_samples = static_cast<std::size_t>(kv.get_u64("world.source_samples", 1200));
    s.model.seed = kv.get_u64("engine.model_seed", 7);
    s.engine_cfg.domain_pred_layer =
        static_cast<std::size_t>(kv.get_u64("engine.domain_layer", 0));
    s.engine_cfg.filter_enabled = kv.get_bool("engine.filter", true);
    return s;
}

}  // namespace

int cmd_gen(const GenOptions& opt, std::ostream& log) {
    try {
        const auto cfg = load_scenario(opt.config_path, opt.seed, opt.force_quota);
        const auto s = stream::generate(cfg);
        const auto report = stream::empirical_report(s, cfg.domain_axis.n, cfg.class_axis.n);

        ArtifactWriter out(opt.out_dir);
        out.write("stream.csv", io::stream_to_csv(s));
        nlohmann::json rj;
        rj["length"] = report.length;
        rj["domain"] = axis_report_json(report.domain);
        rj["class"] = axis_report_json(report.cls);
        out.write("report.json", rj.dump(2) + "\n");

        nlohmann::json inputs;
        inputs["config"] = opt.config_path;
        inputs["resolved_seed"] = cfg.seed;
        inputs["quota"] = cfg.force_exact;
        inputs["scenario"] = io::scenario_to_text(cfg);
        out.finalize("gen", inputs);
        log << "wrote stream.csv (" << s.size() << " records) and report.json to " << opt.out_dir
            << "\n";
        return kExitOk;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitInput;
    }
}

int cmd_verify(const VerifyOptions& opt, std::ostream& log) {
    stream::ScenarioConfig cfg;
    stream::Stream s;
    stream::GenerationPlan plan;
    try {
        cfg = load_scenario(opt.config_path, std::nullopt, false);
        s = io::stream_from_csv_file(opt.stream_path);
        plan = stream::make_plan(cfg);
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitInput;
    }

    bool ok = true;
    auto check = [&](bool pass, const std::string& name, const std::string& detail) {
        log << (pass ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
        ok = ok && pass;
    };

    check(s.size() == cfg.length, "length",
          std::to_string(s.size()) + " records vs configured " + std::to_string(cfg.length));

    const std::size_t nd = cfg.domain_axis.n, nc = cfg.class_axis.n;
    bool ids_ok = true;
    std::vector<std::size_t> next_id(nd * nc, 0);
    for (const auto& r : s) {
        if (r.domain_id >= nd || r.class_id >= nc) {
            ids_ok = false;
            break;
        }
        if (r.sample_id != next_id[r.domain_id * nc + r.class_id]++) {
            ids_ok = false;
            break;
        }
    }
    check(ids_ok, "ids", "domain/class ranges and per-pool sequential sample ids");
    if (!ids_ok) return kExitVerify;

    if (plan.masked) {
        std::vector<std::size_t> counts(nd * nc, 0);
        for (const auto& r : s) counts[r.domain_id * nc + r.class_id]++;
        const bool equal = counts == plan.joint_quotas->remaining;
        check(equal, "quota_exactness", "per-state counts vs quota table (0 deviation)");
    } else {
        const auto rep = stream::empirical_report(s, nd, nc);
        auto axis_checks = [&](const char* name, const stream::AxisEmpirical& emp,
                               const markov::CorrelationVector& alpha) {
            const auto pi = markov::stationary_closed_form(alpha);
            double l1 = 0.0;
            for (std::size_t i = 0; i < alpha.n(); ++i) l1 += std::fabs(emp.freq[i] - pi.pi[i]);
            char buf[96];
            std::snprintf(buf, sizeof(buf), "L1 distance to closed form = %.4f (tol 0.02)", l1);
            check(l1 <= 0.02, std::string(name) + "_marginals", buf);
            double worst = 0.0;
            for (std::size_t i = 0; i < alpha.n(); ++i)
                if (emp.self_rate[i] >= 0.0)
                    worst = std::max(worst, std::fabs(emp.self_rate[i] - alpha.alpha[i]));
            std::snprintf(buf, sizeof(buf), "max |rate - alpha| = %.4f (tol 0.01)", worst);
            check(worst <= 0.01, std::string(name) + "_self_transition", buf);
        };
        if (nd > 1) axis_checks("domain", rep.domain, plan.domain_alpha);
        if (nc > 1) axis_checks("class", rep.cls, plan.class_alpha);
    }

    log << (ok ? "verification passed\n" : "verification FAILED\n");
    return ok ? kExitOk : kExitVerify;
}

int cmd_run(const RunOptions& opt, std::ostream& log) {
    try {
        const auto kv = io::KeyValueFile::parse_file(opt.config_path);
        auto cfg = io::scenario_from_kv(kv);
        if (opt.seed) cfg.seed = *opt.seed;
        if (opt.force_quota) cfg.force_exact = true;
        auto settings = settings_from_kv(kv, cfg.domain_axis.n, cfg.class_axis.n);
        settings.engine_cfg.mode = engine::mode_from_string(opt.mode);

        const auto s = stream::generate(cfg);
        engine::SyntheticWorld world(settings.world);
        const auto model = engine::fit_source(world, settings.model);
        engine::Engine eng(world, model, settings.engine_cfg);
        auto metrics = eng.run(s);
        metrics.setting_code = stream::setting_code({cfg.domain_axis.correlation_mode,
                                                     cfg.domain_axis.balance_mode,
                                                     cfg.class_axis.correlation_mode,
                                                     cfg.class_axis.balance_mode});
        metrics.stream_seed = cfg.seed;
        metrics.world_seed = settings.world.seed;
        metrics.model_seed = settings.model.seed;

        ArtifactWriter out(opt.out_dir);
        out.write("metrics.json", engine::metrics_to_json(metrics) + "\n");
        out.write("bank_snapshot.json", eng.bank_snapshot_json() + "\n");
        nlohmann::json inputs;
        inputs["config"] = opt.config_path;
        inputs["mode"] = opt.mode;
        inputs["resolved_seed"] = cfg.seed;
        out.finalize("run", inputs);
        log << "mode " << opt.mode << ": error " << metrics.error_pct << "% over "
            << metrics.samples << " samples; wrote metrics.json to " << opt.out_dir << "\n";
        return kExitOk;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitInput;
    }
}

int cmd_sweep(const SweepOptions& opt, std::ostream& log) {
    try {
        if (opt.grid != 24 && opt.grid != 36)
            throw InvalidConfig("--grid must be 24 or 36, got " + std::to_string(opt.grid));
        io::KeyValueFile kv = opt.config_path
                                  ? io::KeyValueFile::parse_file(*opt.config_path)
                                  : io::KeyValueFile::parse_text("", "<defaults>");

        stream::GridDefaults gd;
        gd.n_domains = static_cast<std::size_t>(kv.get_u64("domain.n", 5));
        gd.n_classes = static_cast<std::size_t>(kv.get_u64("class.n", 6));
        const std::size_t length = static_cast<std::size_t>(kv.get_u64("length", 30000));
        const std::uint64_t base_seed = opt.seed ? *opt.seed : kv.get_u64("seed", 100);
        auto settings = settings_from_kv(kv, gd.n_domains, gd.n_classes);

        engine::SyntheticWorld world(settings.world);
        const auto model = engine::fit_source(world, settings.model);
        const auto cells = stream::enumerate_grid(opt.grid == 24);
        const auto& modes = engine::all_modes();

        struct Row {
            std::string code;
            std::vector<double> errors;  // per mode, NaN = failed
            bool failed = false;
            std::string detail;
        };
        std::vector<Row> rows(cells.size());

        std::size_t workers = opt.threads ? opt.threads : std::thread::hardware_concurrency();
        workers = std::max<std::size_t>(1, std::min(workers, cells.size()));
        std::atomic<std::size_t> cursor{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = cursor.fetch_add(1);
                if (i >= cells.size()) return;
                Row row;
                row.code = stream::setting_code(cells[i]);
                try {
                    auto scfg = stream::scenario_from_cell(cells[i], gd, length,
                                                           base_seed + i);
                    const auto s = stream::generate(scfg);
                    for (const auto mode : modes) {
                        engine::EngineConfig ec = settings.engine_cfg;
                        ec.mode = mode;
                        auto m = engine::run_mode(world, model, ec, s);
                        row.errors.push_back(m.error_pct);
                    }
                } catch (const Error& e) {
                    row.failed = true;
                    row.detail = e.what();
                }
                rows[i] = std::move(row);
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();

        std::string csv = "setting";
        for (const auto mode : modes) csv += "," + engine::to_string(mode);
        csv += "\n";
        bool any_failed = false;
        std::vector<double> sums(modes.size(), 0.0);
        std::size_t ok_rows = 0;
        char buf[64];
        for (const auto& row : rows) {
            csv += row.code;
            if (row.failed) {
                any_failed = true;
                for (std::size_t m = 0; m < modes.size(); ++m) csv += ",FAIL";
                log << "setting " << row.code << " failed: " << row.detail << "\n";
            } else {
                ++ok_rows;
                for (std::size_t m = 0; m < modes.size(); ++m) {
                    sums[m] += row.errors[m];
                    std::snprintf(buf, sizeof(buf), ",%.4f", row.errors[m]);
                    csv += buf;
                }
            }
            csv += "\n";
        }
        csv += "MEAN";
        for (std::size_t m = 0; m < modes.size(); ++m) {
            std::snprintf(buf, sizeof(buf), ",%.4f",
                          ok_rows ? sums[m] / static_cast<double>(ok_rows) : 0.0);
            csv += buf;
        }
        csv += "\n";

        ArtifactWriter out(opt.out_dir);
        out.write("grid.csv", csv);
        nlohmann::json inputs;
        inputs["grid"] = opt.grid;
        inputs["length"] = length;
        inputs["base_seed"] = base_seed;
        inputs["world_seed"] = settings.world.seed;
        out.finalize("sweep", inputs);
        log << "wrote grid.csv (" << rows.size() << " settings x " << modes.size()
            << " modes) to " << opt.out_dir << "\n";
        return any_failed ? kExitPartial : kExitOk;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitInput;
    }
}

}  // namespace unitta::cli
