#pragma once

#include <string>
#include <vector>

#include "unitta/bdn.hpp"
#include "unitta/cofa.hpp"
#include "unitta/model.hpp"
#include "unitta/stream.hpp"
#include "unitta/world.hpp"

namespace unitta::engine {

enum class Mode { Unitta, CofaOnly, BdnOnly, GlobalBnBaseline, TestBaseline };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);
const std::vector<Mode>& all_modes();

// The five modes are subsets of one protocol skeleton, so the ablations
// degrade into each other exactly (cofa_only = unitta minus expansion,
// bdn_only = unitta minus the feature cache, ...).
struct EngineSwitches {
    bool running_stats = true;  // false: anchors everywhere, no updates
    bool expand = true;         // false: domain bank pinned at one domain
    bool cofa = true;
    bool filter = true;
    bool forward3 = true;       // false: prediction comes from Forward 2

    bool operator==(const EngineSwitches&) const = default;
};

EngineSwitches switches_for(Mode mode, bool filter_enabled);

struct EngineConfig {
    Mode mode = Mode::Unitta;
    std::size_t domain_pred_layer = 0;  // the m-th normalization slot
    bool filter_enabled = true;
};

struct Prediction {
    std::size_t predicted_class = 0;
    std::size_t assigned_domain = 0;  // bank domain id
    bool expanded = false;
};

struct Metrics {
    std::string setting_code;
    std::string mode;
    std::size_t samples = 0;
    std::size_t errors = 0;
    double error_pct = 0.0;
    std::size_t domain_count = 1;    // bank domains created
    std::size_t active_domains = 0;  // > 100 assigned samples
    double domain_accuracy_pct = 0.0;
    std::vector<std::vector<std::size_t>> domain_confusion;  // [true][assigned]
    std::uint64_t stream_seed = 0;
    std::uint64_t world_seed = 0;
    std::uint64_t model_seed = 0;
    std::size_t domain_pred_layer = 0;
};

std::string metrics_to_json(const Metrics& m);

class Engine {
public:
    Engine(const SyntheticWorld& world, const PretrainedModel& model, const EngineConfig& cfg);
    Engine(const SyntheticWorld& world, const PretrainedModel& model, const EngineConfig& cfg,
           const EngineSwitches& switches);

    // One sample through the protocol; strictly sequential.
    Prediction step(const stream::SampleRecord& rec);

    // Applies step over the stream and aggregates. batch_size only chunks
    // the iteration (I/O grouping); it cannot change any prediction.
    Metrics run(const stream::Stream& s, std::size_t batch_size = 1);

    const bdn::StatsBank& domain_bank(std::size_t slot) const { return domain_.at(slot); }
    const bdn::StatsBank& global_bank(std::size_t slot) const { return global_.at(slot); }
    const EngineSwitches& switches() const { return sw_; }

    // Domain bank snapshot at the assignment slot plus the global bank.
    std::string bank_snapshot_json() const;

private:
    struct ForwardOut {
        cofa::FeatureVector pooled;
        std::vector<bdn::GaussStats> slot_instance;  // pre-norm stats per slot
    };

    // banks == nullptr: normalize with the frozen anchors.
    // update: EMA-update cell (domain_id, label) at each slot before
    // normalizing with the refreshed aggregate.
    ForwardOut forward(const bdn::FeatureMap& x, std::vector<bdn::StatsBank>* banks,
                       std::size_t domain_id, std::size_t label, bool update);

    const SyntheticWorld& world_;
    const PretrainedModel& model_;
    EngineConfig cfg_;
    EngineSwitches sw_;
    std::vector<bdn::StatsBank> global_;
    std::vector<bdn::StatsBank> domain_;
    cofa::FeatureCache cache_;
};

// Convenience: fresh engine, full run.
Metrics run_mode(const SyntheticWorld& world, const PretrainedModel& model,
                 const EngineConfig& cfg, const stream::Stream& s);

// One run per candidate assignment slot.
std::vector<Metrics> sweep_layer(const SyntheticWorld& world, const PretrainedModel& model,
                                 const EngineConfig& base, const stream::Stream& s);

}  // namespace unitta::engine
