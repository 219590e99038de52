#include "unitta/engine.hpp"

#include <algorithm>
#include <array>

#include <json.hpp>

namespace unitta::engine {

std::string to_string(Mode m) {
    switch (m) {
        case Mode::Unitta: return "unitta";
        case Mode::CofaOnly: return "cofa_only";
        case Mode::BdnOnly: return "bdn_only";
        case Mode::GlobalBnBaseline: return "global_bn_baseline";
        case Mode::TestBaseline: return "test_baseline";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    for (Mode m : all_modes())
        if (to_string(m) == s) return m;
    throw InvalidConfig("unknown mode '" + s +
                        "' (expected unitta|cofa_only|bdn_only|global_bn_baseline|test_baseline)");
}

const std::vector<Mode>& all_modes() {
    static const std::vector<Mode> modes = {Mode::Unitta, Mode::CofaOnly, Mode::BdnOnly,
                                            Mode::GlobalBnBaseline, Mode::TestBaseline};
    return modes;
}

EngineSwitches switches_for(Mode mode, bool filter_enabled) {
    switch (mode) {
        case Mode::TestBaseline: return {false, false, false, false, false};
        case Mode::GlobalBnBaseline: return {true, false, false, false, false};
        case Mode::CofaOnly: return {true, false, true, filter_enabled, true};
        case Mode::BdnOnly: return {true, true, false, filter_enabled, true};
        case Mode::Unitta: return {true, true, true, filter_enabled, true};
    }
    throw InvalidConfig("unreachable mode");
}

std::string metrics_to_json(const Metrics& m) {
    nlohmann::json j;
    j["setting_code"] = m.setting_code;
    j["mode"] = m.mode;
    j["samples"] = m.samples;
    j["errors"] = m.errors;
    j["error_pct"] = m.error_pct;
    j["domain_count"] = m.domain_count;
    j["active_domains"] = m.active_domains;
    j["domain_accuracy_pct"] = m.domain_accuracy_pct;
    j["domain_confusion"] = m.domain_confusion;
    j["stream_seed"] = m.stream_seed;
    j["world_seed"] = m.world_seed;
    j["model_seed"] = m.model_seed;
    j["domain_pred_layer"] = m.domain_pred_layer;
    return j.dump(2);
}

Engine::Engine(const SyntheticWorld& world, const PretrainedModel& model,
               const EngineConfig& cfg)
    : Engine(world, model, cfg, switches_for(cfg.mode, cfg.filter_enabled)) {}

Engine::Engine(const SyntheticWorld& world, const PretrainedModel& model,
               const EngineConfig& cfg, const EngineSwitches& switches)
    : world_(world), model_(model), cfg_(cfg), sw_(switches) {
    if (cfg_.domain_pred_layer >= model_.layers)
        throw InvalidConfig("domain_pred_layer must be < layer count");
    if (world.config().channels != model.channels)
        throw ConfigMismatch("world/model channel mismatch");
    const double eta = bdn::StatsBank::default_eta(world.classes());
    for (std::size_t l = 0; l < model_.layers; ++l) {
        global_.emplace_back(model_.anchors[l], world.classes(), eta);
        domain_.emplace_back(model_.anchors[l], world.classes(), eta);
    }
}

Engine::ForwardOut Engine::forward(const bdn::FeatureMap& x, std::vector<bdn::StatsBank>* banks,
                                   std::size_t domain_id, std::size_t label, bool update) {
    ForwardOut out;
    bdn::FeatureMap act = x;
    for (std::size_t l = 0; l < model_.layers; ++l) {
        act = model_.mix(l, act);
        out.slot_instance.push_back(bdn::instance_stats(act));
        if (banks == nullptr) {
            act = bdn::normalize(act, model_.anchors[l], model_.affine[l]);
        } else {
            auto& bank = (*banks)[l];
            if (update) bank.ema_update(domain_id, label, out.slot_instance.back());
            act = bdn::normalize(act, bank.aggregate(domain_id), model_.affine[l]);
        }
        clip_nonnegative(act);
    }
    out.pooled = pool(act);
    return out;
}

Prediction Engine::step(const stream::SampleRecord& rec) {
    if (rec.domain_id + 1 >= world_.domains() || rec.class_id >= world_.classes())
        throw ConfigMismatch("stream record outside the world's domain/class range");
    const bdn::FeatureMap x = world_.sample(rec.domain_id + 1, rec.class_id, rec.sample_id);

    Prediction pred;

    if (!sw_.running_stats) {
        // Anchor statistics everywhere, plain single prediction.
        auto f1 = forward(x, nullptr, 0, 0, false);
        pred.predicted_class = cofa::argmax(cofa::single_predict(f1.pooled, model_.classifier));
        return pred;
    }

    // Forward 1: global statistics, read-only; initial class pseudo-label.
    auto f1 = forward(x, &global_, 0, 0, false);
    const std::size_t k1 = cofa::argmax(cofa::single_predict(f1.pooled, model_.classifier));

    // Forward 2: update the global bank under the Forward-1 label, then
    // normalize with the refreshed aggregates.
    auto f2 = forward(x, &global_, 0, k1, true);
    const auto p2_single = cofa::single_predict(f2.pooled, model_.classifier);
    const std::size_t k2 = cofa::argmax(p2_single);

    if (!sw_.forward3) {
        pred.predicted_class = k2;
        return pred;
    }

    // Domain assignment at the designated slot, on Forward-2 instance stats.
    const auto& inst_m = f2.slot_instance[cfg_.domain_pred_layer];
    std::size_t d = 0;
    if (sw_.expand) {
        const auto a = bdn::assign_or_flag(inst_m, domain_[cfg_.domain_pred_layer]);
        if (a.new_domain) {
            for (auto& bank : domain_) d = bank.expand();
            pred.expanded = true;
        } else {
            d = a.domain_id;
        }
    }
    for (auto& bank : domain_) bank.record_assignment(d);
    pred.assigned_domain = d;

    // Forward 3: update and normalize with the assigned domain's statistics.
    auto f3 = forward(x, &domain_, d, k2, true);
    const auto p3_single = cofa::single_predict(f3.pooled, model_.classifier);

    std::vector<cofa::ProbVector> candidates;
    if (sw_.cofa && cache_.has()) {
        const auto p3_cofa = cofa::cofa_predict(f3.pooled, cache_, model_.classifier);
        if (sw_.filter) {
            const auto p2_cofa = cofa::cofa_predict(f2.pooled, cache_, model_.classifier);
            candidates = {p3_cofa, p3_single, p2_cofa, p2_single};
        } else {
            candidates = {p3_cofa};
        }
    } else if (sw_.filter) {
        candidates = {p3_single, p2_single};
    } else {
        candidates = {p3_single};
    }
    pred.predicted_class = cofa::argmax(cofa::confidence_select(candidates));

    if (sw_.cofa) cache_.store(f3.pooled);
    return pred;
}

Metrics Engine::run(const stream::Stream& s, std::size_t batch_size) {
    if (s.empty()) throw InvalidConfig("empty stream");
    if (batch_size == 0) batch_size = 1;

    std::size_t n_true_domains = 0;
    for (const auto& r : s) n_true_domains = std::max(n_true_domains, r.domain_id + 1);

    Metrics m;
    m.mode = to_string(cfg_.mode);
    m.samples = s.size();
    m.domain_pred_layer = cfg_.domain_pred_layer;
    std::vector<std::vector<std::size_t>> confusion(n_true_domains);

    for (std::size_t start = 0; start < s.size(); start += batch_size) {
        const std::size_t end = std::min(s.size(), start + batch_size);
        for (std::size_t i = start; i < end; ++i) {
            const auto pred = step(s[i]);
            if (pred.predicted_class != s[i].class_id) ++m.errors;
            auto& row = confusion[s[i].domain_id];
            if (row.size() <= pred.assigned_domain) row.resize(pred.assigned_domain + 1, 0);
            row[pred.assigned_domain]++;
        }
    }
    m.error_pct = 100.0 * static_cast<double>(m.errors) / static_cast<double>(m.samples);

    std::size_t max_assigned = 0;
    for (const auto& row : confusion) max_assigned = std::max(max_assigned, row.size());
    for (auto& row : confusion) row.resize(max_assigned, 0);
    m.domain_confusion = confusion;

    // Greedy majority mapping: each bank domain votes for its dominant true
    // domain; a sample is correct when its assigned bank domain maps to its
    // true domain.
    std::size_t correct = 0;
    for (std::size_t a = 0; a < max_assigned; ++a) {
        std::size_t best = 0;
        for (std::size_t t = 0; t < confusion.size(); ++t) best = std::max(best, confusion[t][a]);
        correct += best;
    }
    m.domain_accuracy_pct = 100.0 * static_cast<double>(correct) / static_cast<double>(m.samples);
    m.domain_count = domain_.front().domains();
    m.active_domains = domain_.front().active_domains(100);
    return m;
}

std::string Engine::bank_snapshot_json() const {
    nlohmann::json j;
    j["assignment_slot"] = cfg_.domain_pred_layer;
    j["domain_bank"] = nlohmann::json::parse(domain_[cfg_.domain_pred_layer].snapshot_json());
    j["global_bank"] = nlohmann::json::parse(global_[cfg_.domain_pred_layer].snapshot_json());
    return j.dump(2);
}

Metrics run_mode(const SyntheticWorld& world, const PretrainedModel& model,
                 const EngineConfig& cfg, const stream::Stream& s) {
    Engine e(world, model, cfg);
    return e.run(s);
}

std::vector<Metrics> sweep_layer(const SyntheticWorld& world, const PretrainedModel& model,
                                 const EngineConfig& base, const stream::Stream& s) {
    std::vector<Metrics> out;
    for (std::size_t m = 0; m < model.layers; ++m) {
        EngineConfig cfg = base;
        cfg.domain_pred_layer = m;
        out.push_back(run_mode(world, model, cfg, s));
    }
    return out;
}

}  // namespace unitta::engine
