#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "unitta/markov.hpp"
#include "unitta/rng.hpp"

namespace unitta::stream {

// One cell of the correlation/imbalance grid.
struct GridCell {
    markov::CorrelationMode domain_corr;
    markov::BalanceMode domain_bal;
    markov::CorrelationMode class_corr;
    markov::BalanceMode class_bal;
};

// Paper-style setting code, e.g. "d(n,u)c(i,1)":
// i/n/1 = iid/noniid/continual, 1/u = balanced/imbalanced.
std::string setting_code(const GridCell& cell);

// All 36 combinations in canonical order; with experiment_subset the
// continual class settings are dropped (24 cells).
std::vector<GridCell> enumerate_grid(bool experiment_subset);

// Default axis sizes and factors used when instantiating grid cells.
struct GridDefaults {
    std::size_t n_domains = 5;
    std::size_t n_classes = 6;
    double domain_alpha1 = 0.85;
    double domain_beta = 5.0;
    double class_alpha1 = 0.95;
    double class_beta = 10.0;
};

struct ScenarioConfig {
    markov::AxisConfig domain_axis;
    markov::AxisConfig class_axis;
    std::size_t length = 0;
    std::uint64_t seed = 0;
    // Forces joint-state quotas + column masking so final counts are exact.
    // Without it, masking still applies where the construction demands it
    // (continual axes, imbalance with no feasible chain).
    bool force_exact = false;
};

ScenarioConfig scenario_from_cell(const GridCell& cell, const GridDefaults& defaults,
                                  std::size_t length, std::uint64_t seed);

struct SampleRecord {
    std::size_t step = 0;
    std::size_t domain_id = 0;
    std::size_t class_id = 0;
    std::size_t sample_id = 0;  // sequential within the (domain, class) pool

    bool operator==(const SampleRecord&) const = default;
};

using Stream = std::vector<SampleRecord>;

struct QuotaTable {
    std::vector<std::size_t> remaining;

    std::size_t total() const;
};

// Power-law sample counts: counts proportional to beta^((n-1-i)/(n-1)),
// largest-remainder rounded so they sum to exactly `total`. Throws
// InvalidConfig if beta < 1, total < n, or any state rounds to zero.
QuotaTable quotas(double beta, std::size_t n, std::size_t total);

// Everything generate() derives from a ScenarioConfig before walking:
// per-axis correlation vectors (possibly with beta folded into quotas),
// whether masking is active, and the joint quota/weight tables.
struct GenerationPlan {
    markov::CorrelationVector domain_alpha;
    markov::CorrelationVector class_alpha;
    bool masked = false;
    std::vector<double> joint_weights;   // normalized, domain-major
    std::optional<QuotaTable> joint_quotas;
    markov::TransitionMatrix joint;      // P_domain (x) P_class
};

GenerationPlan make_plan(const ScenarioConfig& cfg);

// Pre-sampled next-state draws, one independent queue per state. Each
// state's queue is fed by its own RNG stream derived from (seed, state),
// and refills transparently on exhaustion, so consumption order across
// states does not perturb any state's sequence.
class TransitionQueues {
public:
    TransitionQueues(const markov::TransitionMatrix& p, std::uint64_t seed,
                     std::size_t horizon = 1024);

    // Consume the next pre-sampled transition out of `state`.
    std::size_t next(std::size_t state);

    std::size_t states() const { return cdf_.size(); }

private:
    void refill(std::size_t state);

    struct StateQueue {
        std::optional<Rng> rng;  // created lazily on first visit
        std::vector<std::size_t> buffer;
        std::size_t cursor = 0;
    };

    std::vector<std::vector<double>> cdf_;
    std::vector<StateQueue> queues_;
    std::uint64_t seed_ = 0;
    std::size_t horizon_ = 0;
};

// Zero the masked columns and renormalize each row. Rows whose surviving
// mass is zero are left all-zero (the sampler draws uniformly among
// unmasked states when it stands in such a row).
markov::TransitionMatrix apply_mask(const markov::TransitionMatrix& p,
                                    const std::vector<bool>& masked);

// Walk the composed chain for cfg.length steps. Deterministic in cfg
// (including seed). Throws ConstraintViolation for an infeasible noniid
// axis without force_exact, and Exhausted if masking runs out of states.
Stream generate(const ScenarioConfig& cfg);

struct AxisEmpirical {
    std::vector<double> freq;        // marginal state frequencies, sum to 1
    std::vector<double> self_rate;   // per-state self-transition rate (-1 if unobserved)
    double imbalance_ratio = 1.0;    // max/min nonzero frequency
};

struct EmpiricalStats {
    AxisEmpirical domain;
    AxisEmpirical cls;
    std::size_t length = 0;
};

EmpiricalStats empirical_report(const Stream& s, std::size_t n_domains, std::size_t n_classes);

}  // namespace unitta::stream
