#include "unitta/stream.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace unitta::stream {

using markov::AxisConfig;
using markov::BalanceMode;
using markov::CorrelationMode;
using markov::CorrelationVector;
using markov::TransitionMatrix;

namespace {

char corr_char(CorrelationMode m) {
    switch (m) {
        case CorrelationMode::Iid: return 'i';
        case CorrelationMode::NonIid: return 'n';
        case CorrelationMode::Continual: return '1';
    }
    return '?';
}

char bal_char(BalanceMode m) { return m == BalanceMode::Balanced ? '1' : 'u'; }

// Power-law state weights: w_0/w_{n-1} = beta, geometric in between.
std::vector<double> power_law_weights(double beta, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n <= 1 || beta == 1.0) return w;
    const double step = 1.0 / (static_cast<double>(n) - 1.0);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = std::pow(beta, static_cast<double>(n - 1 - i) * step);
    return w;
}

struct AxisPlan {
    CorrelationVector alpha;
    bool requires_mask = false;
};

AxisPlan plan_axis(const AxisConfig& cfg, bool force_exact) {
    AxisPlan plan;
    if (cfg.n == 1) {
        // Constant axis: never leaves its single state.
        plan.alpha.alpha = {1.0};
        return plan;
    }
    markov::validate_axis(cfg);
    switch (cfg.correlation_mode) {
        case CorrelationMode::Continual:
            plan.alpha = markov::correlation_vector(cfg);
            plan.requires_mask = true;  // blocks advance only by quota exhaustion
            return plan;
        case CorrelationMode::Iid:
            plan.alpha = markov::correlation_vector(cfg);
            plan.requires_mask = cfg.imbalanced();
            return plan;
        case CorrelationMode::NonIid:
            if (cfg.imbalanced() && !markov::correlation_feasible(cfg.n, cfg.alpha1, cfg.beta)) {
                if (!force_exact) {
                    // Reproduce the exact diagnostic of the markov layer.
                    markov::correlation_vector(cfg);
                }
                // Correlation stays at alpha1 everywhere; imbalance is the
                // quota table's job.
                AxisConfig flat = cfg;
                flat.balance_mode = BalanceMode::Balanced;
                flat.beta = 1.0;
                plan.alpha = markov::correlation_vector(flat);
                plan.requires_mask = true;
                return plan;
            }
            plan.alpha = markov::correlation_vector(cfg);
            return plan;
    }
    throw InvalidConfig("unreachable correlation mode");
}

TransitionMatrix axis_matrix(const CorrelationVector& alpha) {
    if (alpha.n() == 1) return TransitionMatrix(1, {1.0});
    return markov::build_ulmm(alpha);
}

std::vector<std::size_t> largest_remainder(const std::vector<double>& weights,
                                           std::size_t total) {
    const std::size_t n = weights.size();
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::size_t> counts(n);
    std::vector<std::pair<double, std::size_t>> rem(n);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double target = static_cast<double>(total) * weights[i] / wsum;
        counts[i] = static_cast<std::size_t>(std::floor(target));
        assigned += counts[i];
        rem[i] = {target - std::floor(target), i};
    }
    // Largest fractional part first; ties go to the lower state index.
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) counts[rem[k % n].second]++;
    return counts;
}

}  // namespace

std::string setting_code(const GridCell& cell) {
    std::string s = "d(";
    s += corr_char(cell.domain_corr);
    s += ',';
    s += bal_char(cell.domain_bal);
    s += ")c(";
    s += corr_char(cell.class_corr);
    s += ',';
    s += bal_char(cell.class_bal);
    s += ')';
    return s;
}

std::vector<GridCell> enumerate_grid(bool experiment_subset) {
    static constexpr CorrelationMode kCorr[] = {CorrelationMode::Iid, CorrelationMode::NonIid,
                                                CorrelationMode::Continual};
    static constexpr BalanceMode kBal[] = {BalanceMode::Balanced, BalanceMode::Imbalanced};
    std::vector<GridCell> cells;
    for (auto dc : kCorr)
        for (auto db : kBal)
            for (auto cc : kCorr) {
                if (experiment_subset && cc == CorrelationMode::Continual) continue;
                for (auto cb : kBal) cells.push_back({dc, db, cc, cb});
            }
    return cells;
}

ScenarioConfig scenario_from_cell(const GridCell& cell, const GridDefaults& d,
                                  std::size_t length, std::uint64_t seed) {
    auto make_axis = [](std::size_t n, CorrelationMode corr, BalanceMode bal,
                        double noniid_alpha1, double beta) {
        AxisConfig a;
        a.n = n;
        a.correlation_mode = corr;
        a.balance_mode = bal;
        a.beta = bal == BalanceMode::Balanced ? 1.0 : beta;
        switch (corr) {
            case CorrelationMode::Iid: a.alpha1 = 1.0 / static_cast<double>(n); break;
            case CorrelationMode::Continual: a.alpha1 = 1.0; break;
            case CorrelationMode::NonIid: a.alpha1 = noniid_alpha1; break;
        }
        return a;
    };
    ScenarioConfig cfg;
    cfg.domain_axis = make_axis(d.n_domains, cell.domain_corr, cell.domain_bal,
                                d.domain_alpha1, d.domain_beta);
    cfg.class_axis = make_axis(d.n_classes, cell.class_corr, cell.class_bal,
                               d.class_alpha1, d.class_beta);
    cfg.length = length;
    cfg.seed = seed;
    return cfg;
}

std::size_t QuotaTable::total() const {
    return std::accumulate(remaining.begin(), remaining.end(), std::size_t{0});
}

QuotaTable quotas(double beta, std::size_t n, std::size_t total) {
    if (beta < 1.0) throw InvalidConfig("quota beta must be >= 1");
    if (n == 0 || total < n)
        throw InvalidConfig("quota table needs total >= n, got total=" + std::to_string(total) +
                            " n=" + std::to_string(n));
    QuotaTable t{largest_remainder(power_law_weights(beta, n), total)};
    for (std::size_t i = 0; i < n; ++i)
        if (t.remaining[i] == 0)
            throw InvalidConfig("state " + std::to_string(i) +
                                " quota rounds to zero; increase total or reduce beta");
    return t;
}

GenerationPlan make_plan(const ScenarioConfig& cfg) {
    if (cfg.length == 0) throw InvalidConfig("stream length must be positive");
    auto d = plan_axis(cfg.domain_axis, cfg.force_exact);
    auto c = plan_axis(cfg.class_axis, cfg.force_exact);

    GenerationPlan plan;
    plan.domain_alpha = d.alpha;
    plan.class_alpha = c.alpha;
    plan.masked = cfg.force_exact || d.requires_mask || c.requires_mask;

    const auto wd = power_law_weights(cfg.domain_axis.n == 1 ? 1.0 : cfg.domain_axis.beta,
                                      cfg.domain_axis.n);
    const auto wc = power_law_weights(cfg.class_axis.n == 1 ? 1.0 : cfg.class_axis.beta,
                                      cfg.class_axis.n);
    plan.joint_weights.resize(wd.size() * wc.size());
    double total = 0.0;
    for (std::size_t i = 0; i < wd.size(); ++i)
        for (std::size_t j = 0; j < wc.size(); ++j) {
            plan.joint_weights[i * wc.size() + j] = wd[i] * wc[j];
            total += wd[i] * wc[j];
        }
    for (auto& w : plan.joint_weights) w /= total;

    if (plan.masked)
        plan.joint_quotas = QuotaTable{largest_remainder(plan.joint_weights, cfg.length)};
    if (plan.joint_quotas)
        for (std::size_t s = 0; s < plan.joint_quotas->remaining.size(); ++s)
            if (plan.joint_quotas->remaining[s] == 0)
                throw InvalidConfig("joint state " + std::to_string(s) +
                                    " quota rounds to zero; increase length");

    plan.joint = markov::kronecker_compose(axis_matrix(d.alpha), axis_matrix(c.alpha));
    return plan;
}

TransitionQueues::TransitionQueues(const TransitionMatrix& p, std::uint64_t seed,
                                   std::size_t horizon)
    : cdf_(p.n()), queues_(p.n()), seed_(seed), horizon_(std::max<std::size_t>(horizon, 1)) {
    for (std::size_t i = 0; i < p.n(); ++i) {
        cdf_[i].resize(p.n());
        double acc = 0.0;
        for (std::size_t j = 0; j < p.n(); ++j) {
            acc += p.at(i, j);
            cdf_[i][j] = acc;
        }
    }
}

void TransitionQueues::refill(std::size_t state) {
    auto& q = queues_[state];
    if (!q.rng) q.rng.emplace(derive_seed(seed_, 0x71000000ULL + state));
    q.buffer.clear();
    q.cursor = 0;
    const auto& cdf = cdf_[state];
    for (std::size_t k = 0; k < horizon_; ++k) {
        const double u = q.rng->uniform01() * cdf.back();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        q.buffer.push_back(std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1));
    }
}

std::size_t TransitionQueues::next(std::size_t state) {
    auto& q = queues_[state];
    if (q.cursor >= q.buffer.size()) refill(state);
    return q.buffer[q.cursor++];
}

TransitionMatrix apply_mask(const TransitionMatrix& p, const std::vector<bool>& masked) {
    const std::size_t n = p.n();
    std::vector<double> out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double mass = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (!masked[j]) mass += p.at(i, j);
        if (mass <= 0.0) continue;  // row left all-zero
        for (std::size_t j = 0; j < n; ++j)
            if (!masked[j]) out[i * n + j] = p.at(i, j) / mass;
    }
    return TransitionMatrix(n, std::move(out));
}

Stream generate(const ScenarioConfig& cfg) {
    const auto plan = make_plan(cfg);
    const std::size_t nc = cfg.class_axis.n;
    const std::size_t n_states = plan.joint.n();

    Rng master(derive_seed(cfg.seed, 0x57A97ULL));
    TransitionQueues queues(plan.joint, cfg.seed);

    std::vector<std::size_t> quota;
    if (plan.joint_quotas) quota = plan.joint_quotas->remaining;
    std::vector<bool> dead(n_states, false);
    // Surviving probability mass of each row under the current mask.
    std::vector<double> row_mass(n_states, 1.0);
    std::size_t alive = n_states;

    auto mask_state = [&](std::size_t s) {
        dead[s] = true;
        --alive;
        for (std::size_t i = 0; i < n_states; ++i) row_mass[i] -= plan.joint.at(i, s);
    };

    auto uniform_survivor = [&]() {
        std::size_t pick = master.index(alive);
        for (std::size_t s = 0; s < n_states; ++s) {
            if (dead[s]) continue;
            if (pick == 0) return s;
            --pick;
        }
        throw Exhausted("no states with remaining quota");
    };

    Stream out;
    out.reserve(cfg.length);
    std::vector<std::size_t> pool_count(n_states, 0);

    std::size_t state = master.categorical(plan.joint_weights);
    for (std::size_t step = 0; step < cfg.length; ++step) {
        if (alive == 0) throw Exhausted("masking exhausted all states before length was reached");
        out.push_back({step, state / nc, state % nc, pool_count[state]++});

        if (!quota.empty()) {
            if (quota[state] == 0) throw Exhausted("internal: sampled a state with zero quota");
            if (--quota[state] == 0) mask_state(state);
        }
        if (step + 1 == cfg.length) break;

        // Next state: pre-sampled draw, rejecting masked targets (this is
        // exactly the column-zeroed, row-renormalized chain). Rows with no
        // surviving mass fall back to a uniform draw among survivors.
        if (!quota.empty() && row_mass[state] < 1e-12) {
            state = uniform_survivor();
            continue;
        }
        std::size_t next = queues.next(state);
        std::size_t rejections = 0;
        while (!quota.empty() && dead[next]) {
            if (++rejections > 100000) break;
            next = queues.next(state);
        }
        if (!quota.empty() && dead[next]) {
            // Pathological rejection rate; draw directly from the masked row.
            const auto masked_p = apply_mask(plan.joint, dead);
            double u = master.uniform01();
            double acc = 0.0;
            std::size_t chosen = n_states;
            for (std::size_t j = 0; j < n_states; ++j) {
                acc += masked_p.at(state, j);
                if (u < acc) {
                    chosen = j;
                    break;
                }
            }
            next = chosen == n_states ? uniform_survivor() : chosen;
        }
        state = next;
    }
    return out;
}

namespace {

AxisEmpirical axis_empirical(const Stream& s, std::size_t n,
                             std::size_t (SampleRecord::*field)) {
    AxisEmpirical e;
    e.freq.assign(n, 0.0);
    e.self_rate.assign(n, -1.0);
    std::vector<std::size_t> visits(n, 0), transitions(n, 0), selfs(n, 0);
    for (std::size_t t = 0; t < s.size(); ++t) {
        const std::size_t v = s[t].*field;
        visits[v]++;
        if (t + 1 < s.size()) {
            transitions[v]++;
            if (s[t + 1].*field == v) selfs[v]++;
        }
    }
    double max_f = 0.0, min_f = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
        e.freq[i] = static_cast<double>(visits[i]) / static_cast<double>(s.size());
        if (transitions[i] > 0)
            e.self_rate[i] = static_cast<double>(selfs[i]) / static_cast<double>(transitions[i]);
        if (visits[i] > 0) {
            max_f = std::max(max_f, e.freq[i]);
            min_f = std::min(min_f, e.freq[i]);
        }
    }
    e.imbalance_ratio = min_f > 0.0 ? max_f / min_f : 0.0;
    return e;
}

}  // namespace

EmpiricalStats empirical_report(const Stream& s, std::size_t n_domains, std::size_t n_classes) {
    if (s.empty()) throw InvalidConfig("empirical report needs a nonempty stream");
    EmpiricalStats st;
    st.length = s.size();
    st.domain = axis_empirical(s, n_domains, &SampleRecord::domain_id);
    st.cls = axis_empirical(s, n_classes, &SampleRecord::class_id);
    return st;
}

}  // namespace unitta::stream
