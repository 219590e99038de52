#include "unitta/markov.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

namespace unitta::markov {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace

std::string to_string(CorrelationMode m) {
    switch (m) {
        case CorrelationMode::Iid: return "iid";
        case CorrelationMode::NonIid: return "noniid";
        case CorrelationMode::Continual: return "continual";
    }
    return "?";
}

std::string to_string(BalanceMode m) {
    return m == BalanceMode::Balanced ? "balanced" : "imbalanced";
}

CorrelationMode correlation_mode_from_string(const std::string& s) {
    if (s == "iid") return CorrelationMode::Iid;
    if (s == "noniid") return CorrelationMode::NonIid;
    if (s == "continual") return CorrelationMode::Continual;
    throw InvalidConfig("unknown correlation mode '" + s + "' (expected iid|noniid|continual)");
}

BalanceMode balance_mode_from_string(const std::string& s) {
    if (s == "balanced") return BalanceMode::Balanced;
    if (s == "imbalanced") return BalanceMode::Imbalanced;
    throw InvalidConfig("unknown balance mode '" + s + "' (expected balanced|imbalanced)");
}

TransitionMatrix::TransitionMatrix(std::size_t n, std::vector<double> entries)
    : n_(n), p_(std::move(entries)) {
    if (n_ < 1 || p_.size() != n_ * n_)
        throw InvalidConfig("transition matrix must be n x n with n >= 1");
}

double TransitionMatrix::row_sum_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j) s += at(i, j);
        worst = std::max(worst, std::fabs(s - 1.0));
    }
    return worst;
}

void validate_axis(const AxisConfig& cfg) {
    if (cfg.n < 2) throw InvalidConfig("axis needs at least 2 states, got " + std::to_string(cfg.n));
    if (cfg.beta < 1.0) throw InvalidConfig("imbalance factor beta must be >= 1, got " + fmt(cfg.beta));
    if (cfg.balance_mode == BalanceMode::Balanced && cfg.beta != 1.0)
        throw InvalidConfig("balanced axis requires beta = 1, got " + fmt(cfg.beta));
    const double inv_n = 1.0 / static_cast<double>(cfg.n);
    switch (cfg.correlation_mode) {
        case CorrelationMode::Iid:
            if (std::fabs(cfg.alpha1 - inv_n) > 1e-12)
                throw InvalidConfig("iid axis requires alpha1 = 1/n = " + fmt(inv_n) +
                                    ", got " + fmt(cfg.alpha1));
            break;
        case CorrelationMode::Continual:
            if (cfg.alpha1 != 1.0)
                throw InvalidConfig("continual axis requires alpha1 = 1, got " + fmt(cfg.alpha1));
            break;
        case CorrelationMode::NonIid:
            if (cfg.alpha1 <= inv_n || cfg.alpha1 >= 1.0)
                throw InvalidConfig("noniid axis requires alpha1 in (1/n, 1), got " + fmt(cfg.alpha1));
            break;
    }
}

bool correlation_feasible(std::size_t n, double alpha1, double beta) {
    return (1.0 - alpha1) * beta <
           (static_cast<double>(n) - 1.0) / static_cast<double>(n);
}

CorrelationVector correlation_vector(const AxisConfig& cfg) {
    validate_axis(cfg);
    const std::size_t n = cfg.n;
    CorrelationVector v;
    v.alpha.resize(n);

    switch (cfg.correlation_mode) {
        case CorrelationMode::Iid:
            // Uniform chain; beta > 1 is realized downstream by quotas.
            for (auto& a : v.alpha) a = 1.0 / static_cast<double>(n);
            return v;
        case CorrelationMode::Continual:
            for (auto& a : v.alpha) a = 1.0;
            return v;
        case CorrelationMode::NonIid:
            break;
    }

    if (cfg.imbalanced() && !correlation_feasible(n, cfg.alpha1, cfg.beta)) {
        throw ConstraintViolation(
            "(1 - alpha1) * beta = " + fmt((1.0 - cfg.alpha1) * cfg.beta) +
            " must be < (n-1)/n = " + fmt((static_cast<double>(n) - 1.0) / static_cast<double>(n)) +
            "; reduce alpha1/beta or use quota masking");
    }

    // Leaving probabilities form a geometric progression with ratio
    // (1/beta)^(1/(n-1)) from state 0 down to state n-1.
    const double leave0 = 1.0 - cfg.alpha1;
    const double exponent = 1.0 / (static_cast<double>(n) - 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double leave = leave0 * std::pow(cfg.beta, static_cast<double>(i) * exponent);
        v.alpha[i] = 1.0 - leave;
    }
    return v;
}

TransitionMatrix build_ulmm(const CorrelationVector& alpha) {
    const std::size_t n = alpha.n();
    if (n < 2) throw InvalidConfig("ULMM needs n >= 2 states, got " + std::to_string(n));
    for (double a : alpha.alpha)
        if (a < 0.0 || a > 1.0)
            throw InvalidConfig("self-transition probability out of [0,1]: " + fmt(a));

    std::vector<double> p(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const double off = (1.0 - alpha.alpha[i]) / (static_cast<double>(n) - 1.0);
        for (std::size_t j = 0; j < n; ++j) p[i * n + j] = (i == j) ? alpha.alpha[i] : off;
    }
    return TransitionMatrix(n, std::move(p));
}

StationaryDistribution stationary_closed_form(const CorrelationVector& alpha) {
    const std::size_t n = alpha.n();
    if (n == 0) throw InvalidConfig("empty correlation vector");
    StationaryDistribution d;
    d.pi.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double leave = 1.0 - alpha.alpha[i];
        if (leave <= 0.0)
            throw DegenerateChain("alpha_" + std::to_string(i + 1) +
                                  " = 1: continual chains have no unique stationary distribution");
        d.pi[i] = 1.0 / leave;
        total += d.pi[i];
    }
    for (auto& x : d.pi) x /= total;
    return d;
}

StationaryDistribution stationary_oracle(const TransitionMatrix& p) {
    const std::size_t n = p.n();
    constexpr double kTol = 1e-13;
    constexpr std::size_t kMaxIter = 1'000'000;

    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    for (std::size_t iter = 0; iter < kMaxIter; ++iter) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += pi[i] * p.at(i, j);
            next[j] = s;
        }
        double norm = 0.0;
        for (double x : next) norm += x;
        double delta = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            next[j] /= norm;
            delta = std::max(delta, std::fabs(next[j] - pi[j]));
        }
        pi.swap(next);
        if (delta < kTol) {
            StationaryDistribution d;
            d.pi = std::move(pi);
            return d;
        }
    }
    throw NonConvergence("power iteration did not converge in 1e6 iterations "
                         "(matrix may be reducible or periodic)");
}

TransitionMatrix kronecker_compose(const TransitionMatrix& p_domain,
                                   const TransitionMatrix& p_class) {
    const std::size_t nd = p_domain.n();
    const std::size_t nc = p_class.n();
    const std::size_t n = nd * nc;
    std::vector<double> p(n * n);
    for (std::size_t di = 0; di < nd; ++di)
        for (std::size_t ci = 0; ci < nc; ++ci)
            for (std::size_t dj = 0; dj < nd; ++dj)
                for (std::size_t cj = 0; cj < nc; ++cj)
                    p[(di * nc + ci) * n + (dj * nc + cj)] =
                        p_domain.at(di, dj) * p_class.at(ci, cj);
    return TransitionMatrix(n, std::move(p));
}

}  // namespace unitta::markov
