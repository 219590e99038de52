#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "unitta/errors.hpp"

namespace unitta::markov {

// Tolerances used throughout the module (double precision at n <= 100).
inline constexpr double kRowSumTol = 1e-12;
inline constexpr double kStationaryTol = 1e-10;

enum class CorrelationMode { Iid, NonIid, Continual };
enum class BalanceMode { Balanced, Imbalanced };

std::string to_string(CorrelationMode m);
std::string to_string(BalanceMode m);
CorrelationMode correlation_mode_from_string(const std::string& s);
BalanceMode balance_mode_from_string(const std::string& s);

// Per-state self-transition probabilities of a uniformly leaving chain.
// State 0 carries the largest alpha (most correlated, most frequent).
struct CorrelationVector {
    std::vector<double> alpha;

    std::size_t n() const { return alpha.size(); }
};

// Row-stochastic transition matrix, row-major.
class TransitionMatrix {
public:
    TransitionMatrix() = default;
    TransitionMatrix(std::size_t n, std::vector<double> entries);

    std::size_t n() const { return n_; }
    double at(std::size_t i, std::size_t j) const { return p_[i * n_ + j]; }
    double& at(std::size_t i, std::size_t j) { return p_[i * n_ + j]; }
    const std::vector<double>& data() const { return p_; }

    // Max |row sum - 1| over all rows.
    double row_sum_error() const;

private:
    std::size_t n_ = 0;
    std::vector<double> p_;
};

struct StationaryDistribution {
    std::vector<double> pi;

    std::size_t n() const { return pi.size(); }
};

// One axis (domain or class) of a scenario.
struct AxisConfig {
    std::size_t n = 0;
    CorrelationMode correlation_mode = CorrelationMode::Iid;
    double alpha1 = 0.0;   // maximum correlation factor
    BalanceMode balance_mode = BalanceMode::Balanced;
    double beta = 1.0;     // imbalance factor, >= 1

    bool imbalanced() const { return balance_mode == BalanceMode::Imbalanced; }
};

// Throws InvalidConfig if the axis violates its own invariants
// (iid => alpha1 = 1/n, continual => alpha1 = 1, balanced => beta = 1, ...).
void validate_axis(const AxisConfig& cfg);

// True iff (1 - alpha1) * beta < (n-1)/n, the feasibility condition for a
// temporally correlated imbalanced chain.
bool correlation_feasible(std::size_t n, double alpha1, double beta);

// Builds the correlation vector for an axis:
//   1 - alpha_i = (1 - alpha1) * beta^(i/(n-1))   (i = 0..n-1)
// iid axes are uniform (alpha_i = 1/n) and continual axes are all ones
// regardless of beta; their imbalance, when requested, is the sampler's
// quota table's job. Throws ConstraintViolation when a noniid+imbalanced
// axis fails the feasibility inequality.
CorrelationVector correlation_vector(const AxisConfig& cfg);

// P_ii = alpha_i, P_ij = (1 - alpha_i)/(n - 1) for i != j.
TransitionMatrix build_ulmm(const CorrelationVector& alpha);

// pi_i proportional to 1/(1 - alpha_i). Throws DegenerateChain if any
// alpha_i = 1.
StationaryDistribution stationary_closed_form(const CorrelationVector& alpha);

// Power iteration of pi^T P until the L-inf change drops below 1e-13,
// capped at 1e6 iterations (NonConvergence past the cap). Independent of
// the closed form by construction.
StationaryDistribution stationary_oracle(const TransitionMatrix& p);

// Kronecker product; joint state index is domain-major: s = d * n_c + k.
TransitionMatrix kronecker_compose(const TransitionMatrix& p_domain,
                                   const TransitionMatrix& p_class);

}  // namespace unitta::markov
