#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "unitta/errors.hpp"

namespace unitta::bdn {

// Variance floor used inside every KL and normalization denominator;
// 1x1 spatial maps have exactly zero instance variance.
inline constexpr double kEps = 1e-5;

// C x H x W activation tensor, channel-major.
struct FeatureMap {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;

    FeatureMap() = default;
    FeatureMap(std::size_t c, std::size_t h, std::size_t w)
        : channels(c), height(h), width(w), values(c * h * w, 0.0) {}

    double at(std::size_t c, std::size_t h, std::size_t w) const {
        return values[(c * height + h) * width + w];
    }
    double& at(std::size_t c, std::size_t h, std::size_t w) {
        return values[(c * height + h) * width + w];
    }
    std::size_t spatial() const { return height * width; }
};

// Per-channel mean and (biased) variance.
struct GaussStats {
    std::vector<double> mu;
    std::vector<double> var;

    GaussStats() = default;
    GaussStats(std::vector<double> m, std::vector<double> v);
    std::size_t channels() const { return mu.size(); }
};

// Per-channel spatial mean and population variance of one sample.
GaussStats instance_stats(const FeatureMap& f);

// KL(N(a) || N(b)) summed over channels, diagonal Gaussians, variances
// floored at kEps.
double gauss_kl(const GaussStats& a, const GaussStats& b);

// Symmetric KL: gauss_kl(a, b) + gauss_kl(b, a). Zero exactly when a == b.
double sym_kl(const GaussStats& a, const GaussStats& b);

// Frozen per-channel scale/shift applied after normalization.
struct AffineParams {
    std::vector<double> scale;
    std::vector<double> shift;

    static AffineParams identity(std::size_t channels);
};

// (F - mu) / sqrt(var + eps) * scale + shift, per channel.
FeatureMap normalize(const FeatureMap& f, const GaussStats& stats, const AffineParams& affine);

struct Assignment {
    bool new_domain = false;
    std::size_t domain_id = 0;  // meaningful when !new_domain
};

// Per-(domain, class) EMA statistics with class-balanced domain aggregates.
// Every cell starts as a copy of the anchor (the frozen source model's
// statistics); a one-domain bank is exactly the global/class bank.
class StatsBank {
public:
    StatsBank(GaussStats anchor, std::size_t n_classes, double eta);

    // eta = 5e-4 * K_C
    static double default_eta(std::size_t n_classes) {
        return 5e-4 * static_cast<double>(n_classes);
    }

    std::size_t domains() const { return domains_.size(); }
    std::size_t classes() const { return n_classes_; }
    double eta() const { return eta_; }
    const GaussStats& anchor() const { return anchor_; }
    const GaussStats& cell(std::size_t d, std::size_t k) const;
    const GaussStats& aggregate(std::size_t d) const;

    // Adds a domain whose cells and aggregate are anchor copies; returns its id.
    std::size_t expand();

    // EMA update of cell (d, k) with one sample's statistics, then a refresh
    // of domain d's aggregate. The pre-update cell mean enters both variance
    // terms.
    void ema_update(std::size_t d, std::size_t k, const GaussStats& inst);
    void ema_update(std::size_t d, std::size_t k, const FeatureMap& f);

    // Recompute aggregate d from its cells: class-mean of means; class-mean
    // of variances plus the variance of the class means.
    void refresh_domain_stats(std::size_t d);

    void record_assignment(std::size_t d);
    const std::vector<std::size_t>& assignment_histogram() const { return assigned_; }

    // Domains with strictly more than min_samples assigned samples.
    std::size_t active_domains(std::size_t min_samples = 100) const;

    // Times the EMA variance had to be clamped at zero (floating dust only;
    // the update rule is nonnegative in exact arithmetic).
    std::size_t floor_events() const { return floor_events_; }

    std::string snapshot_json() const;

private:
    struct Domain {
        std::vector<GaussStats> cells;
        GaussStats aggregate;
    };

    GaussStats anchor_;
    std::size_t n_classes_ = 0;
    double eta_ = 0.0;
    std::vector<Domain> domains_;
    std::vector<std::size_t> assigned_;
    std::size_t floor_events_ = 0;
};

// Expansion rule: if the smallest symmetric KL from the instance to any
// existing domain aggregate exceeds the symmetric KL to the anchor, the
// sample belongs to a new domain; otherwise it goes to the argmin domain
// (ties to the lowest id).
Assignment assign_or_flag(const GaussStats& inst, const StatsBank& bank);

}  // namespace unitta::bdn
