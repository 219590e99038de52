#pragma once

#include <cstdint>
#include <vector>

#include "unitta/bdn.hpp"

namespace unitta::engine {

// Synthetic multi-domain, multi-class input generator. World domain 0 is
// the pristine source domain (zero offset, unit scale) used for fitting;
// test streams map their domain ids onto world domains 1..test_domains.
struct WorldConfig {
    std::size_t test_domains = 3;
    std::size_t classes = 6;
    std::size_t channels = 8;
    std::size_t height = 4;
    std::size_t width = 4;
    double class_separation = 4.0;  // norm of each class direction
    double noise = 0.5;             // per-channel spatial noise
    double ambiguous_fraction = 0.1;  // two-class superposition samples
    double domain_shift = 2.0;      // |per-channel offset| of test domains
    double scale_jitter = 0.25;     // lognormal sigma of per-channel scales
    std::uint64_t seed = 1;
};

class SyntheticWorld {
public:
    explicit SyntheticWorld(const WorldConfig& cfg);

    // Deterministic in (seed, world_domain, cls, sample_id); call order
    // never matters.
    bdn::FeatureMap sample(std::size_t world_domain, std::size_t cls,
                           std::size_t sample_id) const;

    std::size_t domains() const { return cfg_.test_domains + 1; }
    std::size_t classes() const { return cfg_.classes; }
    const WorldConfig& config() const { return cfg_; }
    const std::vector<double>& class_mean(std::size_t k) const { return class_means_[k]; }

private:
    WorldConfig cfg_;
    std::vector<std::vector<double>> class_means_;
    std::vector<std::vector<double>> offsets_;  // per world domain
    std::vector<std::vector<double>> scales_;   // per world domain
};

}  // namespace unitta::engine
