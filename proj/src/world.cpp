#include "unitta/world.hpp"

#include <cmath>

#include "unitta/rng.hpp"

namespace unitta::engine {

SyntheticWorld::SyntheticWorld(const WorldConfig& cfg) : cfg_(cfg) {
    if (cfg_.classes < 2) throw InvalidConfig("world needs at least 2 classes");
    if (cfg_.test_domains < 1) throw InvalidConfig("world needs at least 1 test domain");
    if (cfg_.channels < cfg_.classes)
        throw InvalidConfig("orthogonal class directions need channels >= classes");

    // Orthogonalized class directions of equal norm. Superposition samples
    // of two classes then sit equidistant from both means, which keeps
    // their classifier confidence genuinely low.
    Rng crng(derive_seed(cfg_.seed, 0xC1A55ULL));
    for (std::size_t k = 0; k < cfg_.classes; ++k) {
        std::vector<double> m(cfg_.channels);
        for (auto& v : m) v = crng.gaussian();
        for (const auto& u : class_means_) {
            double dot = 0.0, uu = 0.0;
            for (std::size_t c = 0; c < cfg_.channels; ++c) {
                dot += m[c] * u[c];
                uu += u[c] * u[c];
            }
            for (std::size_t c = 0; c < cfg_.channels; ++c) m[c] -= dot / uu * u[c];
        }
        double norm = 0.0;
        for (double v : m) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-9) throw InvalidConfig("degenerate class direction");
        for (auto& v : m) v *= cfg_.class_separation / norm;
        class_means_.push_back(std::move(m));
    }

    // Domain 0 = source; test domain d gets +-domain_shift per channel with
    // the d-th Hadamard sign pattern, so any two test domains disagree on
    // exactly half the channels and all pairwise offset distances are equal
    // (random signs would let two domains collide with sizable probability).
    // Scales are lognormal per channel.
    offsets_.assign(domains(), std::vector<double>(cfg_.channels, 0.0));
    scales_.assign(domains(), std::vector<double>(cfg_.channels, 1.0));
    std::size_t pow2 = 1;
    while (pow2 < std::max(cfg_.channels, cfg_.test_domains + 1)) pow2 <<= 1;
    Rng drng(derive_seed(cfg_.seed, 0xD0A1ULL));
    for (std::size_t d = 1; d < domains(); ++d)
        for (std::size_t c = 0; c < cfg_.channels; ++c) {
            const std::size_t bits = d & (c % pow2);
            const bool parity = __builtin_popcountll(bits) & 1;
            offsets_[d][c] = (parity ? -1.0 : 1.0) * cfg_.domain_shift;
            scales_[d][c] = std::exp(cfg_.scale_jitter * drng.gaussian());
        }
}

bdn::FeatureMap SyntheticWorld::sample(std::size_t world_domain, std::size_t cls,
                                       std::size_t sample_id) const {
    if (world_domain >= domains() || cls >= cfg_.classes)
        throw ConfigMismatch("sample index outside the world's domain/class range");

    const std::uint64_t tag =
        splitmix64((world_domain << 40) ^ (static_cast<std::uint64_t>(cls) << 20) ^ sample_id);
    Rng rng(derive_seed(cfg_.seed, tag));

    std::vector<double> signal = class_means_[cls];
    if (rng.uniform01() < cfg_.ambiguous_fraction) {
        const std::size_t other = (cls + 1 + rng.index(cfg_.classes - 1)) % cfg_.classes;
        for (std::size_t c = 0; c < cfg_.channels; ++c) signal[c] += class_means_[other][c];
    }

    bdn::FeatureMap f(cfg_.channels, cfg_.height, cfg_.width);
    const auto& off = offsets_[world_domain];
    const auto& sc = scales_[world_domain];
    for (std::size_t c = 0; c < cfg_.channels; ++c)
        for (std::size_t h = 0; h < cfg_.height; ++h)
            for (std::size_t w = 0; w < cfg_.width; ++w)
                f.at(c, h, w) = sc[c] * (signal[c] + cfg_.noise * rng.gaussian()) + off[c];
    return f;
}

}  // namespace unitta::engine
