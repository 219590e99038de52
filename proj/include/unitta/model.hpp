#pragma once

#include <cstdint>
#include <vector>

#include "unitta/bdn.hpp"
#include "unitta/cofa.hpp"
#include "unitta/world.hpp"

namespace unitta::engine {

struct ModelConfig {
    std::size_t layers = 2;
    std::size_t source_samples = 1200;
    std::uint64_t seed = 7;
};

// Frozen source model: L random orthonormal channel-mixing layers, each
// followed by a normalization slot and a ReLU clip, with per-slot anchor
// statistics estimated on source-domain data and a nearest-class-mean
// classifier on pooled features. Nothing here changes after fitting.
struct PretrainedModel {
    std::size_t layers = 0;
    std::size_t channels = 0;
    std::vector<std::vector<double>> mixing;   // per layer, C x C row-major
    std::vector<bdn::GaussStats> anchors;      // per slot, pre-normalization
    std::vector<bdn::AffineParams> affine;     // per slot, frozen
    cofa::LinearClassifier classifier;

    // Channel mixing of layer l applied at every spatial position.
    bdn::FeatureMap mix(std::size_t layer, const bdn::FeatureMap& x) const;

    // FNV over every parameter's bit pattern; used to assert frozenness.
    std::uint64_t param_hash() const;
};

// Estimates anchors slot by slot on world domain 0 and fits the classifier
// on the fully normalized pooled features. Throws InsufficientData when
// source_samples < 10 * classes.
PretrainedModel fit_source(const SyntheticWorld& world, const ModelConfig& cfg);

// ReLU clip, in place.
void clip_nonnegative(bdn::FeatureMap& f);

// Spatial average per channel.
cofa::FeatureVector pool(const bdn::FeatureMap& f);

}  // namespace unitta::engine
