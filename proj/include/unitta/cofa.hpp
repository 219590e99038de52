#pragma once

#include <optional>
#include <span>
#include <vector>

#include "unitta/errors.hpp"

namespace unitta::cofa {

using FeatureVector = std::vector<double>;
using ProbVector = std::vector<double>;

// Frozen linear classifier of the source model: logit_k = w_k . z + b_k.
struct LinearClassifier {
    std::vector<std::vector<double>> weights;  // one length-C vector per class
    std::vector<double> bias;

    std::size_t classes() const { return weights.size(); }
    std::size_t features() const { return weights.empty() ? 0 : weights.front().size(); }
};

ProbVector softmax(const std::vector<double>& logits);

// softmax(w^T z + b)
ProbVector single_predict(const FeatureVector& z, const LinearClassifier& clf);

// softmax(w^T (z + z_prev)/2 + b)
ProbVector cofa_predict(const FeatureVector& z, const FeatureVector& z_prev,
                        const LinearClassifier& clf);

// One-element feature memory; the module's only state.
class FeatureCache {
public:
    bool has() const { return prev_.has_value(); }
    const FeatureVector& previous() const {
        if (!prev_) throw MissingPrevious("no previous feature cached yet");
        return *prev_;
    }
    void store(FeatureVector z) { prev_ = std::move(z); }

private:
    std::optional<FeatureVector> prev_;
};

// Cache-aware form; throws MissingPrevious on the first sample of a stream.
ProbVector cofa_predict(const FeatureVector& z, const FeatureCache& cache,
                        const LinearClassifier& clf);

// Index of the candidate with the largest maximum entry; exact ties go to
// the earliest candidate. The engine's candidate order is: Forward-3 COFA,
// Forward-3 single, Forward-2 COFA, Forward-2 single.
std::size_t confidence_select_index(std::span<const ProbVector> candidates);
ProbVector confidence_select(std::span<const ProbVector> candidates);

// Pairwise confidence filter: the averaged-feature prediction wins only if
// its maximum strictly exceeds the single prediction's maximum. Equivalent
// to confidence_select({single, cofa}).
ProbVector apply_filter(const ProbVector& cofa_p, const ProbVector& single_p);

std::size_t argmax(const ProbVector& p);

}  // namespace unitta::cofa
