#include "unitta/cofa.hpp"

#include <algorithm>
#include <cmath>

namespace unitta::cofa {

namespace {

std::vector<double> logits_of(const FeatureVector& z, const LinearClassifier& clf) {
    if (clf.classes() == 0 || z.size() != clf.features())
        throw InvalidConfig("classifier/feature dimension mismatch");
    std::vector<double> logits(clf.classes());
    for (std::size_t k = 0; k < clf.classes(); ++k) {
        double acc = clf.bias[k];
        const auto& w = clf.weights[k];
        for (std::size_t c = 0; c < z.size(); ++c) acc += w[c] * z[c];
        logits[k] = acc;
    }
    return logits;
}

}  // namespace

ProbVector softmax(const std::vector<double>& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    ProbVector p(logits.size());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(logits[k] - m);
        total += p[k];
    }
    for (auto& x : p) x /= total;
    return p;
}

ProbVector single_predict(const FeatureVector& z, const LinearClassifier& clf) {
    return softmax(logits_of(z, clf));
}

ProbVector cofa_predict(const FeatureVector& z, const FeatureVector& z_prev,
                        const LinearClassifier& clf) {
    if (z.size() != z_prev.size()) throw InvalidConfig("feature size mismatch");
    FeatureVector avg(z.size());
    for (std::size_t c = 0; c < z.size(); ++c) avg[c] = 0.5 * (z[c] + z_prev[c]);
    return softmax(logits_of(avg, clf));
}

ProbVector cofa_predict(const FeatureVector& z, const FeatureCache& cache,
                        const LinearClassifier& clf) {
    return cofa_predict(z, cache.previous(), clf);
}

std::size_t confidence_select_index(std::span<const ProbVector> candidates) {
    if (candidates.empty()) throw InvalidConfig("confidence_select needs candidates");
    std::size_t best = 0;
    double best_max = *std::max_element(candidates[0].begin(), candidates[0].end());
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double m = *std::max_element(candidates[i].begin(), candidates[i].end());
        if (m > best_max) {  // strict: ties stay with the earlier candidate
            best_max = m;
            best = i;
        }
    }
    return best;
}

ProbVector confidence_select(std::span<const ProbVector> candidates) {
    return candidates[confidence_select_index(candidates)];
}

ProbVector apply_filter(const ProbVector& cofa_p, const ProbVector& single_p) {
    const double mc = *std::max_element(cofa_p.begin(), cofa_p.end());
    const double ms = *std::max_element(single_p.begin(), single_p.end());
    return mc > ms ? cofa_p : single_p;
}

std::size_t argmax(const ProbVector& p) {
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

}  // namespace unitta::cofa
