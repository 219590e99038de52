#include "unitta/model.hpp"

#include <cmath>

#include "unitta/rng.hpp"

namespace unitta::engine {

bdn::FeatureMap PretrainedModel::mix(std::size_t layer, const bdn::FeatureMap& x) const {
    const auto& m = mixing.at(layer);
    bdn::FeatureMap out(channels, x.height, x.width);
    for (std::size_t h = 0; h < x.height; ++h)
        for (std::size_t w = 0; w < x.width; ++w)
            for (std::size_t i = 0; i < channels; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < channels; ++j)
                    acc += m[i * channels + j] * x.at(j, h, w);
                out.at(i, h, w) = acc;
            }
    return out;
}

std::uint64_t PretrainedModel::param_hash() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix_in = [&h](const std::vector<double>& v) {
        h = fnv1a64(v.data(), v.size() * sizeof(double), h);
    };
    for (const auto& m : mixing) mix_in(m);
    for (const auto& a : anchors) {
        mix_in(a.mu);
        mix_in(a.var);
    }
    for (const auto& a : affine) {
        mix_in(a.scale);
        mix_in(a.shift);
    }
    for (const auto& w : classifier.weights) mix_in(w);
    mix_in(classifier.bias);
    return h;
}

void clip_nonnegative(bdn::FeatureMap& f) {
    for (auto& v : f.values)
        if (v < 0.0) v = 0.0;
}

cofa::FeatureVector pool(const bdn::FeatureMap& f) {
    cofa::FeatureVector z(f.channels, 0.0);
    const double inv = 1.0 / static_cast<double>(f.spatial());
    for (std::size_t c = 0; c < f.channels; ++c) {
        double acc = 0.0;
        for (std::size_t h = 0; h < f.height; ++h)
            for (std::size_t w = 0; w < f.width; ++w) acc += f.at(c, h, w);
        z[c] = acc * inv;
    }
    return z;
}

namespace {

// Random orthonormal C x C matrix (Gram-Schmidt on gaussian rows).
std::vector<double> random_orthonormal(std::size_t c, Rng& rng) {
    std::vector<std::vector<double>> rows(c, std::vector<double>(c));
    for (auto& row : rows)
        for (auto& v : row) v = rng.gaussian();
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < c; ++k) dot += rows[i][k] * rows[j][k];
            for (std::size_t k = 0; k < c; ++k) rows[i][k] -= dot * rows[j][k];
        }
        double norm = 0.0;
        for (double v : rows[i]) norm += v * v;
        norm = std::sqrt(norm);
        for (auto& v : rows[i]) v /= norm;
    }
    std::vector<double> flat(c * c);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j) flat[i * c + j] = rows[i][j];
    return flat;
}

}  // namespace

PretrainedModel fit_source(const SyntheticWorld& world, const ModelConfig& cfg) {
    const std::size_t K = world.classes();
    const std::size_t C = world.config().channels;
    if (cfg.layers < 1) throw InvalidConfig("model needs at least one layer");
    if (cfg.source_samples < 10 * K)
        throw InsufficientData("source fitting needs at least 10 samples per class, got " +
                               std::to_string(cfg.source_samples) + " for " +
                               std::to_string(K) + " classes");

    PretrainedModel m;
    m.layers = cfg.layers;
    m.channels = C;
    Rng mix_rng(derive_seed(cfg.seed, 0x3141ULL));
    for (std::size_t l = 0; l < cfg.layers; ++l)
        m.mixing.push_back(random_orthonormal(C, mix_rng));
    for (std::size_t l = 0; l < cfg.layers; ++l) m.affine.push_back(bdn::AffineParams::identity(C));

    auto source_input = [&](std::size_t i) {
        return world.sample(0, i % K, i / K);
    };

    // Anchor statistics are estimated slot by slot: statistics of slot l are
    // accumulated over all source samples before any sample is pushed past
    // slot l with those statistics.
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        std::vector<double> sum(C, 0.0), sumsq(C, 0.0);
        std::size_t count = 0;
        for (std::size_t i = 0; i < cfg.source_samples; ++i) {
            bdn::FeatureMap x = source_input(i);
            for (std::size_t prev = 0; prev < l; ++prev) {
                x = m.mix(prev, x);
                x = bdn::normalize(x, m.anchors[prev], m.affine[prev]);
                clip_nonnegative(x);
            }
            x = m.mix(l, x);
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t h = 0; h < x.height; ++h)
                    for (std::size_t w = 0; w < x.width; ++w) {
                        const double v = x.at(c, h, w);
                        sum[c] += v;
                        sumsq[c] += v * v;
                    }
            count += x.spatial();
        }
        bdn::GaussStats anchor;
        anchor.mu.resize(C);
        anchor.var.resize(C);
        for (std::size_t c = 0; c < C; ++c) {
            anchor.mu[c] = sum[c] / count;
            anchor.var[c] = std::max(0.0, sumsq[c] / count - anchor.mu[c] * anchor.mu[c]);
        }
        m.anchors.push_back(std::move(anchor));
    }

    // Nearest-class-mean classifier on pooled, fully normalized features.
    std::vector<cofa::FeatureVector> class_sum(K, cofa::FeatureVector(C, 0.0));
    std::vector<std::size_t> class_count(K, 0);
    for (std::size_t i = 0; i < cfg.source_samples; ++i) {
        bdn::FeatureMap x = source_input(i);
        for (std::size_t l = 0; l < cfg.layers; ++l) {
            x = m.mix(l, x);
            x = bdn::normalize(x, m.anchors[l], m.affine[l]);
            clip_nonnegative(x);
        }
        const auto z = pool(x);
        const std::size_t k = i % K;
        for (std::size_t c = 0; c < C; ++c) class_sum[k][c] += z[c];
        class_count[k]++;
    }
    for (std::size_t k = 0; k < K; ++k) {
        cofa::FeatureVector mean(C);
        double sq = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            mean[c] = class_sum[k][c] / static_cast<double>(class_count[k]);
            sq += mean[c] * mean[c];
        }
        m.classifier.weights.push_back(std::move(mean));
        m.classifier.bias.push_back(-0.5 * sq);
    }
    return m;
}

}  // namespace unitta::engine
