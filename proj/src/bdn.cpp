#include "unitta/bdn.hpp"

#include <cmath>

#include <json.hpp>

namespace unitta::bdn {

GaussStats::GaussStats(std::vector<double> m, std::vector<double> v)
    : mu(std::move(m)), var(std::move(v)) {
    if (mu.size() != var.size()) throw InvalidConfig("mu/var channel count mismatch");
}

GaussStats instance_stats(const FeatureMap& f) {
    if (f.channels == 0 || f.spatial() == 0) throw InvalidConfig("empty feature map");
    GaussStats s;
    s.mu.resize(f.channels);
    s.var.resize(f.channels);
    const double inv = 1.0 / static_cast<double>(f.spatial());
    for (std::size_t c = 0; c < f.channels; ++c) {
        double sum = 0.0;
        for (std::size_t h = 0; h < f.height; ++h)
            for (std::size_t w = 0; w < f.width; ++w) sum += f.at(c, h, w);
        const double mu = sum * inv;
        double acc = 0.0;
        for (std::size_t h = 0; h < f.height; ++h)
            for (std::size_t w = 0; w < f.width; ++w) {
                const double d = f.at(c, h, w) - mu;
                acc += d * d;
            }
        s.mu[c] = mu;
        s.var[c] = acc * inv;
    }
    return s;
}

double gauss_kl(const GaussStats& a, const GaussStats& b) {
    if (a.channels() != b.channels()) throw InvalidConfig("KL channel count mismatch");
    double total = 0.0;
    for (std::size_t c = 0; c < a.channels(); ++c) {
        const double va = a.var[c] + kEps;
        const double vb = b.var[c] + kEps;
        const double dm = a.mu[c] - b.mu[c];
        total += 0.5 * (std::log(vb / va) + (va + dm * dm) / vb - 1.0);
    }
    return total;
}

double sym_kl(const GaussStats& a, const GaussStats& b) {
    return gauss_kl(a, b) + gauss_kl(b, a);
}

AffineParams AffineParams::identity(std::size_t channels) {
    AffineParams p;
    p.scale.assign(channels, 1.0);
    p.shift.assign(channels, 0.0);
    return p;
}

FeatureMap normalize(const FeatureMap& f, const GaussStats& stats, const AffineParams& affine) {
    if (stats.channels() != f.channels || affine.scale.size() != f.channels)
        throw InvalidConfig("normalize channel count mismatch");
    FeatureMap out(f.channels, f.height, f.width);
    for (std::size_t c = 0; c < f.channels; ++c) {
        const double inv_std = 1.0 / std::sqrt(stats.var[c] + kEps);
        const double scale = affine.scale[c];
        const double shift = affine.shift[c];
        const double mu = stats.mu[c];
        for (std::size_t h = 0; h < f.height; ++h)
            for (std::size_t w = 0; w < f.width; ++w)
                out.at(c, h, w) = (f.at(c, h, w) - mu) * inv_std * scale + shift;
    }
    return out;
}

StatsBank::StatsBank(GaussStats anchor, std::size_t n_classes, double eta)
    : anchor_(std::move(anchor)), n_classes_(n_classes), eta_(eta) {
    if (n_classes_ == 0) throw InvalidConfig("bank needs at least one class");
    if (eta_ <= 0.0 || eta_ >= 1.0) throw InvalidConfig("eta must lie in (0, 1)");
    domains_.push_back({std::vector<GaussStats>(n_classes_, anchor_), anchor_});
    assigned_.push_back(0);
}

const GaussStats& StatsBank::cell(std::size_t d, std::size_t k) const {
    return domains_.at(d).cells.at(k);
}

const GaussStats& StatsBank::aggregate(std::size_t d) const { return domains_.at(d).aggregate; }

std::size_t StatsBank::expand() {
    domains_.push_back({std::vector<GaussStats>(n_classes_, anchor_), anchor_});
    assigned_.push_back(0);
    return domains_.size() - 1;
}

void StatsBank::ema_update(std::size_t d, std::size_t k, const GaussStats& inst) {
    if (d >= domains_.size() || k >= n_classes_)
        throw InvalidConfig("ema_update: cell index out of range");
    GaussStats& cell = domains_[d].cells[k];
    if (inst.channels() != cell.channels()) throw InvalidConfig("ema_update: channel mismatch");
    for (std::size_t c = 0; c < cell.channels(); ++c) {
        const double u = cell.mu[c];  // pre-update mean
        const double fbar = inst.mu[c];
        const double d_mean = fbar - u;
        // avg over HxW of (F - u)^2, recovered from the instance statistics
        const double avg_sq = inst.var[c] + d_mean * d_mean;
        cell.mu[c] = (1.0 - eta_) * u + eta_ * fbar;
        double v = (1.0 - eta_) * cell.var[c] + eta_ * avg_sq - eta_ * eta_ * d_mean * d_mean;
        if (v < 0.0) {
            v = 0.0;
            ++floor_events_;
        }
        cell.var[c] = v;
    }
    refresh_domain_stats(d);
}

void StatsBank::ema_update(std::size_t d, std::size_t k, const FeatureMap& f) {
    ema_update(d, k, instance_stats(f));
}

void StatsBank::refresh_domain_stats(std::size_t d) {
    Domain& dom = domains_.at(d);
    const std::size_t ch = anchor_.channels();
    const double inv_k = 1.0 / static_cast<double>(n_classes_);
    GaussStats agg;
    agg.mu.assign(ch, 0.0);
    agg.var.assign(ch, 0.0);
    for (std::size_t c = 0; c < ch; ++c) {
        double m = 0.0;
        for (const auto& cell : dom.cells) m += cell.mu[c];
        m *= inv_k;
        double v = 0.0;
        for (const auto& cell : dom.cells) {
            const double dm = cell.mu[c] - m;
            v += cell.var[c] + dm * dm;
        }
        agg.mu[c] = m;
        agg.var[c] = v * inv_k;
    }
    dom.aggregate = std::move(agg);
}

void StatsBank::record_assignment(std::size_t d) { assigned_.at(d)++; }

std::size_t StatsBank::active_domains(std::size_t min_samples) const {
    std::size_t n = 0;
    for (std::size_t c : assigned_)
        if (c > min_samples) ++n;
    return n;
}

std::string StatsBank::snapshot_json() const {
    nlohmann::json j;
    j["domains"] = domains();
    j["classes"] = n_classes_;
    j["eta"] = eta_;
    j["floor_events"] = floor_events_;
    j["assignment_histogram"] = assigned_;
    j["anchor"] = {{"mu", anchor_.mu}, {"var", anchor_.var}};
    nlohmann::json doms = nlohmann::json::array();
    for (const auto& d : domains_) {
        nlohmann::json jd;
        jd["aggregate"] = {{"mu", d.aggregate.mu}, {"var", d.aggregate.var}};
        nlohmann::json cells = nlohmann::json::array();
        for (const auto& cell : d.cells) cells.push_back({{"mu", cell.mu}, {"var", cell.var}});
        jd["cells"] = std::move(cells);
        doms.push_back(std::move(jd));
    }
    j["domain_stats"] = std::move(doms);
    return j.dump(2);
}

Assignment assign_or_flag(const GaussStats& inst, const StatsBank& bank) {
    const double to_anchor = sym_kl(inst, bank.anchor());
    double best = 0.0;
    std::size_t best_d = 0;
    for (std::size_t d = 0; d < bank.domains(); ++d) {
        const double kl = sym_kl(inst, bank.aggregate(d));
        if (d == 0 || kl < best) {
            best = kl;
            best_d = d;
        }
    }
    if (best > to_anchor) return {true, 0};
    return {false, best_d};
}

}  // namespace unitta::bdn
