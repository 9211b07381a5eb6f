#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "cleanet/errors.hpp"
#include "cleanet/matrix.hpp"
#include "cleanet/series.hpp"

namespace cleanet {

enum class InjectionKind { spike, level_shift, drift, correlated_wobble };

inline bool is_salient(InjectionKind k) {
    return k == InjectionKind::spike || k == InjectionKind::level_shift;
}

struct InjectedSegment {
    std::size_t start = 0;
    std::size_t length = 0;
    InjectionKind kind = InjectionKind::spike;
    std::vector<std::size_t> metrics;
};

struct SynthConfig {
    std::size_t metrics = 8;
    std::size_t train_timestamps = 20000;
    std::size_t test_timestamps = 10000;
    double contamination_rate = 0.1; // fraction of train timestamps injected
    double test_anomaly_rate = 0.1;  // fraction of test timestamps labeled anomalous
    std::uint32_t seed = 0;

    // Salient injections: spikes and level shifts, in units of the metric's
    // clean training standard deviation.
    double salient_min_sigma = 3.0;
    double salient_max_sigma = 5.0;
    std::size_t spike_min_len = 1;
    std::size_t spike_max_len = 5;
    std::size_t shift_min_len = 50;
    std::size_t shift_max_len = 300;

    // Latent injections: slow drifts and smooth correlated wobble, capped at
    // 1.5 training standard deviations so they stay near the normal range.
    double latent_min_sigma = 0.8;
    double latent_max_sigma = 1.5;
    std::size_t drift_min_len = 200;
    std::size_t drift_max_len = 600;

    double salient_fraction = 0.5; // share of injected timestamps that are salient
};

struct SynthData {
    SeriesMatrix train;
    SeriesMatrix test;
    LabelVector test_labels;
    std::vector<std::uint8_t> train_mask;

    // Kept for inspection and tests: the uncontaminated signals and the
    // exact injected segments.
    Matrix train_clean;
    Matrix test_clean;
    std::vector<InjectedSegment> train_segments;
    std::vector<InjectedSegment> test_segments;
};

namespace detail {

/// Shared sinusoidal factors plus per-metric mixing, trend and AR(1) noise.
/// Cross-metric structure comes from the shared factors.
inline Matrix synth_base_signal(const SynthConfig& cfg, std::size_t total, std::mt19937& rng) {
    const std::size_t n_factors = 3;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<double> periods(n_factors), phases(n_factors);
    for (std::size_t f = 0; f < n_factors; ++f) {
        periods[f] = 40.0 + 260.0 * unit(rng);
        phases[f] = 2.0 * std::numbers::pi * unit(rng);
    }

    Matrix out(cfg.metrics, total);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t m = 0; m < cfg.metrics; ++m) {
        std::vector<double> mix(n_factors);
        for (double& v : mix) v = -1.0 + 2.0 * unit(rng);
        const double trend = (-0.3 + 0.6 * unit(rng)) / static_cast<double>(total);
        const double noise_scale = 0.02 + 0.06 * unit(rng);
        double ar = 0.0;
        for (std::size_t t = 0; t < total; ++t) {
            double v = 0.0;
            for (std::size_t f = 0; f < n_factors; ++f)
                v += mix[f] * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / periods[f] +
                                       phases[f]);
            ar = 0.7 * ar + noise_scale * gauss(rng);
            out(m, t) = v + trend * static_cast<double>(t) + ar;
        }
    }
    return out;
}

struct InjectionPlanner {
    std::vector<std::uint8_t>& occupied;
    std::mt19937& rng;

    /// Find a free slot of the given length; returns false after bounded
    /// retries so generation always terminates.
    bool place(std::size_t length, std::size_t region_begin, std::size_t region_end,
               std::size_t& start_out) {
        if (region_end - region_begin < length) return false;
        std::uniform_int_distribution<std::size_t> pos(region_begin, region_end - length);
        for (int attempt = 0; attempt < 64; ++attempt) {
            const std::size_t start = pos(rng);
            bool free = true;
            for (std::size_t t = start; t < start + length && free; ++t)
                if (occupied[t]) free = false;
            if (free) {
                for (std::size_t t = start; t < start + length; ++t) occupied[t] = 1;
                start_out = start;
                return true;
            }
        }
        return false;
    }
};

inline void apply_injection(Matrix& values, const InjectedSegment& seg, InjectionKind kind,
                            const std::vector<double>& sigma, const SynthConfig& cfg,
                            std::mt19937& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t m : seg.metrics) {
        const double direction = unit(rng) < 0.5 ? -1.0 : 1.0;
        switch (kind) {
            case InjectionKind::spike:
            case InjectionKind::level_shift: {
                const double mag = cfg.salient_min_sigma +
                                   (cfg.salient_max_sigma - cfg.salient_min_sigma) * unit(rng);
                const double delta = direction * mag * sigma[m];
                for (std::size_t t = seg.start; t < seg.start + seg.length; ++t)
                    values(m, t) += delta;
                break;
            }
            case InjectionKind::drift: {
                const double mag = cfg.latent_min_sigma +
                                   (cfg.latent_max_sigma - cfg.latent_min_sigma) * unit(rng);
                for (std::size_t t = 0; t < seg.length; ++t)
                    values(m, seg.start + t) += direction * mag * sigma[m] *
                                                static_cast<double>(t + 1) /
                                                static_cast<double>(seg.length);
                break;
            }
            case InjectionKind::correlated_wobble: {
                const double mag = cfg.latent_min_sigma +
                                   (cfg.latent_max_sigma - cfg.latent_min_sigma) * unit(rng);
                std::vector<double> wob(seg.length);
                double ar = 0.0, peak = 0.0;
                for (std::size_t t = 0; t < seg.length; ++t) {
                    ar = 0.95 * ar + gauss(rng);
                    wob[t] = ar;
                    peak = std::max(peak, std::abs(ar));
                }
                if (peak == 0.0) peak = 1.0;
                for (std::size_t t = 0; t < seg.length; ++t)
                    values(m, seg.start + t) += wob[t] / peak * mag * sigma[m];
                break;
            }
        }
    }
}

/// Inject segments into [region_begin, region_end) of `values` until the
/// timestamp budget is met (or placement keeps failing). Returns the
/// segments actually injected.
inline std::vector<InjectedSegment> inject_contamination(
    Matrix& values, const std::vector<double>& sigma, const SynthConfig& cfg, double rate,
    std::size_t region_begin, std::size_t region_end, std::mt19937& rng) {
    std::vector<InjectedSegment> segments;
    const std::size_t region = region_end - region_begin;
    const auto target = static_cast<std::size_t>(rate * static_cast<double>(region) + 0.5);
    if (target == 0) return segments;
    auto salient_budget =
        static_cast<std::size_t>(cfg.salient_fraction * static_cast<double>(target) + 0.5);
    std::size_t latent_budget = target - salient_budget;

    std::vector<std::uint8_t> occupied(values.cols, 0);
    InjectionPlanner planner{occupied, rng};
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto pick_len = [&rng](std::size_t lo, std::size_t hi, std::size_t budget) {
        std::uniform_int_distribution<std::size_t> len(lo, hi);
        return std::min(std::max<std::size_t>(len(rng), 1), std::max<std::size_t>(budget, 1));
    };
    auto pick_metrics = [&](std::size_t d) {
        std::uniform_int_distribution<std::size_t> cnt(1, std::max<std::size_t>(1, d / 3));
        std::size_t how_many = cnt(rng);
        std::vector<std::size_t> all(d);
        for (std::size_t i = 0; i < d; ++i) all[i] = i;
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(how_many);
        std::sort(all.begin(), all.end());
        return all;
    };

    int stale = 0;
    while ((salient_budget > 0 || latent_budget > 0) && stale < 256) {
        const bool salient = salient_budget > 0 && (latent_budget == 0 || unit(rng) < 0.5);
        InjectionKind kind;
        std::size_t length;
        if (salient) {
            if (unit(rng) < 0.5) {
                kind = InjectionKind::spike;
                length = pick_len(cfg.spike_min_len, cfg.spike_max_len, salient_budget);
            } else {
                kind = InjectionKind::level_shift;
                length = pick_len(cfg.shift_min_len, cfg.shift_max_len, salient_budget);
            }
        } else {
            kind = unit(rng) < 0.5 ? InjectionKind::drift : InjectionKind::correlated_wobble;
            length = pick_len(cfg.drift_min_len, cfg.drift_max_len, latent_budget);
        }

        InjectedSegment seg;
        seg.kind = kind;
        seg.length = length;
        if (!planner.place(length, region_begin, region_end, seg.start)) {
            ++stale;
            continue;
        }
        seg.metrics = pick_metrics(cfg.metrics);
        apply_injection(values, seg, kind, sigma, cfg, rng);
        if (salient)
            salient_budget -= std::min(salient_budget, length);
        else
            latent_budget -= std::min(latent_budget, length);
        segments.push_back(std::move(seg));
        stale = 0;
    }
    return segments;
}

} // namespace detail

/// Generate a contaminated training series and a labeled test series from
/// one clean base signal. All randomness flows from config.seed, so outputs
/// are bit-identical across runs.
inline SynthData generate(const SynthConfig& cfg) {
    if (cfg.metrics == 0 || cfg.train_timestamps == 0 || cfg.test_timestamps == 0)
        throw config_error("synthetic generator needs positive dimensions");
    if (cfg.contamination_rate < 0.0 || cfg.contamination_rate >= 0.5)
        throw config_error("contamination rate must lie in [0, 0.5)");
    if (cfg.test_anomaly_rate < 0.0 || cfg.test_anomaly_rate >= 0.5)
        throw config_error("test anomaly rate must lie in [0, 0.5)");

    std::mt19937 rng(cfg.seed);
    const std::size_t total = cfg.train_timestamps + cfg.test_timestamps;
    const Matrix clean = detail::synth_base_signal(cfg, total, rng);

    // Per-metric clean training sigma; injection magnitudes are expressed in
    // these units.
    std::vector<double> sigma(cfg.metrics);
    for (std::size_t m = 0; m < cfg.metrics; ++m) {
        double mean = 0.0;
        for (std::size_t t = 0; t < cfg.train_timestamps; ++t) mean += clean(m, t);
        mean /= static_cast<double>(cfg.train_timestamps);
        double var = 0.0;
        for (std::size_t t = 0; t < cfg.train_timestamps; ++t) {
            const double diff = clean(m, t) - mean;
            var += diff * diff;
        }
        sigma[m] = std::sqrt(var / static_cast<double>(cfg.train_timestamps));
        if (sigma[m] == 0.0) sigma[m] = 1.0;
    }

    Matrix contaminated = clean;
    const std::vector<InjectedSegment> train_segments = detail::inject_contamination(
        contaminated, sigma, cfg, cfg.contamination_rate, 0, cfg.train_timestamps, rng);
    const std::vector<InjectedSegment> test_segments = detail::inject_contamination(
        contaminated, sigma, cfg, cfg.test_anomaly_rate, cfg.train_timestamps, total, rng);

    SynthData out;
    out.train.values = Matrix(cfg.metrics, cfg.train_timestamps);
    out.test.values = Matrix(cfg.metrics, cfg.test_timestamps);
    out.train_clean = Matrix(cfg.metrics, cfg.train_timestamps);
    out.test_clean = Matrix(cfg.metrics, cfg.test_timestamps);
    for (std::size_t m = 0; m < cfg.metrics; ++m) {
        for (std::size_t t = 0; t < cfg.train_timestamps; ++t) {
            out.train.values(m, t) = contaminated(m, t);
            out.train_clean(m, t) = clean(m, t);
        }
        for (std::size_t t = 0; t < cfg.test_timestamps; ++t) {
            out.test.values(m, t) = contaminated(m, cfg.train_timestamps + t);
            out.test_clean(m, t) = clean(m, cfg.train_timestamps + t);
        }
    }
    for (std::size_t m = 0; m < cfg.metrics; ++m) {
        out.train.metric_names.push_back("m" + std::to_string(m));
        out.test.metric_names.push_back("m" + std::to_string(m));
    }
    out.train.entity_id = "synthetic";
    out.test.entity_id = "synthetic";

    out.train_mask.assign(cfg.train_timestamps, 0);
    for (const InjectedSegment& seg : train_segments)
        for (std::size_t t = seg.start; t < seg.start + seg.length; ++t) out.train_mask[t] = 1;

    out.test_labels.labels.assign(cfg.test_timestamps, 0);
    out.test_segments.reserve(test_segments.size());
    for (InjectedSegment seg : test_segments) {
        seg.start -= cfg.train_timestamps;
        for (std::size_t t = seg.start; t < seg.start + seg.length; ++t)
            out.test_labels.labels[t] = 1;
        out.test_segments.push_back(std::move(seg));
    }
    out.train_segments = train_segments;
    return out;
}

} // namespace cleanet
