#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "cleanet/clustering.hpp"
#include "cleanet/contamination.hpp"
#include "cleanet/contrastive.hpp"
#include "cleanet/errors.hpp"
#include "cleanet/model.hpp"
#include "cleanet/nn.hpp"
#include "cleanet/series.hpp"

#include <json.hpp>

namespace cleanet {

enum class ContrastiveMode { off, cluster, simclr };

inline std::string to_string(ContrastiveMode m) {
    switch (m) {
        case ContrastiveMode::off: return "off";
        case ContrastiveMode::cluster: return "cluster";
        case ContrastiveMode::simclr: return "simclr";
    }
    return "off";
}

inline ContrastiveMode contrastive_mode_from_string(const std::string& s) {
    if (s == "off") return ContrastiveMode::off;
    if (s == "on" || s == "cluster") return ContrastiveMode::cluster;
    if (s == "simclr") return ContrastiveMode::simclr;
    throw config_error("unknown contrastive mode '" + s + "' (expected on, off or simclr)");
}

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double lambda = 0.1;                 // contrastive weight in the joint loss
    bool awrl = true;                    // false = uniform reconstruction weights
    ContrastiveMode contrastive = ContrastiveMode::cluster;
    bool infonce = false;                // conventional-denominator toggle, off by default
    double temperature = 0.1;
    std::size_t min_cluster_size = 3;    // num_s
    double simclr_sigma = 0.05;
    std::size_t knn_k = 10;
    double cont_alpha = 10.0;
    std::optional<double> cont_tau;      // unset = per-epoch median + 1 std
    OptMethod optimizer = OptMethod::adam;
    double learning_rate = 1e-3;
    std::uint32_t seed = 0;
    std::size_t patience = 5;            // early stop on validation error
    std::size_t warmup_epochs = 1;       // uniform weights, contrastive off

    /// The plain-autoencoder arm: no reweighting, no contrastive term.
    void set_baseline() {
        awrl = false;
        contrastive = ContrastiveMode::off;
        lambda = 0.0;
    }

    bool is_baseline() const {
        return !awrl && (lambda == 0.0 || contrastive == ContrastiveMode::off);
    }

    void validate() const {
        if (epochs == 0) throw config_error("epochs must be positive");
        if (batch_size == 0) throw config_error("batch size must be positive");
        if (lambda < 0.0) throw config_error("lambda must be non-negative");
        if (temperature <= 0.0) throw config_error("temperature must be positive");
        if (min_cluster_size < 2) throw config_error("num_s must be at least 2");
        if (cont_alpha <= 0.0) throw config_error("contamination alpha must be positive");
        if (learning_rate <= 0.0) throw config_error("learning rate must be positive");
    }
};

struct EpochStats {
    std::size_t epoch = 0;       // 1-based
    double awrl_term = 0.0;      // mean per-batch weighted reconstruction loss
    double contrastive_term = 0.0;
    double total = 0.0;          // awrl_term + lambda * contrastive_term, exactly
    double val_error = 0.0;      // mean per-entry squared validation residual
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0;  // 1-based epoch whose parameters were kept
    double best_val_error = 0.0;
    bool aborted = false;
    std::string abort_reason;
    std::size_t empty_pair_batches = 0;

    // State at the returned parameters, for CSV inspection dumps.
    std::optional<ContaminationProfile> final_profile;
    std::optional<ClusterPartition> final_partition;

    nlohmann::json epoch_json(const EpochStats& e) const {
        return nlohmann::json{{"epoch", e.epoch},
                              {"awrl", e.awrl_term},
                              {"contrastive", e.contrastive_term},
                              {"total", e.total},
                              {"val_error", e.val_error},
                              {"seconds", e.seconds}};
    }
};

/// One JSON object per epoch plus a trailing summary line. Wall-clock fields
/// can be suppressed for byte-stable output.
inline void write_report_jsonl(const TrainReport& report, std::ostream& out,
                               bool include_timing = true) {
    for (const EpochStats& e : report.epochs) {
        nlohmann::json j = report.epoch_json(e);
        if (!include_timing) j.erase("seconds");
        out << j.dump() << '\n';
    }
    nlohmann::json summary{{"best_epoch", report.best_epoch},
                           {"best_val_error", report.best_val_error},
                           {"aborted", report.aborted},
                           {"empty_pair_batches", report.empty_pair_batches}};
    if (report.aborted) summary["abort_reason"] = report.abort_reason;
    out << summary.dump() << '\n';
}

namespace detail {

inline Matrix encode_all(ReconstructionModel& model, const std::vector<Matrix>& windows) {
    Matrix latents(windows.size(), model.latent_dim());
    constexpr std::size_t kChunk = 256;
    for (std::size_t begin = 0; begin < windows.size(); begin += kChunk) {
        const std::size_t end = std::min(begin + kChunk, windows.size());
        const std::vector<Matrix> chunk(windows.begin() + begin, windows.begin() + end);
        const BatchOutput out = model.forward_batch(chunk, false);
        for (std::size_t i = 0; i < chunk.size(); ++i)
            for (std::size_t j = 0; j < latents.cols; ++j)
                latents(begin + i, j) = out.latents(i, j);
    }
    return latents;
}

inline double validation_error(ReconstructionModel& model, const std::vector<Matrix>& windows) {
    if (windows.empty()) return 0.0;
    double acc = 0.0;
    constexpr std::size_t kChunk = 256;
    for (std::size_t begin = 0; begin < windows.size(); begin += kChunk) {
        const std::size_t end = std::min(begin + kChunk, windows.size());
        const std::vector<Matrix> chunk(windows.begin() + begin, windows.begin() + end);
        const BatchOutput out = model.forward_batch(chunk, false);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            double err = 0.0;
            for (std::size_t k = 0; k < chunk[i].size(); ++k) {
                const double diff = chunk[i].data[k] - out.recons[i].data[k];
                err += diff * diff;
            }
            acc += err / static_cast<double>(chunk[i].size());
        }
    }
    return acc / static_cast<double>(windows.size());
}

} // namespace detail

/// Joint optimization of the weighted reconstruction loss and the
/// cluster-guided contrastive loss over any ReconstructionModel. Per epoch:
/// encode all training windows, refresh the contamination profile and
/// cluster partition (after warm-up), then run minibatch steps of
/// L = L_rec + lambda * L_contra. Early-stops on validation error and
/// restores the best epoch's parameters before returning.
///
/// The caller owns model initialization; `rng` drives only the epoch
/// shuffles (and SimCLR jitter when enabled), so a fixed seed gives an
/// identical trajectory.
inline TrainReport train_loop(ReconstructionModel& model, const WindowBatch& train,
                              const WindowBatch& val, const TrainConfig& cfg,
                              std::mt19937& rng) {
    cfg.validate();
    const std::size_t n = train.size();
    if (n == 0) throw config_error("no training windows");
    if (n < cfg.batch_size)
        throw config_error("training windows (" + std::to_string(n) +
                           ") fewer than batch size (" + std::to_string(cfg.batch_size) + ")");

    Optimizer opt(cfg.optimizer, cfg.learning_rate);
    opt.register_blocks(model.param_blocks());

    const bool wants_profile = cfg.awrl || cfg.contrastive == ContrastiveMode::cluster;
    const bool wants_clusters = cfg.contrastive == ContrastiveMode::cluster && cfg.lambda > 0.0;

    TrainReport report;
    std::vector<double> best_params = model.save_parameters();
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    std::size_t bad_epochs = 0;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    const std::size_t d = model.input_metrics();
    const std::size_t w = model.input_width();

    for (std::size_t epoch = 1; epoch <= cfg.epochs && !report.aborted; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), rng);

        const bool past_warmup = epoch > cfg.warmup_epochs;
        std::optional<ContaminationProfile> profile;
        std::optional<ClusterPartition> partition;
        if (past_warmup && wants_profile && n >= 2) {
            const Matrix latents = detail::encode_all(model, train.windows);
            // k is capped at n-1 so small runs stay valid.
            const std::size_t k = std::min(cfg.knn_k, n - 1);
            profile = compute_contamination_profile(latents, k, cfg.cont_alpha, cfg.cont_tau);
            if (wants_clusters)
                partition = annotate_contamination(finch_partition(latents), *profile);
        }

        double epoch_awrl = 0.0, epoch_contra = 0.0;
        std::size_t steps = 0;

        for (std::size_t begin = 0; begin < n && !report.aborted; begin += cfg.batch_size) {
            const std::size_t end = std::min(begin + cfg.batch_size, n);
            const std::size_t bsz = end - begin;
            std::vector<std::size_t> batch_idx(order.begin() + begin, order.begin() + end);
            std::vector<Matrix> windows;
            windows.reserve(bsz);
            for (std::size_t idx : batch_idx) windows.push_back(train.windows[idx]);

            const bool simclr_step = cfg.contrastive == ContrastiveMode::simclr &&
                                     cfg.lambda > 0.0 && past_warmup;
            if (simclr_step) {
                std::vector<Matrix> augmented = jitter_windows(windows, cfg.simclr_sigma, rng);
                windows.insert(windows.end(), std::make_move_iterator(augmented.begin()),
                               std::make_move_iterator(augmented.end()));
            }

            const BatchOutput out = model.forward_batch(windows, true);

            // Weighted reconstruction loss, mean over the real (non-augmented)
            // windows; contaminated windows contribute proportionally less.
            double awrl_batch = 0.0;
            std::vector<Matrix> recon_grads(windows.size());
            for (std::size_t i = 0; i < windows.size(); ++i)
                recon_grads[i] = Matrix(d, w);
            for (std::size_t i = 0; i < bsz; ++i) {
                const double weight =
                    (cfg.awrl && profile) ? profile->weight[batch_idx[i]] : 1.0;
                const Matrix& x = train.windows[batch_idx[i]];
                const Matrix& y = out.recons[i];
                double err = 0.0;
                for (std::size_t k = 0; k < x.size(); ++k) {
                    const double diff = x.data[k] - y.data[k];
                    err += diff * diff;
                    recon_grads[i].data[k] =
                        2.0 * weight * (y.data[k] - x.data[k]) / static_cast<double>(bsz);
                }
                awrl_batch += weight * err;
            }
            awrl_batch /= static_cast<double>(bsz);

            double contra_batch = 0.0;
            Matrix latent_grads(windows.size(), model.latent_dim());
            if (cfg.lambda > 0.0 && past_warmup && cfg.contrastive != ContrastiveMode::off) {
                PairSet pairs;
                if (simclr_step) {
                    pairs = simclr_pairs(bsz, cfg.temperature);
                } else if (partition) {
                    pairs = select_pairs(batch_idx, *partition, cfg.min_cluster_size,
                                         cfg.temperature);
                }
                if (pairs.empty()) {
                    ++report.empty_pair_batches;
                } else {
                    contra_batch = contrastive_loss(pairs, out.latents, cfg.infonce);
                    const Matrix g = contrastive_gradient(pairs, out.latents, cfg.infonce);
                    for (std::size_t k = 0; k < g.size(); ++k)
                        latent_grads.data[k] = cfg.lambda * g.data[k];
                }
            }

            const double step_loss = awrl_batch + cfg.lambda * contra_batch;
            if (!std::isfinite(step_loss)) {
                report.aborted = true;
                report.abort_reason = "non-finite loss at epoch " + std::to_string(epoch);
                break;
            }

            model.zero_grads();
            model.backward_batch(recon_grads, latent_grads);
            opt.step();

            epoch_awrl += awrl_batch;
            epoch_contra += contra_batch;
            ++steps;
        }
        if (report.aborted) break;

        EpochStats stats;
        stats.epoch = epoch;
        stats.awrl_term = epoch_awrl / static_cast<double>(steps);
        stats.contrastive_term = epoch_contra / static_cast<double>(steps);
        stats.total = stats.awrl_term + cfg.lambda * stats.contrastive_term;
        stats.val_error = detail::validation_error(model, val.windows);
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.epochs.push_back(stats);

        if (!std::isfinite(stats.val_error)) {
            report.aborted = true;
            report.abort_reason = "non-finite validation error at epoch " + std::to_string(epoch);
            break;
        }
        if (stats.val_error < best_val) {
            best_val = stats.val_error;
            best_params = model.save_parameters();
            best_epoch = epoch;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (bad_epochs >= cfg.patience) break;
        }
    }

    model.restore_parameters(best_params);
    report.best_epoch = best_epoch;
    report.best_val_error = std::isfinite(best_val) ? best_val : 0.0;

    // Final profile/partition at the returned parameters, for dumps.
    if (wants_profile && n >= 2) {
        const Matrix latents = detail::encode_all(model, train.windows);
        const std::size_t k = std::min(cfg.knn_k, n - 1);
        report.final_profile = compute_contamination_profile(latents, k, cfg.cont_alpha, cfg.cont_tau);
        report.final_partition =
            annotate_contamination(finch_partition(latents), *report.final_profile);
    }
    return report;
}

struct TrainedModel {
    ConjugateModel model;
    TrainReport report;
};

/// Build a conjugate model (or variant) for the data, seed it, and run the
/// training loop. Model init and epoch shuffles draw from one generator
/// seeded with cfg.seed.
inline TrainedModel train(const WindowBatch& train_windows, const WindowBatch& val_windows,
                          ModelConfig mcfg, const TrainConfig& cfg) {
    if (train_windows.empty()) throw config_error("no training windows");
    mcfg.metrics = train_windows.windows.front().rows;
    mcfg.window = train_windows.windows.front().cols;

    std::mt19937 rng(cfg.seed);
    ConjugateModel model(mcfg);
    model.init(rng);
    TrainReport report = train_loop(model, train_windows, val_windows, cfg, rng);
    return {std::move(model), std::move(report)};
}

} // namespace cleanet
