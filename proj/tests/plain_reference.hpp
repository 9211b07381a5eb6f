#pragma once

#include <limits>
#include <random>
#include <vector>

#include "cleanet/model.hpp"
#include "cleanet/nn.hpp"
#include "cleanet/series.hpp"
#include "cleanet/trainer.hpp"

namespace testutil {

/// Independent plain-autoencoder training loop: same init and shuffle
/// discipline as the library trainer, but loss, gradients, validation error
/// and early stopping are re-derived here with no reweighting or contrastive
/// machinery. Returns the best-validation parameters; optionally records the
/// per-epoch mean training loss.
inline std::vector<double> reference_plain_training(const cleanet::WindowBatch& train,
                                                    const cleanet::WindowBatch& val,
                                                    cleanet::ModelConfig mcfg,
                                                    const cleanet::TrainConfig& cfg,
                                                    std::vector<double>* epoch_losses = nullptr) {
    using namespace cleanet;
    mcfg.metrics = train.windows.front().rows;
    mcfg.window = train.windows.front().cols;
    std::mt19937 rng(cfg.seed);
    ConjugateModel model(mcfg);
    model.init(rng);
    Optimizer opt(cfg.optimizer, cfg.learning_rate);
    opt.register_blocks(model.param_blocks());

    const std::size_t n = train.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::vector<double> best = model.save_parameters();
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t bad = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t steps = 0;
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
            const std::size_t end = std::min(begin + cfg.batch_size, n);
            const std::size_t bsz = end - begin;
            std::vector<Matrix> windows;
            for (std::size_t i = begin; i < end; ++i) windows.push_back(train.windows[order[i]]);

            const BatchOutput out = model.forward_batch(windows, true);
            double batch_loss = 0.0;
            std::vector<Matrix> grads(bsz);
            for (std::size_t i = 0; i < bsz; ++i) {
                const Matrix& x = windows[i];
                grads[i] = Matrix(x.rows, x.cols);
                double err = 0.0;
                for (std::size_t k = 0; k < x.size(); ++k) {
                    const double diff = x.data[k] - out.recons[i].data[k];
                    err += diff * diff;
                    grads[i].data[k] = 2.0 * 1.0 * (out.recons[i].data[k] - x.data[k]) /
                                       static_cast<double>(bsz);
                }
                batch_loss += 1.0 * err;
            }
            batch_loss /= static_cast<double>(bsz);
            model.zero_grads();
            model.backward_batch(grads, Matrix(bsz, model.latent_dim()));
            opt.step();
            epoch_loss += batch_loss;
            ++steps;
        }
        if (epoch_losses) epoch_losses->push_back(epoch_loss / static_cast<double>(steps));

        double val_err = 0.0;
        {
            const BatchOutput out = model.forward_batch(val.windows, false);
            for (std::size_t i = 0; i < val.size(); ++i) {
                double err = 0.0;
                for (std::size_t k = 0; k < val.windows[i].size(); ++k) {
                    const double diff = val.windows[i].data[k] - out.recons[i].data[k];
                    err += diff * diff;
                }
                val_err += err / static_cast<double>(val.windows[i].size());
            }
            val_err /= static_cast<double>(val.size());
        }
        if (val_err < best_val) {
            best_val = val_err;
            best = model.save_parameters();
            bad = 0;
        } else if (++bad >= cfg.patience) {
            break;
        }
    }
    return best;
}

} // namespace testutil
