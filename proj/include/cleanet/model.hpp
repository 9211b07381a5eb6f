#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cleanet/errors.hpp"
#include "cleanet/matrix.hpp"
#include "cleanet/nn.hpp"
#include "cleanet/series.hpp"

#include <json.hpp>

namespace cleanet {

enum class ModelVariant { conjugate, flattened, time_only, feature_only };

inline std::string to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::conjugate: return "conjugate";
        case ModelVariant::flattened: return "flattened";
        case ModelVariant::time_only: return "time_only";
        case ModelVariant::feature_only: return "feature_only";
    }
    return "conjugate";
}

inline ModelVariant variant_from_string(const std::string& s) {
    if (s == "conjugate") return ModelVariant::conjugate;
    if (s == "flattened") return ModelVariant::flattened;
    if (s == "time_only") return ModelVariant::time_only;
    if (s == "feature_only") return ModelVariant::feature_only;
    throw config_error("unknown model variant '" + s + "'");
}

struct ModelConfig {
    std::size_t metrics = 0;        // d
    std::size_t window = 100;       // w
    std::size_t hidden_time = 16;   // time-encoder width
    std::size_t hidden_feature = 16;// feature-encoder width
    std::size_t encoder_layers = 1;
    ModelVariant variant = ModelVariant::conjugate;
};

/// Batch forward result: one latent row and one reconstruction per window.
struct BatchOutput {
    Matrix latents;              // n x latent_dim
    std::vector<Matrix> recons;  // n matrices, each d x w, entries in (0,1)
};

/// Anything the trainer can optimize: a reconstruction model exposing a
/// latent per window. The contamination weighting and contrastive loss only
/// touch this surface, so they wrap any such model, not just the conjugate
/// MLP.
class ReconstructionModel {
public:
    virtual ~ReconstructionModel() = default;

    virtual std::size_t input_metrics() const = 0;
    virtual std::size_t input_width() const = 0;
    virtual std::size_t latent_dim() const = 0;

    /// training=true caches activations for exactly one backward_batch call.
    virtual BatchOutput forward_batch(const std::vector<Matrix>& windows, bool training) = 0;

    /// Accumulate parameter gradients from dL/drecon (per window) and
    /// dL/dlatent (n x latent_dim). Either part may be all zeros.
    virtual void backward_batch(const std::vector<Matrix>& recon_grads,
                                const Matrix& latent_grads) = 0;

    virtual void zero_grads() = 0;
    virtual std::vector<ParamBlock> param_blocks() = 0;

    /// Flat parameter snapshot, used to keep the best-validation epoch.
    virtual std::vector<double> save_parameters() const = 0;
    virtual void restore_parameters(const std::vector<double>& flat) = 0;
};

/// The conjugate MLP: a time encoder runs over each metric's length-w row,
/// a feature encoder runs over each timestamp's d-vector (the transposed
/// window), and a single weight-shared affine decode maps the concatenated
/// embeddings back to d x w through a sigmoid. Variants drop one path
/// (time_only / feature_only) or replace both with one encoder over the
/// flattened window (flattened).
class ConjugateModel final : public ReconstructionModel {
public:
    explicit ConjugateModel(const ModelConfig& cfg) : cfg_(cfg) {
        if (cfg.metrics == 0 || cfg.window == 0)
            throw config_error("model needs positive metric count and window length");
        if (cfg.hidden_time == 0 || cfg.hidden_feature == 0)
            throw config_error("hidden sizes must be positive");
        if (cfg.encoder_layers == 0)
            throw config_error("encoder depth must be at least 1");

        const std::size_t d = cfg.metrics, w = cfg.window;
        switch (cfg_.variant) {
            case ModelVariant::conjugate:
                build_time_path(w, cfg.hidden_time, w);
                build_feature_path(d, cfg.hidden_feature, d);
                break;
            case ModelVariant::time_only:
                build_time_path(w, cfg.hidden_time, w);
                break;
            case ModelVariant::feature_only:
                build_feature_path(d, cfg.hidden_feature, d);
                break;
            case ModelVariant::flattened:
                build_time_path(d * w, cfg.hidden_time, d * w);
                break;
        }
    }

    void init(std::mt19937& rng) {
        for (DenseLayer& l : time_encoder_) l.init(rng);
        for (DenseLayer& l : feature_encoder_) l.init(rng);
        if (time_decoder_) time_decoder_->init(rng);
        if (feature_decoder_) feature_decoder_->init(rng);
    }

    const ModelConfig& config() const { return cfg_; }
    std::size_t input_metrics() const override { return cfg_.metrics; }
    std::size_t input_width() const override { return cfg_.window; }

    std::size_t latent_dim() const override {
        switch (cfg_.variant) {
            case ModelVariant::conjugate:
                return cfg_.metrics * cfg_.hidden_time + cfg_.window * cfg_.hidden_feature;
            case ModelVariant::time_only: return cfg_.metrics * cfg_.hidden_time;
            case ModelVariant::feature_only: return cfg_.window * cfg_.hidden_feature;
            case ModelVariant::flattened: return cfg_.hidden_time;
        }
        return 0;
    }

    BatchOutput forward_batch(const std::vector<Matrix>& windows, bool training) override {
        const std::size_t n = windows.size();
        const std::size_t d = cfg_.metrics, w = cfg_.window;
        for (const Matrix& win : windows)
            if (win.rows != d || win.cols != w)
                throw dimension_error("window shape does not match model config");

        BatchOutput out;
        out.latents = Matrix(n, latent_dim());
        out.recons.resize(n);

        Matrix time_recon, feat_recon;
        if (has_time_path()) {
            Matrix x = stack_time_rows(windows);
            for (DenseLayer& l : time_encoder_) x = l.forward(x, training);
            time_embed_ = x;
            time_recon = time_decoder_->forward(x, training);
        }
        if (has_feature_path()) {
            Matrix x = stack_feature_rows(windows);
            for (DenseLayer& l : feature_encoder_) x = l.forward(x, training);
            feat_embed_ = x;
            feat_recon = feature_decoder_->forward(x, training);
        }

        for (std::size_t i = 0; i < n; ++i) {
            Matrix pre(d, w);
            if (has_time_path()) {
                if (cfg_.variant == ModelVariant::flattened) {
                    for (std::size_t m = 0; m < d; ++m)
                        for (std::size_t t = 0; t < w; ++t)
                            pre(m, t) += time_recon(i, m * w + t);
                } else {
                    for (std::size_t m = 0; m < d; ++m)
                        for (std::size_t t = 0; t < w; ++t)
                            pre(m, t) += time_recon(i * d + m, t);
                }
            }
            if (has_feature_path()) {
                for (std::size_t m = 0; m < d; ++m)
                    for (std::size_t t = 0; t < w; ++t)
                        pre(m, t) += feat_recon(i * w + t, m);
            }
            for (double& v : pre.data) v = sigmoid(v);
            out.recons[i] = std::move(pre);
            pack_latent(out.latents, i);
        }
        if (training) {
            recon_cache_ = out.recons;
            batch_size_cache_ = n;
        }
        return out;
    }

    void backward_batch(const std::vector<Matrix>& recon_grads,
                        const Matrix& latent_grads) override {
        const std::size_t n = batch_size_cache_;
        const std::size_t d = cfg_.metrics, w = cfg_.window;
        if (recon_grads.size() != n || latent_grads.rows != n)
            throw dimension_error("backward batch size does not match cached forward");

        // dL/d(pre-sigmoid) per window.
        std::vector<Matrix> dpre(n);
        for (std::size_t i = 0; i < n; ++i) {
            dpre[i] = recon_grads[i];
            const Matrix& y = recon_cache_[i];
            for (std::size_t k = 0; k < dpre[i].size(); ++k)
                dpre[i].data[k] *= y.data[k] * (1.0 - y.data[k]);
        }

        if (has_time_path()) {
            const std::size_t rt = time_rows_per_window();
            const std::size_t ct = time_cols();
            Matrix up(n * rt, ct);
            for (std::size_t i = 0; i < n; ++i) {
                if (cfg_.variant == ModelVariant::flattened) {
                    for (std::size_t m = 0; m < d; ++m)
                        for (std::size_t t = 0; t < w; ++t)
                            up(i, m * w + t) = dpre[i](m, t);
                } else {
                    for (std::size_t m = 0; m < d; ++m)
                        for (std::size_t t = 0; t < w; ++t)
                            up(i * d + m, t) = dpre[i](m, t);
                }
            }
            Matrix dembed = time_decoder_->backward(up);
            add_time_latent_grads(dembed, latent_grads);
            for (auto it = time_encoder_.rbegin(); it != time_encoder_.rend(); ++it)
                dembed = it->backward(dembed);
        }
        if (has_feature_path()) {
            Matrix up(n * w, d);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t m = 0; m < d; ++m)
                    for (std::size_t t = 0; t < w; ++t)
                        up(i * w + t, m) = dpre[i](m, t);
            Matrix dembed = feature_decoder_->backward(up);
            add_feature_latent_grads(dembed, latent_grads);
            for (auto it = feature_encoder_.rbegin(); it != feature_encoder_.rend(); ++it)
                dembed = it->backward(dembed);
        }
    }

    void zero_grads() override {
        for (DenseLayer& l : time_encoder_) l.zero_grads();
        for (DenseLayer& l : feature_encoder_) l.zero_grads();
        if (time_decoder_) time_decoder_->zero_grads();
        if (feature_decoder_) feature_decoder_->zero_grads();
    }

    std::vector<ParamBlock> param_blocks() override {
        std::vector<ParamBlock> blocks;
        auto add = [&blocks](DenseLayer& l) {
            blocks.push_back({&l.weight().data, &l.grad_weight().data});
            blocks.push_back({&l.bias(), &l.grad_bias()});
        };
        for (DenseLayer& l : time_encoder_) add(l);
        for (DenseLayer& l : feature_encoder_) add(l);
        if (time_decoder_) add(*time_decoder_);
        if (feature_decoder_) add(*feature_decoder_);
        return blocks;
    }

    std::vector<double> save_parameters() const override {
        std::vector<double> flat;
        auto add = [&flat](const DenseLayer& l) {
            flat.insert(flat.end(), l.weight().data.begin(), l.weight().data.end());
            flat.insert(flat.end(), l.bias().begin(), l.bias().end());
        };
        for (const DenseLayer& l : time_encoder_) add(l);
        for (const DenseLayer& l : feature_encoder_) add(l);
        if (time_decoder_) add(*time_decoder_);
        if (feature_decoder_) add(*feature_decoder_);
        return flat;
    }

    void restore_parameters(const std::vector<double>& flat) override {
        std::size_t pos = 0;
        auto take = [&flat, &pos](DenseLayer& l) {
            std::copy(flat.begin() + pos, flat.begin() + pos + l.weight().data.size(),
                      l.weight().data.begin());
            pos += l.weight().data.size();
            std::copy(flat.begin() + pos, flat.begin() + pos + l.bias().size(), l.bias().begin());
            pos += l.bias().size();
        };
        for (DenseLayer& l : time_encoder_) take(l);
        for (DenseLayer& l : feature_encoder_) take(l);
        if (time_decoder_) take(*time_decoder_);
        if (feature_decoder_) take(*feature_decoder_);
        if (pos != flat.size())
            throw dimension_error("parameter snapshot size does not match model");
    }

    std::size_t param_count() const {
        std::size_t total = 0;
        for (const DenseLayer& l : time_encoder_) total += l.param_count();
        for (const DenseLayer& l : feature_encoder_) total += l.param_count();
        if (time_decoder_) total += time_decoder_->param_count();
        if (feature_decoder_) total += feature_decoder_->param_count();
        return total;
    }

    /// Analytic multiply-accumulate count for one window: each dense layer
    /// contributes rows_per_window * in * out.
    std::size_t macs_per_window() const {
        std::size_t total = 0;
        const std::size_t rt = time_rows_per_window();
        for (const DenseLayer& l : time_encoder_) total += rt * l.in_dim() * l.out_dim();
        if (time_decoder_) total += rt * time_decoder_->in_dim() * time_decoder_->out_dim();
        for (const DenseLayer& l : feature_encoder_)
            total += cfg_.window * l.in_dim() * l.out_dim();
        if (feature_decoder_)
            total += cfg_.window * feature_decoder_->in_dim() * feature_decoder_->out_dim();
        return total;
    }

    bool all_finite() const {
        auto ok = [](const DenseLayer& l) {
            if (!l.weight().all_finite()) return false;
            for (double b : l.bias())
                if (!std::isfinite(b)) return false;
            return true;
        };
        for (const DenseLayer& l : time_encoder_)
            if (!ok(l)) return false;
        for (const DenseLayer& l : feature_encoder_)
            if (!ok(l)) return false;
        if (time_decoder_ && !ok(*time_decoder_)) return false;
        if (feature_decoder_ && !ok(*feature_decoder_)) return false;
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"variant", to_string(cfg_.variant)},
                         {"metrics", cfg_.metrics},
                         {"window", cfg_.window},
                         {"hidden_time", cfg_.hidden_time},
                         {"hidden_feature", cfg_.hidden_feature},
                         {"encoder_layers", cfg_.encoder_layers}};
        auto dump_stack = [](const std::vector<DenseLayer>& stack) {
            nlohmann::json arr = nlohmann::json::array();
            for (const DenseLayer& l : stack) arr.push_back(l.to_json());
            return arr;
        };
        j["time_encoder"] = dump_stack(time_encoder_);
        j["feature_encoder"] = dump_stack(feature_encoder_);
        if (time_decoder_) j["time_decoder"] = time_decoder_->to_json();
        if (feature_decoder_) j["feature_decoder"] = feature_decoder_->to_json();
        return j;
    }

    static ConjugateModel from_json(const nlohmann::json& j) {
        ModelConfig cfg;
        cfg.variant = variant_from_string(j.at("variant").get<std::string>());
        cfg.metrics = j.at("metrics").get<std::size_t>();
        cfg.window = j.at("window").get<std::size_t>();
        cfg.hidden_time = j.at("hidden_time").get<std::size_t>();
        cfg.hidden_feature = j.at("hidden_feature").get<std::size_t>();
        cfg.encoder_layers = j.at("encoder_layers").get<std::size_t>();
        ConjugateModel model(cfg);
        auto load_stack = [](const nlohmann::json& arr) {
            std::vector<DenseLayer> stack;
            for (const auto& lj : arr) stack.push_back(DenseLayer::from_json(lj));
            return stack;
        };
        model.time_encoder_ = load_stack(j.at("time_encoder"));
        model.feature_encoder_ = load_stack(j.at("feature_encoder"));
        if (j.contains("time_decoder"))
            model.time_decoder_ = std::make_unique<DenseLayer>(DenseLayer::from_json(j.at("time_decoder")));
        if (j.contains("feature_decoder"))
            model.feature_decoder_ =
                std::make_unique<DenseLayer>(DenseLayer::from_json(j.at("feature_decoder")));
        return model;
    }

    bool same_parameters(const ConjugateModel& other) const {
        return save_parameters() == other.save_parameters() &&
               to_string(cfg_.variant) == to_string(other.cfg_.variant) &&
               cfg_.metrics == other.cfg_.metrics && cfg_.window == other.cfg_.window;
    }

private:
    bool has_time_path() const { return !time_encoder_.empty(); }
    bool has_feature_path() const { return !feature_encoder_.empty(); }

    std::size_t time_rows_per_window() const {
        return cfg_.variant == ModelVariant::flattened ? 1 : cfg_.metrics;
    }
    std::size_t time_cols() const {
        return cfg_.variant == ModelVariant::flattened ? cfg_.metrics * cfg_.window : cfg_.window;
    }

    void build_time_path(std::size_t in, std::size_t hidden, std::size_t out) {
        time_encoder_.emplace_back(in, hidden, Activation::relu);
        for (std::size_t i = 1; i < cfg_.encoder_layers; ++i)
            time_encoder_.emplace_back(hidden, hidden, Activation::relu);
        time_decoder_ = std::make_unique<DenseLayer>(hidden, out, Activation::identity);
    }

    void build_feature_path(std::size_t in, std::size_t hidden, std::size_t out) {
        feature_encoder_.emplace_back(in, hidden, Activation::relu);
        for (std::size_t i = 1; i < cfg_.encoder_layers; ++i)
            feature_encoder_.emplace_back(hidden, hidden, Activation::relu);
        feature_decoder_ = std::make_unique<DenseLayer>(hidden, out, Activation::identity);
    }

    /// Rows for the time encoder: one row per metric (or one flattened row
    /// per window for the flattened variant).
    Matrix stack_time_rows(const std::vector<Matrix>& windows) const {
        const std::size_t n = windows.size();
        const std::size_t rt = time_rows_per_window(), ct = time_cols();
        Matrix x(n * rt, ct);
        for (std::size_t i = 0; i < n; ++i) {
            if (cfg_.variant == ModelVariant::flattened) {
                std::copy(windows[i].data.begin(), windows[i].data.end(),
                          x.data.begin() + i * ct);
            } else {
                std::copy(windows[i].data.begin(), windows[i].data.end(),
                          x.data.begin() + i * rt * ct);
            }
        }
        return x;
    }

    /// Rows for the feature encoder: one row per timestamp (the transposed
    /// window).
    Matrix stack_feature_rows(const std::vector<Matrix>& windows) const {
        const std::size_t n = windows.size();
        const std::size_t d = cfg_.metrics, w = cfg_.window;
        Matrix x(n * w, d);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t t = 0; t < w; ++t)
                for (std::size_t m = 0; m < d; ++m) x(i * w + t, m) = windows[i](m, t);
        return x;
    }

    /// Latent layout: flatten(Z_T) rows-first, then flatten(Z_F transposed),
    /// i.e. entry hidden*window-major over time for the feature block.
    void pack_latent(Matrix& latents, std::size_t i) const {
        const std::size_t d = cfg_.metrics, w = cfg_.window;
        std::size_t off = 0;
        if (has_time_path()) {
            const std::size_t rt = time_rows_per_window();
            const std::size_t h = cfg_.hidden_time;
            for (std::size_t r = 0; r < rt; ++r)
                for (std::size_t j = 0; j < h; ++j)
                    latents(i, off + r * h + j) = time_embed_(i * rt + r, j);
            off += rt * h;
        }
        if (has_feature_path()) {
            const std::size_t h = cfg_.hidden_feature;
            for (std::size_t j = 0; j < h; ++j)
                for (std::size_t t = 0; t < w; ++t)
                    latents(i, off + j * w + t) = feat_embed_(i * w + t, j);
        }
    }

    void add_time_latent_grads(Matrix& dembed, const Matrix& latent_grads) const {
        const std::size_t rt = time_rows_per_window();
        const std::size_t h = cfg_.hidden_time;
        for (std::size_t i = 0; i < batch_size_cache_; ++i)
            for (std::size_t r = 0; r < rt; ++r)
                for (std::size_t j = 0; j < h; ++j)
                    dembed(i * rt + r, j) += latent_grads(i, r * h + j);
    }

    void add_feature_latent_grads(Matrix& dembed, const Matrix& latent_grads) const {
        const std::size_t w = cfg_.window;
        const std::size_t h = cfg_.hidden_feature;
        const std::size_t off = has_time_path() ? time_rows_per_window() * cfg_.hidden_time : 0;
        for (std::size_t i = 0; i < batch_size_cache_; ++i)
            for (std::size_t j = 0; j < h; ++j)
                for (std::size_t t = 0; t < w; ++t)
                    dembed(i * w + t, j) += latent_grads(i, off + j * w + t);
    }

    ModelConfig cfg_;
    std::vector<DenseLayer> time_encoder_;
    std::vector<DenseLayer> feature_encoder_;
    std::unique_ptr<DenseLayer> time_decoder_;
    std::unique_ptr<DenseLayer> feature_decoder_;

    // Training caches (valid between one forward_batch(.., true) and the
    // matching backward_batch).
    Matrix time_embed_;
    Matrix feat_embed_;
    std::vector<Matrix> recon_cache_;
    std::size_t batch_size_cache_ = 0;
};

/// Model checkpoint: architecture, parameters, and the training-time
/// normalization stats needed to score unseen data.
struct ModelCheckpoint {
    ConjugateModel model;
    NormStats stats;
    std::vector<std::string> metric_names;

    nlohmann::json to_json() const {
        nlohmann::json j{{"format", "cleanet-model"}, {"format_version", 1}};
        j["model"] = model.to_json();
        j["norm_min"] = stats.min;
        j["norm_max"] = stats.max;
        j["metric_names"] = metric_names;
        return j;
    }

    static ModelCheckpoint from_json(const nlohmann::json& j) {
        if (!j.contains("format") || j.at("format") != "cleanet-model")
            throw parse_error("not a cleanet model checkpoint");
        ModelCheckpoint ckpt{ConjugateModel::from_json(j.at("model")), {}, {}};
        ckpt.stats.min = j.at("norm_min").get<std::vector<double>>();
        ckpt.stats.max = j.at("norm_max").get<std::vector<double>>();
        ckpt.metric_names = j.at("metric_names").get<std::vector<std::string>>();
        return ckpt;
    }
};

} // namespace cleanet
