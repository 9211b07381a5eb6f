#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cleanet/errors.hpp"
#include "cleanet/matrix.hpp"
#include "cleanet/model.hpp"
#include "cleanet/series.hpp"

#include <json.hpp>

namespace cleanet {

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalResult {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    Metrics metrics;
};

/// Reconstruction error per timestamp: for every window the squared residual
/// summed over metrics, column by column. Windows advance by `stride`
/// (default: the window length, i.e. non-overlapping); a final window over
/// [T-w, T) is added when the stride leaves a tail uncovered, and a
/// timestamp covered more than once gets the mean over covering windows.
inline std::vector<double> score_timestamps(ReconstructionModel& model,
                                            const SeriesMatrix& normalized,
                                            std::size_t stride = 0) {
    const std::size_t d = model.input_metrics();
    const std::size_t w = model.input_width();
    const std::size_t T = normalized.num_timestamps();
    if (normalized.num_metrics() != d)
        throw dimension_error("series has " + std::to_string(normalized.num_metrics()) +
                              " metrics, model expects " + std::to_string(d));
    if (T < w)
        throw config_error("series shorter than the model window");
    if (stride == 0) stride = w;

    WindowBatch batch = make_windows(normalized, w, stride);
    if (batch.start_indices.back() + w < T) {
        const std::size_t start = T - w;
        Matrix win(d, w);
        for (std::size_t m = 0; m < d; ++m)
            for (std::size_t t = 0; t < w; ++t) win(m, t) = normalized.values(m, start + t);
        batch.windows.push_back(std::move(win));
        batch.start_indices.push_back(start);
    }

    std::vector<double> sums(T, 0.0);
    std::vector<std::uint32_t> counts(T, 0);
    constexpr std::size_t kChunk = 256;
    for (std::size_t begin = 0; begin < batch.size(); begin += kChunk) {
        const std::size_t end = std::min(begin + kChunk, batch.size());
        const std::vector<Matrix> chunk(batch.windows.begin() + begin,
                                        batch.windows.begin() + end);
        BatchOutput out = model.forward_batch(chunk, false);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            const std::size_t start = batch.start_indices[begin + i];
            for (std::size_t t = 0; t < w; ++t) {
                double col = 0.0;
                for (std::size_t m = 0; m < d; ++m) {
                    const double diff = chunk[i](m, t) - out.recons[i](m, t);
                    col += diff * diff;
                }
                sums[start + t] += col;
                ++counts[start + t];
            }
        }
    }
    for (std::size_t t = 0; t < T; ++t) sums[t] /= static_cast<double>(counts[t]);
    return sums;
}

/// Strict-inequality thresholding: label 1 iff score > threshold.
inline std::vector<std::uint8_t> threshold_labels(const std::vector<double>& scores,
                                                  double threshold) {
    std::vector<std::uint8_t> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold ? 1 : 0;
    return out;
}

/// Point-wise precision/recall/F1 with the usual zero conventions. No point
/// adjustment of any kind: a detection inside an anomaly segment counts as
/// exactly one true positive.
inline EvalResult evaluate(const std::vector<std::uint8_t>& predictions,
                           const LabelVector& labels) {
    if (predictions.size() != labels.size())
        throw dimension_error("predictions cover " + std::to_string(predictions.size()) +
                              " timestamps, labels " + std::to_string(labels.size()));
    EvalResult r;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred = predictions[i] != 0;
        const bool truth = labels.labels[i] != 0;
        if (pred && truth) ++r.tp;
        else if (pred && !truth) ++r.fp;
        else if (!pred && truth) ++r.fn;
    }
    r.metrics.precision = r.tp + r.fp > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
    r.metrics.recall = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
    const double pr = r.metrics.precision + r.metrics.recall;
    r.metrics.f1 = pr > 0.0 ? 2.0 * r.metrics.precision * r.metrics.recall / pr : 0.0;
    return r;
}

struct SweepResult {
    double threshold = 0.0;
    EvalResult eval;
};

/// Exhaustive best-F1 threshold: every unique score value plus -inf/+inf
/// sentinels is a candidate; ties break toward higher precision, then the
/// lower threshold. Runs one descending pass with incremental confusion
/// counts.
inline SweepResult best_f1_threshold(const std::vector<double>& scores,
                                     const LabelVector& labels) {
    if (scores.size() != labels.size())
        throw dimension_error("scores and labels have different lengths");
    const std::size_t n = scores.size();
    std::size_t positives = 0;
    for (std::uint8_t l : labels.labels) positives += l;
    if (positives == 0)
        throw eval_error("labels contain no anomalies; recall and best-F1 threshold undefined");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    auto metrics_from = [](std::size_t tp, std::size_t fp, std::size_t fn) {
        EvalResult r;
        r.tp = tp;
        r.fp = fp;
        r.fn = fn;
        r.metrics.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        r.metrics.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        const double pr = r.metrics.precision + r.metrics.recall;
        r.metrics.f1 = pr > 0.0 ? 2.0 * r.metrics.precision * r.metrics.recall / pr : 0.0;
        return r;
    };

    // t = -inf: everything predicted anomalous.
    std::size_t tp = positives, fp = n - positives, fn = 0;
    SweepResult best;
    best.threshold = -std::numeric_limits<double>::infinity();
    best.eval = metrics_from(tp, fp, fn);

    auto consider = [&best](double threshold, const EvalResult& cand) {
        const Metrics& m = cand.metrics;
        const Metrics& b = best.eval.metrics;
        if (m.f1 > b.f1 || (m.f1 == b.f1 && m.precision > b.precision)) {
            best.threshold = threshold;
            best.eval = cand;
        }
    };

    // Raise the threshold through each unique score (ascending): points with
    // score <= t flip to predicted-normal.
    std::size_t i = 0;
    while (i < n) {
        const double value = scores[order[i]];
        while (i < n && scores[order[i]] == value) {
            if (labels.labels[order[i]]) {
                --tp;
                ++fn;
            } else {
                --fp;
            }
            ++i;
        }
        consider(value, metrics_from(tp, fp, fn));
    }
    // t = +inf: nothing predicted; by convention P = R = F1 = 0.
    consider(std::numeric_limits<double>::infinity(), metrics_from(0, 0, positives));
    return best;
}

/// Unweighted arithmetic mean of per-entity metrics.
inline Metrics multi_entity_average(const std::vector<Metrics>& per_entity) {
    if (per_entity.empty())
        throw config_error("no entity reports to average");
    Metrics mean;
    for (const Metrics& m : per_entity) {
        mean.precision += m.precision;
        mean.recall += m.recall;
        mean.f1 += m.f1;
    }
    const double n = static_cast<double>(per_entity.size());
    mean.precision /= n;
    mean.recall /= n;
    mean.f1 /= n;
    return mean;
}

/// Detection outcome for one entity.
struct AnomalyReport {
    std::string entity;
    std::vector<double> scores;
    double threshold = 0.0;
    std::string threshold_mode; // "auto" or "fixed"
    std::vector<std::uint8_t> predictions;
    std::optional<EvalResult> eval; // present when labels were available

    nlohmann::json to_json() const {
        nlohmann::json j{{"format", "cleanet-report"}, {"format_version", 1}};
        j["entity"] = entity;
        j["num_timestamps"] = scores.size();
        if (std::isfinite(threshold))
            j["threshold"] = threshold;
        else
            j["threshold"] = threshold > 0 ? "inf" : "-inf";
        j["threshold_mode"] = threshold_mode;
        std::size_t flagged = 0;
        for (std::uint8_t p : predictions) flagged += p;
        j["predicted_anomalies"] = flagged;
        if (eval) {
            j["metrics"] = {{"precision", eval->metrics.precision},
                            {"recall", eval->metrics.recall},
                            {"f1", eval->metrics.f1},
                            {"tp", eval->tp},
                            {"fp", eval->fp},
                            {"fn", eval->fn}};
        }
        return j;
    }
};

} // namespace cleanet
