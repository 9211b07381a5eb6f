#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cleanet/errors.hpp"
#include "cleanet/matrix.hpp"

namespace cleanet {

/// A multivariate series: d metrics (rows) over T timestamps (columns).
struct SeriesMatrix {
    Matrix values;                         // d x T
    std::vector<std::string> metric_names; // size d
    std::string entity_id;

    std::size_t num_metrics() const { return values.rows; }
    std::size_t num_timestamps() const { return values.cols; }
};

/// Per-timestamp binary labels, aligned with SeriesMatrix columns.
struct LabelVector {
    std::vector<std::uint8_t> labels;

    std::size_t size() const { return labels.size(); }
};

/// Per-metric min/max captured on the training split and reused verbatim at
/// validation/test time.
struct NormStats {
    std::vector<double> min;
    std::vector<double> max;
};

/// A batch of d x w windows with their 0-based start timestamps.
struct WindowBatch {
    std::vector<Matrix> windows;
    std::vector<std::size_t> start_indices;
    std::size_t stride = 1;

    std::size_t size() const { return windows.size(); }
    bool empty() const { return windows.empty(); }
};

struct CsvSchema {
    std::optional<std::string> label_column; // split out as LabelVector if present
};

struct LoadedSeries {
    SeriesMatrix series;
    std::optional<LabelVector> labels;
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t begin = 0;
    while (true) {
        std::size_t comma = line.find(',', begin);
        if (comma == std::string::npos) {
            fields.push_back(trim(std::string_view(line).substr(begin)));
            break;
        }
        fields.push_back(trim(std::string_view(line).substr(begin, comma - begin)));
        begin = comma + 1;
    }
    return fields;
}

inline bool parse_double(const std::string& field, double& out) {
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && !field.empty();
}

} // namespace detail

/// Load a multivariate series from CSV. First line is a header naming the
/// columns; every non-label column must parse as a finite real. The optional
/// label column (0/1) is split out into a LabelVector.
inline LoadedSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema = {}) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw parse_error(path.string() + ": empty file, expected a header row");

    const std::vector<std::string> header = detail::split_csv_line(line);
    std::size_t label_idx = header.size(); // sentinel: no label column
    if (schema.label_column) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == *schema.label_column) label_idx = i;
    }
    std::vector<std::size_t> metric_cols;
    std::vector<std::string> metric_names;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i == label_idx) continue;
        metric_cols.push_back(i);
        metric_names.push_back(header[i]);
    }
    if (metric_cols.empty())
        throw parse_error(path.string() + ": no metric columns in header");

    std::vector<std::vector<double>> columns(metric_cols.size());
    std::vector<std::uint8_t> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw parse_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        for (std::size_t m = 0; m < metric_cols.size(); ++m) {
            const std::string& field = fields[metric_cols[m]];
            double v;
            if (!detail::parse_double(field, v))
                throw parse_error(path.string() + ":" + std::to_string(line_no) + ": column '" +
                                  metric_names[m] + "': cannot parse '" + field + "' as a real");
            if (!std::isfinite(v))
                throw parse_error(path.string() + ":" + std::to_string(line_no) + ": column '" +
                                  metric_names[m] + "': non-finite value '" + field + "'");
            columns[m].push_back(v);
        }
        if (label_idx < header.size()) {
            const std::string& field = fields[label_idx];
            if (field != "0" && field != "1")
                throw parse_error(path.string() + ":" + std::to_string(line_no) +
                                  ": label must be 0 or 1, got '" + field + "'");
            labels.push_back(field == "1" ? 1 : 0);
        }
    }
    const std::size_t T = columns[0].size();
    if (T == 0)
        throw parse_error(path.string() + ": no data rows");

    LoadedSeries out;
    out.series.values = Matrix(metric_cols.size(), T);
    for (std::size_t m = 0; m < metric_cols.size(); ++m)
        for (std::size_t t = 0; t < T; ++t) out.series.values(m, t) = columns[m][t];
    out.series.metric_names = std::move(metric_names);
    out.series.entity_id = path.stem().string();
    if (label_idx < header.size())
        out.labels = LabelVector{std::move(labels)};
    return out;
}

/// Scale each metric to [0,1] via (x - min) / (max - min). Without supplied
/// stats, min/max come from the series itself; with stats (the test-time
/// path), values outside the training range are clipped into [0,1]. Constant
/// metrics map to 0.
inline std::pair<SeriesMatrix, NormStats> minmax_normalize(
    const SeriesMatrix& s, const std::optional<NormStats>& stats = std::nullopt) {
    const std::size_t d = s.num_metrics();
    const std::size_t T = s.num_timestamps();
    NormStats used;
    if (stats) {
        if (stats->min.size() != d || stats->max.size() != d)
            throw dimension_error("normalization stats cover " + std::to_string(stats->min.size()) +
                                  " metrics, series has " + std::to_string(d));
        used = *stats;
    } else {
        used.min.assign(d, 0.0);
        used.max.assign(d, 0.0);
        for (std::size_t m = 0; m < d; ++m) {
            double lo = s.values(m, 0), hi = s.values(m, 0);
            for (std::size_t t = 1; t < T; ++t) {
                lo = std::min(lo, s.values(m, t));
                hi = std::max(hi, s.values(m, t));
            }
            used.min[m] = lo;
            used.max[m] = hi;
        }
    }

    SeriesMatrix out = s;
    for (std::size_t m = 0; m < d; ++m) {
        const double lo = used.min[m];
        const double range = used.max[m] - lo;
        for (std::size_t t = 0; t < T; ++t) {
            double v = range > 0.0 ? (s.values(m, t) - lo) / range : 0.0;
            out.values(m, t) = std::clamp(v, 0.0, 1.0);
        }
    }
    return {std::move(out), std::move(used)};
}

/// Segment a series into d x w windows at the given stride. Window i covers
/// timestamps [i*stride, i*stride + w); count = floor((T-w)/stride) + 1.
inline WindowBatch make_windows(const SeriesMatrix& s, std::size_t w, std::size_t stride) {
    const std::size_t d = s.num_metrics();
    const std::size_t T = s.num_timestamps();
    if (w == 0 || stride == 0)
        throw config_error("window length and stride must be positive");
    if (w > T)
        throw config_error("window length " + std::to_string(w) + " exceeds series length " +
                           std::to_string(T));
    WindowBatch batch;
    batch.stride = stride;
    const std::size_t count = (T - w) / stride + 1;
    batch.windows.reserve(count);
    batch.start_indices.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t start = i * stride;
        Matrix win(d, w);
        for (std::size_t m = 0; m < d; ++m)
            for (std::size_t t = 0; t < w; ++t) win(m, t) = s.values(m, start + t);
        batch.windows.push_back(std::move(win));
        batch.start_indices.push_back(start);
    }
    return batch;
}

/// One row per timestamp, metrics as columns, optional trailing label
/// column. Doubles print with round-trip precision so a write/load cycle is
/// exact.
inline void write_series_csv(const SeriesMatrix& s, const LabelVector* labels, std::ostream& out) {
    if (labels && labels->size() != s.num_timestamps())
        throw dimension_error("label vector length does not match the series");
    out.precision(17);
    for (std::size_t m = 0; m < s.num_metrics(); ++m) {
        if (m) out << ',';
        out << s.metric_names[m];
    }
    if (labels) out << ",label";
    out << '\n';
    for (std::size_t t = 0; t < s.num_timestamps(); ++t) {
        for (std::size_t m = 0; m < s.num_metrics(); ++m) {
            if (m) out << ',';
            out << s.values(m, t);
        }
        if (labels) out << ',' << static_cast<int>(labels->labels[t]);
        out << '\n';
    }
}

inline void write_mask_csv(const std::vector<std::uint8_t>& mask, std::ostream& out) {
    out << "mask\n";
    for (std::uint8_t v : mask) out << static_cast<int>(v) << '\n';
}

/// Chronological train/validation split: the first floor(n*ratio) windows
/// (clamped so both sides are non-empty) train, the rest validate.
inline std::pair<WindowBatch, WindowBatch> split_train_val(const WindowBatch& b, double ratio = 0.8) {
    if (ratio <= 0.0 || ratio >= 1.0)
        throw config_error("validation split ratio must lie in (0,1)");
    if (b.size() < 2)
        throw config_error("need at least 2 windows to split, got " + std::to_string(b.size()));
    std::size_t n_train = static_cast<std::size_t>(static_cast<double>(b.size()) * ratio);
    n_train = std::clamp<std::size_t>(n_train, 1, b.size() - 1);

    WindowBatch train, val;
    train.stride = val.stride = b.stride;
    train.windows.assign(b.windows.begin(), b.windows.begin() + n_train);
    train.start_indices.assign(b.start_indices.begin(), b.start_indices.begin() + n_train);
    val.windows.assign(b.windows.begin() + n_train, b.windows.end());
    val.start_indices.assign(b.start_indices.begin() + n_train, b.start_indices.end());
    return {std::move(train), std::move(val)};
}

} // namespace cleanet
