// cleanet command-line tool: synthetic data generation, training, detection,
// evaluation and efficiency reporting for the contamination-resilient
// time-series anomaly detector.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cleanet/cleanet.hpp"
#include "cleanet/parallel.hpp"

namespace fs = std::filesystem;
using namespace cleanet;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void finish_manifest(RunManifest& manifest, const Timer& timer, const fs::path& path) {
    manifest.wall_seconds = timer.seconds();
    manifest.peak_rss_kilobytes = peak_rss_kb();
    manifest.write(path);
}

double parse_threshold(const std::string& text, bool& is_auto) {
    if (text == "auto") {
        is_auto = true;
        return 0.0;
    }
    is_auto = false;
    try {
        std::size_t consumed = 0;
        const double value = std::stod(text, &consumed);
        if (consumed != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw config_error("--threshold must be 'auto' or a number, got '" + text + "'");
    }
}

std::optional<LabelVector> load_labeled(const fs::path& path, const std::string& label_col,
                                        SeriesMatrix& series) {
    LoadedSeries loaded = load_csv(path, CsvSchema{label_col});
    series = std::move(loaded.series);
    return loaded.labels;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthOpts {
    SynthConfig cfg;
    fs::path out_dir;
};

int run_synth(const SynthOpts& opts) {
    Timer timer;
    const SynthData data = generate(opts.cfg);

    fs::create_directories(opts.out_dir);
    {
        std::ostringstream buf;
        write_series_csv(data.train, nullptr, buf);
        atomic_write_text(opts.out_dir / "train.csv", buf.str());
    }
    {
        std::ostringstream buf;
        write_series_csv(data.test, &data.test_labels, buf);
        atomic_write_text(opts.out_dir / "test.csv", buf.str());
    }
    {
        std::ostringstream buf;
        write_mask_csv(data.train_mask, buf);
        atomic_write_text(opts.out_dir / "train_mask.csv", buf.str());
    }

    RunManifest manifest;
    manifest.subcommand = "synth";
    manifest.seed = opts.cfg.seed;
    manifest.config = {{"d", opts.cfg.metrics},
                       {"t", opts.cfg.train_timestamps},
                       {"test_t", opts.cfg.test_timestamps},
                       {"rho", opts.cfg.contamination_rate},
                       {"test_anomaly_rate", opts.cfg.test_anomaly_rate},
                       {"salient_fraction", opts.cfg.salient_fraction}};
    manifest.outputs = {(opts.out_dir / "train.csv").string(),
                        (opts.out_dir / "test.csv").string(),
                        (opts.out_dir / "train_mask.csv").string()};
    finish_manifest(manifest, timer, opts.out_dir / "manifest.json");

    std::size_t masked = 0;
    for (auto v : data.train_mask) masked += v;
    std::cout << "wrote " << opts.out_dir.string() << ": train " << opts.cfg.train_timestamps
              << " x " << opts.cfg.metrics << " (" << masked << " contaminated), test "
              << opts.cfg.test_timestamps << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOpts {
    fs::path data;
    fs::path out_dir;
    std::string label_col = "label";
    std::size_t window = 100;
    std::size_t stride = 0; // 0 = window length
    double val_ratio = 0.8;
    ModelConfig mcfg;
    TrainConfig tcfg;
    bool baseline = false;
    std::string contrastive = "on";
    std::string cont_tau = "auto";
    fs::path dump_profile;
    fs::path dump_partition;
};

int run_train(const TrainOpts& opts_in) {
    Timer timer;
    TrainOpts opts = opts_in;

    opts.tcfg.contrastive = contrastive_mode_from_string(opts.contrastive);
    if (opts.cont_tau != "auto") {
        bool dummy;
        opts.tcfg.cont_tau = parse_threshold(opts.cont_tau, dummy);
    }
    if (opts.baseline) opts.tcfg.set_baseline();

    SeriesMatrix raw;
    load_labeled(opts.data, opts.label_col, raw); // labels, if any, are dropped for training
    auto [normalized, stats] = minmax_normalize(raw);
    const std::size_t stride = opts.stride == 0 ? opts.window : opts.stride;
    const WindowBatch all = make_windows(normalized, opts.window, stride);
    auto [train_windows, val_windows] = split_train_val(all, opts.val_ratio);

    TrainedModel trained = train(train_windows, val_windows, opts.mcfg, opts.tcfg);

    fs::create_directories(opts.out_dir);
    ModelCheckpoint ckpt{std::move(trained.model), stats, raw.metric_names};
    atomic_write_text(opts.out_dir / "model.json", ckpt.to_json().dump(2) + "\n");
    {
        std::ostringstream buf;
        write_report_jsonl(trained.report, buf);
        atomic_write_text(opts.out_dir / "train_report.jsonl", buf.str());
    }
    if (!opts.dump_profile.empty() && trained.report.final_profile) {
        std::ostringstream buf;
        write_profile_csv(*trained.report.final_profile, buf);
        atomic_write_text(opts.dump_profile, buf.str());
    }
    if (!opts.dump_partition.empty() && trained.report.final_partition) {
        std::ostringstream buf;
        write_partition_csv(*trained.report.final_partition, buf);
        atomic_write_text(opts.dump_partition, buf.str());
    }

    RunManifest manifest;
    manifest.subcommand = "train";
    manifest.seed = opts.tcfg.seed;
    manifest.config = {{"data", opts.data.string()},
                       {"window", opts.window},
                       {"stride", stride},
                       {"val_ratio", opts.val_ratio},
                       {"variant", to_string(opts.mcfg.variant)},
                       {"hidden_time", opts.mcfg.hidden_time},
                       {"hidden_feature", opts.mcfg.hidden_feature},
                       {"encoder_layers", opts.mcfg.encoder_layers},
                       {"epochs", opts.tcfg.epochs},
                       {"batch", opts.tcfg.batch_size},
                       {"lambda", opts.tcfg.lambda},
                       {"awrl", opts.tcfg.awrl},
                       {"contrastive", to_string(opts.tcfg.contrastive)},
                       {"infonce", opts.tcfg.infonce},
                       {"temperature", opts.tcfg.temperature},
                       {"num_s", opts.tcfg.min_cluster_size},
                       {"cont_k", opts.tcfg.knn_k},
                       {"cont_alpha", opts.tcfg.cont_alpha},
                       {"cont_tau", opts.cont_tau},
                       {"optimizer", opts.tcfg.optimizer == OptMethod::adam ? "adam" : "sgd"},
                       {"learning_rate", opts.tcfg.learning_rate},
                       {"patience", opts.tcfg.patience},
                       {"baseline", opts.baseline}};
    manifest.inputs = {opts.data.string()};
    manifest.outputs = {(opts.out_dir / "model.json").string(),
                        (opts.out_dir / "train_report.jsonl").string()};
    finish_manifest(manifest, timer, opts.out_dir / "manifest.json");

    std::cout << "trained " << to_string(opts.mcfg.variant) << " model: best epoch "
              << trained.report.best_epoch << ", val error " << trained.report.best_val_error
              << (trained.report.aborted ? " (aborted: " + trained.report.abort_reason + ")" : "")
              << "\n";
    return trained.report.aborted ? 1 : 0;
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

struct DetectOpts {
    fs::path model;
    fs::path data;
    fs::path out = "report.json";
    std::string label_col = "label";
    std::string threshold = "auto";
    std::size_t stride = 0;
    fs::path dump_scores;
};

ModelCheckpoint load_checkpoint(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open model checkpoint " + path.string());
    nlohmann::json j;
    in >> j;
    return ModelCheckpoint::from_json(j);
}

int run_detect(const DetectOpts& opts) {
    Timer timer;
    ModelCheckpoint ckpt = load_checkpoint(opts.model);

    SeriesMatrix raw;
    const std::optional<LabelVector> labels = load_labeled(opts.data, opts.label_col, raw);
    auto [normalized, stats] = minmax_normalize(raw, ckpt.stats);

    AnomalyReport report;
    report.entity = raw.entity_id;
    report.scores = score_timestamps(ckpt.model, normalized, opts.stride);

    bool auto_threshold = false;
    double threshold = parse_threshold(opts.threshold, auto_threshold);
    if (auto_threshold) {
        if (!labels)
            throw config_error("--threshold auto needs a label column in the data");
        const SweepResult sweep = best_f1_threshold(report.scores, *labels);
        threshold = sweep.threshold;
    }
    report.threshold = threshold;
    report.threshold_mode = auto_threshold ? "auto" : "fixed";
    report.predictions = threshold_labels(report.scores, threshold);
    if (labels) report.eval = evaluate(report.predictions, *labels);

    atomic_write_text(opts.out, report.to_json().dump(2) + "\n");
    if (!opts.dump_scores.empty()) {
        std::ostringstream buf;
        buf.precision(17);
        buf << "timestamp,score,prediction" << (labels ? ",label" : "") << "\n";
        for (std::size_t t = 0; t < report.scores.size(); ++t) {
            buf << t << ',' << report.scores[t] << ',' << static_cast<int>(report.predictions[t]);
            if (labels) buf << ',' << static_cast<int>(labels->labels[t]);
            buf << '\n';
        }
        atomic_write_text(opts.dump_scores, buf.str());
    }

    RunManifest manifest;
    manifest.subcommand = "detect";
    manifest.config = {{"model", opts.model.string()},
                       {"data", opts.data.string()},
                       {"threshold", opts.threshold},
                       {"stride", opts.stride}};
    manifest.inputs = {opts.model.string(), opts.data.string()};
    manifest.outputs = {opts.out.string()};
    finish_manifest(manifest, timer, fs::path(opts.out.string() + ".manifest.json"));

    std::cout << "entity " << report.entity << ": threshold " << report.threshold;
    if (report.eval)
        std::cout << ", precision " << report.eval->metrics.precision << ", recall "
                  << report.eval->metrics.recall << ", f1 " << report.eval->metrics.f1;
    std::cout << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOpts {
    std::vector<fs::path> reports;
    fs::path out = "eval_report.json";
};

int run_eval(const EvalOpts& opts) {
    Timer timer;
    if (opts.reports.empty())
        throw config_error("eval needs at least one --reports file");

    std::vector<Metrics> per_entity;
    nlohmann::json entities = nlohmann::json::array();
    for (const fs::path& path : opts.reports) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open report " + path.string());
        nlohmann::json j;
        in >> j;
        if (!j.contains("metrics"))
            throw eval_error("report " + path.string() +
                             " has no metrics (was detect run without labels?)");
        Metrics m;
        m.precision = j["metrics"]["precision"].get<double>();
        m.recall = j["metrics"]["recall"].get<double>();
        m.f1 = j["metrics"]["f1"].get<double>();
        per_entity.push_back(m);
        entities.push_back({{"entity", j.value("entity", path.stem().string())},
                            {"precision", m.precision},
                            {"recall", m.recall},
                            {"f1", m.f1}});
    }
    const Metrics mean = multi_entity_average(per_entity);

    nlohmann::json out{{"format", "cleanet-eval"},
                       {"format_version", 1},
                       {"entities", entities},
                       {"average", {{"precision", mean.precision},
                                    {"recall", mean.recall},
                                    {"f1", mean.f1}}}};
    atomic_write_text(opts.out, out.dump(2) + "\n");

    RunManifest manifest;
    manifest.subcommand = "eval";
    for (const auto& p : opts.reports) manifest.inputs.push_back(p.string());
    manifest.outputs = {opts.out.string()};
    finish_manifest(manifest, timer, fs::path(opts.out.string() + ".manifest.json"));

    std::cout << "entities " << per_entity.size() << ": mean precision " << mean.precision
              << ", mean recall " << mean.recall << ", mean f1 " << mean.f1 << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchOpts {
    fs::path model;
    fs::path data;
    std::string label_col = "label";
    std::size_t repetitions = 5;
    fs::path out = "bench_report.json";
};

int run_bench(const BenchOpts& opts) {
    Timer timer;
    if (opts.repetitions < 3)
        throw config_error("bench needs at least 3 repetitions");
    ModelCheckpoint ckpt = load_checkpoint(opts.model);

    SeriesMatrix raw;
    load_labeled(opts.data, opts.label_col, raw);
    auto [normalized, stats] = minmax_normalize(raw, ckpt.stats);

    std::vector<double> times;
    std::size_t num_windows = 0;
    for (std::size_t rep = 0; rep < opts.repetitions; ++rep) {
        Timer t;
        const std::vector<double> scores = score_timestamps(ckpt.model, normalized);
        times.push_back(t.seconds());
        num_windows = (normalized.num_timestamps() + ckpt.model.input_width() - 1) /
                      ckpt.model.input_width();
        if (scores.empty()) throw eval_error("no scores produced");
    }
    std::sort(times.begin(), times.end());
    const double median = times[times.size() / 2];
    const double per_window_ms = 1000.0 * median / static_cast<double>(num_windows);

    nlohmann::json out{{"format", "cleanet-bench"},
                       {"format_version", 1},
                       {"repetitions", opts.repetitions},
                       {"median_seconds", median},
                       {"windows", num_windows},
                       {"per_window_ms", per_window_ms},
                       {"parameters", ckpt.model.param_count()},
                       {"macs_per_window", ckpt.model.macs_per_window()},
                       {"peak_rss_kilobytes", peak_rss_kb()}};
    atomic_write_text(opts.out, out.dump(2) + "\n");

    RunManifest manifest;
    manifest.subcommand = "bench";
    manifest.config = {{"repetitions", opts.repetitions}};
    manifest.inputs = {opts.model.string(), opts.data.string()};
    manifest.outputs = {opts.out.string()};
    finish_manifest(manifest, timer, fs::path(opts.out.string() + ".manifest.json"));

    std::cout << "median " << median << " s over " << num_windows << " windows ("
              << per_window_ms << " ms/window), " << ckpt.model.param_count() << " parameters, "
              << ckpt.model.macs_per_window() << " MACs/window\n";
    return 0;
}

// ---------------------------------------------------------------------------
// model info
// ---------------------------------------------------------------------------

struct ModelInfoOpts {
    fs::path model;
    ModelConfig cfg;
    bool from_config = false;
};

int run_model_info(const ModelInfoOpts& opts) {
    std::optional<ConjugateModel> model;
    if (!opts.model.empty()) {
        model.emplace(load_checkpoint(opts.model).model);
    } else if (opts.from_config) {
        model.emplace(opts.cfg);
    } else {
        throw config_error("model info needs --model or explicit --d/--window dimensions");
    }
    const ModelConfig& cfg = model->config();
    std::cout << "variant:         " << to_string(cfg.variant) << "\n"
              << "metrics (d):     " << cfg.metrics << "\n"
              << "window (w):      " << cfg.window << "\n"
              << "hidden time:     " << cfg.hidden_time << "\n"
              << "hidden feature:  " << cfg.hidden_feature << "\n"
              << "encoder layers:  " << cfg.encoder_layers << "\n"
              << "parameters:      " << model->param_count() << "\n"
              << "macs per window: " << model->macs_per_window() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

struct PipelineOpts {
    fs::path manifest;
    fs::path out_dir; // optional override
};

int run_pipeline(const PipelineOpts& opts) {
    std::ifstream in(opts.manifest);
    if (!in) throw io_error("cannot open pipeline manifest " + opts.manifest.string());
    nlohmann::json spec;
    in >> spec;

    const fs::path out_dir =
        !opts.out_dir.empty() ? opts.out_dir : fs::path(spec.value("out_dir", "pipeline_out"));
    const auto seed = spec.value("seed", 0u);

    auto stage = [](const char* name, auto&& fn) {
        try {
            const int rc = fn();
            if (rc != 0)
                throw std::runtime_error(std::string("stage ") + name + " exited with " +
                                         std::to_string(rc));
        } catch (const config_error&) {
            throw;
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("stage ") + name + " failed: " + e.what());
        }
    };

    SynthOpts synth_opts;
    const nlohmann::json jsynth = spec.value("synth", nlohmann::json::object());
    synth_opts.cfg.metrics = jsynth.value("d", 8);
    synth_opts.cfg.train_timestamps = jsynth.value("t", 20000);
    synth_opts.cfg.test_timestamps = jsynth.value("test_t", 10000);
    synth_opts.cfg.contamination_rate = jsynth.value("rho", 0.1);
    synth_opts.cfg.test_anomaly_rate = jsynth.value("test_anomaly_rate", 0.1);
    synth_opts.cfg.salient_fraction = jsynth.value("salient_fraction", 0.5);
    synth_opts.cfg.seed = seed;
    synth_opts.out_dir = out_dir / "data";
    stage("synth", [&] { return run_synth(synth_opts); });

    TrainOpts train_opts;
    const nlohmann::json jtrain = spec.value("train", nlohmann::json::object());
    train_opts.data = synth_opts.out_dir / "train.csv";
    train_opts.out_dir = out_dir / "model";
    train_opts.window = jtrain.value("window", 100);
    train_opts.stride = jtrain.value("stride", 0);
    train_opts.val_ratio = jtrain.value("val_ratio", 0.8);
    train_opts.mcfg.variant = variant_from_string(jtrain.value("variant", "conjugate"));
    train_opts.mcfg.hidden_time = jtrain.value("hidden", 16);
    train_opts.mcfg.hidden_feature = jtrain.value("hidden_feature", 16);
    train_opts.mcfg.encoder_layers = jtrain.value("layers", 1);
    train_opts.tcfg.epochs = jtrain.value("epochs", 50);
    train_opts.tcfg.batch_size = jtrain.value("batch", 64);
    train_opts.tcfg.lambda = jtrain.value("lambda", 0.1);
    train_opts.tcfg.seed = seed;
    train_opts.baseline = jtrain.value("baseline", false);
    train_opts.contrastive = jtrain.value("contrastive", "on");
    stage("train", [&] { return run_train(train_opts); });

    DetectOpts detect_opts;
    const nlohmann::json jdetect = spec.value("detect", nlohmann::json::object());
    detect_opts.model = train_opts.out_dir / "model.json";
    detect_opts.data = synth_opts.out_dir / "test.csv";
    detect_opts.out = out_dir / "report.json";
    detect_opts.threshold = jdetect.value("threshold", "auto");
    detect_opts.dump_scores = out_dir / "scores.csv";
    stage("detect", [&] { return run_detect(detect_opts); });

    EvalOpts eval_opts;
    eval_opts.reports = {detect_opts.out};
    eval_opts.out = out_dir / "eval_report.json";
    stage("eval", [&] { return run_eval(eval_opts); });

    std::cout << "pipeline complete: " << out_dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"contamination-resilient multivariate time-series anomaly detection"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint32_t seed = 0;
    app.add_option("--seed", seed, "master random seed")
        ->envname("CLEANET_SEED")
        ->capture_default_str();
    unsigned threads = 1;
    app.add_option("--threads", threads, "worker thread cap for parallel sections")
        ->capture_default_str();

    // synth
    SynthOpts synth_opts;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate contaminated synthetic data");
    synth_cmd->add_option("--d", synth_opts.cfg.metrics, "metric count")->capture_default_str();
    synth_cmd->add_option("--t", synth_opts.cfg.train_timestamps, "training timestamps")
        ->capture_default_str();
    synth_cmd->add_option("--test-t", synth_opts.cfg.test_timestamps, "test timestamps")
        ->capture_default_str();
    synth_cmd->add_option("--rho", synth_opts.cfg.contamination_rate,
                          "training contamination rate")
        ->capture_default_str();
    synth_cmd->add_option("--test-anomaly-rate", synth_opts.cfg.test_anomaly_rate,
                          "test anomaly rate")
        ->capture_default_str();
    synth_cmd->add_option("--salient-fraction", synth_opts.cfg.salient_fraction,
                          "share of injected timestamps that are salient")
        ->capture_default_str();
    synth_cmd->add_option("--out-dir", synth_opts.out_dir, "output directory")->required();

    // train
    TrainOpts train_opts;
    std::string variant = "conjugate";
    std::string optimizer = "adam";
    CLI::App* train_cmd = app.add_subcommand("train", "train a detector on a CSV series");
    train_cmd->add_option("--data", train_opts.data, "training CSV")->required();
    train_cmd->add_option("--out", train_opts.out_dir, "output directory")->required();
    train_cmd->add_option("--label-col", train_opts.label_col,
                          "label column name (dropped from training data)")
        ->capture_default_str();
    train_cmd->add_option("--window", train_opts.window, "window length")->capture_default_str();
    train_cmd->add_option("--stride", train_opts.stride, "window stride (0 = window length)")
        ->capture_default_str();
    train_cmd->add_option("--val-ratio", train_opts.val_ratio, "train fraction of windows")
        ->capture_default_str();
    train_cmd->add_option("--variant", variant, "model variant")
        ->check(CLI::IsMember({"conjugate", "flattened", "time_only", "feature_only"}))
        ->capture_default_str();
    train_cmd->add_option("--hidden", train_opts.mcfg.hidden_time, "time-encoder width")
        ->capture_default_str();
    train_cmd
        ->add_option("--hidden-feature", train_opts.mcfg.hidden_feature, "feature-encoder width")
        ->capture_default_str();
    train_cmd->add_option("--layers", train_opts.mcfg.encoder_layers, "encoder depth")
        ->capture_default_str();
    train_cmd->add_option("--epochs", train_opts.tcfg.epochs, "max epochs")->capture_default_str();
    train_cmd->add_option("--batch", train_opts.tcfg.batch_size, "batch size")
        ->capture_default_str();
    CLI::Option* lambda_opt =
        train_cmd->add_option("--lambda", train_opts.tcfg.lambda, "contrastive loss weight")
            ->capture_default_str();
    CLI::Option* baseline_opt = train_cmd->add_flag(
        "--baseline", train_opts.baseline, "plain autoencoder: no reweighting, no contrastive");
    train_cmd->add_option("--contrastive", train_opts.contrastive, "contrastive mode")
        ->check(CLI::IsMember({"on", "off", "simclr"}))
        ->capture_default_str();
    train_cmd->add_flag("--infonce", train_opts.tcfg.infonce,
                        "include positives in the contrastive denominator");
    train_cmd->add_option("--temp", train_opts.tcfg.temperature, "contrastive temperature")
        ->capture_default_str();
    train_cmd->add_option("--num-s", train_opts.tcfg.min_cluster_size,
                          "minimum in-batch cluster size for anchors")
        ->capture_default_str();
    train_cmd->add_option("--simclr-sigma", train_opts.tcfg.simclr_sigma,
                          "jitter noise for simclr mode")
        ->capture_default_str();
    train_cmd->add_option("--cont-k", train_opts.tcfg.knn_k, "neighbor count for scoring")
        ->capture_default_str();
    train_cmd->add_option("--cont-alpha", train_opts.tcfg.cont_alpha, "weight sharpness")
        ->capture_default_str();
    train_cmd->add_option("--cont-tau", train_opts.cont_tau, "weight midpoint (auto or number)")
        ->capture_default_str();
    train_cmd->add_option("--optimizer", optimizer, "adam or sgd")
        ->check(CLI::IsMember({"adam", "sgd"}))
        ->capture_default_str();
    train_cmd->add_option("--lr", train_opts.tcfg.learning_rate, "learning rate")
        ->capture_default_str();
    train_cmd->add_option("--patience", train_opts.tcfg.patience, "early-stop patience")
        ->capture_default_str();
    train_cmd->add_option("--dump-profile", train_opts.dump_profile,
                          "write the final contamination profile CSV here");
    train_cmd->add_option("--dump-partition", train_opts.dump_partition,
                          "write the final cluster partition CSV here");

    // detect
    DetectOpts detect_opts;
    CLI::App* detect_cmd = app.add_subcommand("detect", "score a series with a trained model");
    detect_cmd->add_option("--model", detect_opts.model, "model checkpoint")->required();
    detect_cmd->add_option("--data", detect_opts.data, "CSV to score")->required();
    detect_cmd->add_option("--out", detect_opts.out, "report path")->capture_default_str();
    detect_cmd->add_option("--label-col", detect_opts.label_col, "label column name")
        ->capture_default_str();
    detect_cmd->add_option("--threshold", detect_opts.threshold, "auto or a fixed number")
        ->capture_default_str();
    detect_cmd->add_option("--stride", detect_opts.stride, "detection stride (0 = window length)")
        ->capture_default_str();
    detect_cmd->add_option("--dump-scores", detect_opts.dump_scores,
                           "write per-timestamp scores CSV here");

    // eval
    EvalOpts eval_opts;
    CLI::App* eval_cmd = app.add_subcommand("eval", "aggregate detection reports across entities");
    eval_cmd->add_option("--reports", eval_opts.reports, "report.json files")
        ->required()
        ->expected(-1);
    eval_cmd->add_option("--out", eval_opts.out, "aggregate output path")->capture_default_str();

    // bench
    BenchOpts bench_opts;
    CLI::App* bench_cmd = app.add_subcommand("bench", "measure inference efficiency");
    bench_cmd->add_option("--model", bench_opts.model, "model checkpoint")->required();
    bench_cmd->add_option("--data", bench_opts.data, "CSV to score")->required();
    bench_cmd->add_option("--reps", bench_opts.repetitions, "repetitions (median reported)")
        ->capture_default_str();
    bench_cmd->add_option("--label-col", bench_opts.label_col, "label column name")
        ->capture_default_str();
    bench_cmd->add_option("--out", bench_opts.out, "bench report path")->capture_default_str();

    // model info
    ModelInfoOpts info_opts;
    CLI::App* model_cmd = app.add_subcommand("model", "model utilities");
    model_cmd->require_subcommand(1);
    CLI::App* info_cmd =
        model_cmd->add_subcommand("info", "print parameter count and MACs estimate");
    info_cmd->add_option("--model", info_opts.model, "model checkpoint");
    CLI::Option* info_d = info_cmd->add_option("--d", info_opts.cfg.metrics, "metric count");
    info_cmd->add_option("--window", info_opts.cfg.window, "window length")->capture_default_str();
    info_cmd->add_option("--hidden", info_opts.cfg.hidden_time, "time-encoder width")
        ->capture_default_str();
    info_cmd->add_option("--hidden-feature", info_opts.cfg.hidden_feature, "feature-encoder width")
        ->capture_default_str();
    info_cmd->add_option("--layers", info_opts.cfg.encoder_layers, "encoder depth")
        ->capture_default_str();
    std::string info_variant = "conjugate";
    info_cmd->add_option("--variant", info_variant, "model variant")
        ->check(CLI::IsMember({"conjugate", "flattened", "time_only", "feature_only"}))
        ->capture_default_str();

    // pipeline
    PipelineOpts pipeline_opts;
    CLI::App* pipeline_cmd =
        app.add_subcommand("pipeline", "run synth -> train -> detect -> eval from a manifest");
    pipeline_cmd->add_option("--manifest", pipeline_opts.manifest, "pipeline manifest JSON")
        ->required();
    pipeline_cmd->add_option("--out-dir", pipeline_opts.out_dir, "override the output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        set_max_threads(threads);
        if (synth_cmd->parsed()) {
            synth_opts.cfg.seed = seed;
            return run_synth(synth_opts);
        }
        if (train_cmd->parsed()) {
            if (train_opts.baseline && lambda_opt->count() > 0 && train_opts.tcfg.lambda != 0.0)
                throw config_error("--baseline conflicts with a nonzero --lambda");
            (void)baseline_opt;
            train_opts.tcfg.seed = seed;
            train_opts.mcfg.variant = variant_from_string(variant);
            train_opts.tcfg.optimizer = opt_method_from_string(optimizer);
            return run_train(train_opts);
        }
        if (detect_cmd->parsed()) return run_detect(detect_opts);
        if (eval_cmd->parsed()) return run_eval(eval_opts);
        if (bench_cmd->parsed()) return run_bench(bench_opts);
        if (model_cmd->parsed() && info_cmd->parsed()) {
            info_opts.from_config = info_d->count() > 0;
            info_opts.cfg.variant = variant_from_string(info_variant);
            return run_model_info(info_opts);
        }
        if (pipeline_cmd->parsed()) return run_pipeline(pipeline_opts);
        throw config_error("no subcommand selected");
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
