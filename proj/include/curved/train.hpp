#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "curved/confusion.hpp"
#include "curved/datagen.hpp"
#include "curved/errors.hpp"
#include "curved/io.hpp"
#include "curved/losses.hpp"
#include "curved/metric.hpp"
#include "curved/network.hpp"
#include "curved/rng.hpp"
#include "curved/types.hpp"

namespace curved {

/// How often the EMA absorbs fresh confusion statistics and the metric is
/// rebuilt: once per epoch (default) or after every batch.
enum class MetricCadence { PerEpoch, PerBatch };

inline const char* to_string(MetricCadence c) {
    return c == MetricCadence::PerEpoch ? "epoch" : "batch";
}

inline MetricCadence parse_cadence(const std::string& name) {
    if (name == "epoch") return MetricCadence::PerEpoch;
    if (name == "batch") return MetricCadence::PerBatch;
    throw ValidationError("unknown cadence '" + name + "' (expected epoch or batch)");
}

/// Substream tags for deriving independent random streams from one seed.
namespace seed_stream {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kShuffle = 4;
}  // namespace seed_stream

/// Full declarative description of a training run. The single seed drives
/// data generation, the split, weight initialization and batch shuffling
/// through derived substreams, so a config plus seed pins the trajectory.
struct ExperimentConfig {
    std::string dataset_csv;  // empty: use the generator below
    bool csv_header = false;
    HierarchySpec gen;
    double train_frac = 0.7;

    std::vector<Index> hidden_dims{32};

    LossKind loss = LossKind::CrossEntropy;
    MetricConfig metric;
    MetricCadence cadence = MetricCadence::PerEpoch;

    double lr = 0.05;
    double momentum = 0.9;
    Index epochs = 50;
    Index batch_size = 32;
    std::uint64_t seed = 1;

    std::string out_dir;  // empty: keep everything in memory

    void validate() const {
        if (dataset_csv.empty()) gen.validate();
        if (!(train_frac > 0.0) || !(train_frac < 1.0))
            throw ValidationError("config: train_frac must lie in (0, 1)");
        for (Index h : hidden_dims)
            if (h < 1) throw ValidationError("config: hidden layer widths must be positive");
        metric.validate();
        if (!(lr > 0.0)) throw ValidationError("config: learning rate must be positive");
        if (momentum < 0.0 || momentum >= 1.0)
            throw ValidationError("config: momentum must lie in [0, 1)");
        if (epochs < 1) throw ValidationError("config: epochs must be >= 1");
        if (batch_size < 1) throw ValidationError("config: batch_size must be >= 1");
    }

    /// Deterministic echo of the experiment identity. Does not include the
    /// output directory, which is a runtime location rather than part of the
    /// experiment.
    io::json to_json() const {
        io::json doc;
        doc["dataset"] = {{"csv", dataset_csv},
                          {"csv_header", csv_header},
                          {"generator",
                           {{"n_super", gen.n_super},
                            {"per_super", gen.per_super},
                            {"d", gen.d},
                            {"super_sep", gen.super_sep},
                            {"sub_sep", gen.sub_sep},
                            {"noise_sigma", gen.noise_sigma},
                            {"n_per_class", gen.n_per_class}}}};
        doc["train_frac"] = train_frac;
        doc["hidden_dims"] = hidden_dims;
        doc["loss"] = to_string(loss);
        io::json metric_doc = {{"scale", metric.scale},
                               {"lambda", metric.lambda},
                               {"cadence", to_string(cadence)}};
        if (metric.clamp_max)
            metric_doc["clamp_max"] = *metric.clamp_max;
        else
            metric_doc["clamp_max"] = nullptr;
        doc["metric"] = std::move(metric_doc);
        doc["optimizer"] = {{"lr", lr}, {"momentum", momentum}};
        doc["epochs"] = epochs;
        doc["batch_size"] = batch_size;
        doc["seed"] = seed;
        return doc;
    }

    static ExperimentConfig from_json(const io::json& doc) {
        ExperimentConfig cfg;
        auto get = [](const io::json& obj, const char* key) -> const io::json* {
            auto it = obj.find(key);
            return it == obj.end() ? nullptr : &*it;
        };
        auto check_keys = [](const io::json& obj, std::initializer_list<const char*> known,
                             const std::string& where) {
            for (auto it = obj.begin(); it != obj.end(); ++it) {
                bool ok = false;
                for (const char* k : known) ok = ok || it.key() == k;
                if (!ok)
                    throw ValidationError("config: unknown key '" + it.key() + "' in " + where);
            }
        };
        try {
            check_keys(doc,
                       {"dataset", "train_frac", "hidden_dims", "loss", "metric", "optimizer",
                        "epochs", "batch_size", "seed", "out"},
                       "top level");
            if (const auto* ds = get(doc, "dataset")) {
                check_keys(*ds, {"csv", "csv_header", "generator"}, "dataset");
                if (const auto* v = get(*ds, "csv")) cfg.dataset_csv = v->get<std::string>();
                if (const auto* v = get(*ds, "csv_header")) cfg.csv_header = v->get<bool>();
                if (const auto* g = get(*ds, "generator")) {
                    check_keys(*g,
                               {"n_super", "per_super", "d", "super_sep", "sub_sep",
                                "noise_sigma", "n_per_class"},
                               "dataset.generator");
                    if (const auto* v = get(*g, "n_super")) cfg.gen.n_super = v->get<Index>();
                    if (const auto* v = get(*g, "per_super")) cfg.gen.per_super = v->get<Index>();
                    if (const auto* v = get(*g, "d")) cfg.gen.d = v->get<Index>();
                    if (const auto* v = get(*g, "super_sep")) cfg.gen.super_sep = v->get<double>();
                    if (const auto* v = get(*g, "sub_sep")) cfg.gen.sub_sep = v->get<double>();
                    if (const auto* v = get(*g, "noise_sigma"))
                        cfg.gen.noise_sigma = v->get<double>();
                    if (const auto* v = get(*g, "n_per_class"))
                        cfg.gen.n_per_class = v->get<Index>();
                }
            }
            if (const auto* v = get(doc, "train_frac")) cfg.train_frac = v->get<double>();
            if (const auto* v = get(doc, "hidden_dims"))
                cfg.hidden_dims = v->get<std::vector<Index>>();
            if (const auto* v = get(doc, "loss")) cfg.loss = parse_loss_kind(v->get<std::string>());
            if (const auto* m = get(doc, "metric")) {
                check_keys(*m, {"scale", "lambda", "clamp_max", "cadence"}, "metric");
                if (const auto* v = get(*m, "scale")) cfg.metric.scale = v->get<double>();
                if (const auto* v = get(*m, "lambda")) cfg.metric.lambda = v->get<double>();
                if (const auto* v = get(*m, "clamp_max")) {
                    if (!v->is_null()) cfg.metric.clamp_max = v->get<double>();
                }
                if (const auto* v = get(*m, "cadence"))
                    cfg.cadence = parse_cadence(v->get<std::string>());
            }
            if (const auto* o = get(doc, "optimizer")) {
                check_keys(*o, {"lr", "momentum"}, "optimizer");
                if (const auto* v = get(*o, "lr")) cfg.lr = v->get<double>();
                if (const auto* v = get(*o, "momentum")) cfg.momentum = v->get<double>();
            }
            if (const auto* v = get(doc, "epochs")) cfg.epochs = v->get<Index>();
            if (const auto* v = get(doc, "batch_size")) cfg.batch_size = v->get<Index>();
            if (const auto* v = get(doc, "seed")) cfg.seed = v->get<std::uint64_t>();
            if (const auto* v = get(doc, "out")) cfg.out_dir = v->get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("config: ") + e.what());
        }
        return cfg;
    }
};

/// Min/mean/max of the off-diagonal metric entries; all zero under the
/// identity metric.
struct MetricSummary {
    double off_min = 0.0;
    double off_mean = 0.0;
    double off_max = 0.0;

    static MetricSummary of(const Metric& m) {
        MetricSummary s;
        const Index k = m.k();
        s.off_min = m.tensor()(0, 1);
        s.off_max = s.off_min;
        double sum = 0.0;
        for (Index a = 0; a < k; ++a) {
            for (Index b = 0; b < k; ++b) {
                if (a == b) continue;
                const double v = m.tensor()(a, b);
                s.off_min = std::min(s.off_min, v);
                s.off_max = std::max(s.off_max, v);
                sum += v;
            }
        }
        s.off_mean = sum / static_cast<double>(k * (k - 1));
        return s;
    }
};

/// One epoch of results. wall_ms is informational only and deliberately kept
/// out of the serialized record so report streams are reproducible.
struct EpochReport {
    Index epoch = 0;
    double train_loss = 0.0;
    double test_accuracy = 0.0;
    CountMatrix confusion;
    MetricSummary metric_summary;  // the metric the epoch trained under
    double wall_ms = 0.0;

    io::json to_json() const {
        io::json doc;
        doc["epoch"] = epoch;
        doc["train_loss"] = train_loss;
        doc["test_accuracy"] = test_accuracy;
        io::json conf = io::json::array();
        for (Index r = 0; r < confusion.rows(); ++r) {
            io::json row = io::json::array();
            for (Index c = 0; c < confusion.cols(); ++c) row.push_back(confusion(r, c));
            conf.push_back(std::move(row));
        }
        doc["confusion"] = std::move(conf);
        doc["metric_offdiag"] = {{"min", metric_summary.off_min},
                                 {"mean", metric_summary.off_mean},
                                 {"max", metric_summary.off_max}};
        return doc;
    }
};

/// Owns one training run: dataset, network state, confusion EMA and the
/// metric currently in effect. Epoch 0 always trains under the identity
/// metric; curved losses pick up the history-built metric afterwards.
class TrainRun {
public:
    explicit TrainRun(ExperimentConfig cfg)
        : cfg_(std::move(cfg)), active_metric_(Metric::identity(2)), ema_(EmaState(2, 1.0)) {
        cfg_.validate();
        prepare_data();
        const Index k = train_.k;
        std::vector<Index> dims;
        dims.push_back(train_.d());
        dims.insert(dims.end(), cfg_.hidden_dims.begin(), cfg_.hidden_dims.end());
        dims.push_back(k);
        state_ = TrainState::fresh(
            init_network(dims, Rng::derive(cfg_.seed, seed_stream::kInit)), cfg_.seed);
        ema_ = EmaState(k, cfg_.metric.lambda);
        active_metric_ = Metric::identity(k);
    }

    /// Restores a run from a checkpoint document; training continues from the
    /// recorded epoch with the recorded optimizer and EMA state.
    static TrainRun from_checkpoint(const io::json& checkpoint,
                                    std::optional<Index> epochs_override = std::nullopt,
                                    const std::string& out_dir = {}) {
        ExperimentConfig cfg = ExperimentConfig::from_json(checkpoint.at("config"));
        if (epochs_override) cfg.epochs = *epochs_override;
        cfg.out_dir = out_dir;
        TrainRun run(cfg);
        try {
            const auto loaded =
                io::network_from_json(checkpoint.at("network"), "checkpoint.network");
            if (loaded.net.layer_dims != run.state_.net.layer_dims)
                throw ValidationError("checkpoint: network shape does not match config");
            run.state_.net = loaded.net;
            run.state_.epoch = checkpoint.at("epochs_done").get<std::int64_t>();
            const io::json& vel = checkpoint.at("velocity");
            run.state_.velocity.weights.clear();
            run.state_.velocity.biases.clear();
            for (const auto& w : vel.at("weights"))
                run.state_.velocity.weights.push_back(io::matrix_from_json(w, "checkpoint"));
            for (const auto& b : vel.at("biases"))
                run.state_.velocity.biases.push_back(io::vector_from_json(b, "checkpoint"));
            run.ema_ = io::ema_from_json(checkpoint.at("ema"), "checkpoint.ema");
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("checkpoint: ") + e.what());
        }
        if (run.ema_.k() != run.train_.k)
            throw ValidationError("checkpoint: EMA class count does not match dataset");
        run.refresh_active_metric();
        return run;
    }

    const ExperimentConfig& config() const { return cfg_; }
    const Dataset& train_set() const { return train_; }
    const Dataset& test_set() const { return test_; }
    const TrainState& state() const { return state_; }
    const EmaState& ema() const { return ema_; }
    const Metric& active_metric() const { return active_metric_; }
    const std::vector<std::string>& data_warnings() const { return data_warnings_; }
    bool finished() const { return state_.epoch >= cfg_.epochs; }

    /// Metric manufactured from the accumulated confusion history; this is
    /// what gets exported at the end of a run regardless of the loss used.
    Metric exported_metric() const { return metric_from_history(ema_, cfg_.metric); }

    double evaluate_accuracy() const {
        const MatrixX<double> probs = forward(state_.net, test_.features);
        Index correct = 0;
        for (Index i = 0; i < probs.rows(); ++i)
            if (argmax_row(probs, i) == test_.labels[static_cast<std::size_t>(i)]) ++correct;
        return static_cast<double>(correct) / static_cast<double>(probs.rows());
    }

    EpochReport run_epoch() {
        const auto start = std::chrono::steady_clock::now();
        const Index k = train_.k;
        const Index n = train_.n();
        const MetricSummary active_summary = MetricSummary::of(active_metric_);

        std::vector<Index> order(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        Rng shuffle_rng(Rng::derive(Rng::derive(cfg_.seed, seed_stream::kShuffle),
                                    static_cast<std::uint64_t>(state_.epoch)));
        shuffle_rng.shuffle(order);

        ConfusionAccumulator epoch_counts(k);
        double loss_sum = 0.0;
        for (Index begin = 0; begin < n; begin += cfg_.batch_size) {
            const Index size = std::min<Index>(cfg_.batch_size, n - begin);
            Batch batch;
            batch.inputs.resize(size, train_.d());
            batch.labels.reserve(static_cast<std::size_t>(size));
            for (Index i = 0; i < size; ++i) {
                const Index row = order[static_cast<std::size_t>(begin + i)];
                batch.inputs.row(i) = train_.features.row(row);
                batch.labels.push_back(train_.labels[static_cast<std::size_t>(row)]);
            }

            const MatrixX<double> probs = forward(state_.net, batch.inputs);
            if (!probs.allFinite())
                throw NumericError("training aborted: non-finite network output at epoch " +
                                   std::to_string(state_.epoch));
            MatrixX<double> loss_grads(size, k);
            ConfusionAccumulator batch_counts(k);
            for (Index i = 0; i < size; ++i) {
                const OneHotLabel y(batch.labels[static_cast<std::size_t>(i)], k);
                const ProbVector yhat(probs.row(i).transpose());
                const double value = loss_value(cfg_.loss, active_metric_, y, yhat);
                if (!std::isfinite(value))
                    throw NumericError("training aborted: non-finite loss at epoch " +
                                       std::to_string(state_.epoch));
                loss_sum += value;
                loss_grads.row(i) =
                    loss_gradient(cfg_.loss, active_metric_, y, yhat).grad.transpose();
                const Index predicted = argmax_row(probs, i);
                epoch_counts.record(y.class_index, predicted);
                if (cfg_.cadence == MetricCadence::PerBatch)
                    batch_counts.record(y.class_index, predicted);
            }

            const Gradients grads = backward(state_.net, batch, loss_grads);
            sgd_step(state_, grads, cfg_.lr, cfg_.momentum);

            if (cfg_.cadence == MetricCadence::PerBatch) {
                ema_.update(normalize(batch_counts));
                refresh_active_metric();
            }
        }

        if (cfg_.cadence == MetricCadence::PerEpoch) ema_.update(normalize(epoch_counts));
        ++state_.epoch;
        refresh_active_metric();

        EpochReport report;
        report.epoch = state_.epoch - 1;
        report.train_loss = loss_sum / static_cast<double>(n);
        report.test_accuracy = evaluate_accuracy();
        report.confusion = epoch_counts.counts();
        report.metric_summary = active_summary;
        report.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
        return report;
    }

    io::json checkpoint_json() const {
        io::json doc;
        doc["config"] = cfg_.to_json();
        doc["epochs_done"] = state_.epoch;
        doc["network"] = io::network_to_json(state_.net, cfg_.seed, state_.epoch);
        io::json vel;
        io::json vw = io::json::array();
        for (const auto& w : state_.velocity.weights) vw.push_back(io::matrix_to_json(w));
        io::json vb = io::json::array();
        for (const auto& b : state_.velocity.biases) vb.push_back(io::vector_to_json(b));
        vel["weights"] = std::move(vw);
        vel["biases"] = std::move(vb);
        doc["velocity"] = std::move(vel);
        doc["ema"] = io::ema_to_json(ema_);
        return doc;
    }

private:
    void prepare_data() {
        Dataset full;
        if (!cfg_.dataset_csv.empty()) {
            LoadedCsv loaded = load_csv(cfg_.dataset_csv, cfg_.csv_header);
            data_warnings_ = loaded.warnings;
            full = std::move(loaded.data);
            if (full.k < 2)
                throw ValidationError("dataset: need at least 2 classes, got " +
                                      std::to_string(full.k));
        } else {
            HierarchySpec spec = cfg_.gen;
            spec.seed = Rng::derive(cfg_.seed, seed_stream::kData);
            full = generate(spec);
        }
        auto parts = split(full, cfg_.train_frac, Rng::derive(cfg_.seed, seed_stream::kSplit));
        train_ = std::move(parts.first);
        test_ = std::move(parts.second);
    }

    /// Curved losses train under the history metric once statistics exist;
    /// everything else stays on the identity metric.
    void refresh_active_metric() {
        if (is_curved(cfg_.loss) && ema_.t() >= 1)
            active_metric_ = metric_from_history(ema_, cfg_.metric);
    }

    ExperimentConfig cfg_;
    Dataset train_;
    Dataset test_;
    std::vector<std::string> data_warnings_;
    TrainState state_;
    Metric active_metric_;
    EmaState ema_;
};

/// Summary of a finished run. The exported metric is always the one built
/// from the confusion EMA, even for flat-loss runs.
struct RunResult {
    std::vector<EpochReport> reports;
    double final_test_accuracy = 0.0;
    Metric final_metric;
    std::vector<Index> superclass_of;

    RunResult() : final_metric(Metric::identity(2)) {}
};

namespace detail {

inline void write_run_artifacts_begin(const ExperimentConfig& cfg, std::ofstream& reports_out,
                                      std::ofstream& log_out) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string base = cfg.out_dir + "/";
    io::write_text_file(base + "config.json", cfg.to_json().dump(2) + "\n");
    reports_out = io::open_output(base + "epoch_reports.jsonl");
    log_out = io::open_output(base + "run.log");
}

inline void write_run_artifacts_end(const ExperimentConfig& cfg, const TrainRun& run) {
    const std::string base = cfg.out_dir + "/";
    io::write_network_json(base + "final_network.json", run.state().net, cfg.seed,
                           run.state().epoch);
    io::write_ema_json(base + "ema.json", run.ema());
    const Metric metric = run.exported_metric();
    io::write_metric_csv(base + "final_metric.csv", metric);
    io::json provenance = {{"source", "training-ema"},
                           {"loss", to_string(cfg.loss)},
                           {"scale", cfg.metric.scale},
                           {"lambda", cfg.metric.lambda},
                           {"epochs", run.state().epoch},
                           {"seed", cfg.seed}};
    io::write_metric_json(base + "final_metric.json", metric, provenance);
    io::write_matrix_csv(base + "distance_report.csv", distance_report(metric));

    const MetricSummary summary = MetricSummary::of(metric);
    std::string text;
    text += "epochs: " + std::to_string(run.state().epoch) + "\n";
    text += "final test accuracy: " + io::format_double(run.evaluate_accuracy()) + "\n";
    text += "exported metric off-diagonal: min " + io::format_double(summary.off_min) +
            ", mean " + io::format_double(summary.off_mean) + ", max " +
            io::format_double(summary.off_max) + "\n";
    text += "exported metric smallest eigenvalue: " + io::format_double(metric.min_eigenvalue()) +
            "\n";
    io::write_text_file(base + "summary.txt", text);
}

}  // namespace detail

/// Trains to cfg.epochs, writing per-epoch reports, a rolling checkpoint and
/// final exports when an output directory is configured. Reports written so
/// far survive a numeric abort.
inline RunResult drive_run(TrainRun& run) {
    const ExperimentConfig& cfg = run.config();
    const bool with_artifacts = !cfg.out_dir.empty();
    std::ofstream reports_out, log_out;
    if (with_artifacts) {
        detail::write_run_artifacts_begin(cfg, reports_out, log_out);
        for (const auto& w : run.data_warnings()) log_out << "warning: " << w << '\n';
    }

    RunResult result;
    while (!run.finished()) {
        EpochReport report = run.run_epoch();
        if (with_artifacts) {
            reports_out << report.to_json().dump() << '\n';
            reports_out.flush();
            log_out << "epoch " << report.epoch << ": loss " << report.train_loss
                    << ", test accuracy " << report.test_accuracy << ", wall "
                    << report.wall_ms << " ms\n";
            log_out.flush();
            io::write_text_file(cfg.out_dir + "/checkpoint.json",
                                run.checkpoint_json().dump(2) + "\n");
        }
        result.reports.push_back(std::move(report));
    }

    result.final_test_accuracy = run.evaluate_accuracy();
    result.final_metric = run.exported_metric();
    result.superclass_of = run.train_set().superclass_of;
    if (with_artifacts) detail::write_run_artifacts_end(cfg, run);
    return result;
}

inline RunResult run_train(const ExperimentConfig& cfg) {
    TrainRun run(cfg);
    return drive_run(run);
}

/// Resumes from a checkpoint file into a fresh output directory.
inline RunResult resume_train(const std::string& checkpoint_path, const std::string& out_dir,
                              std::optional<Index> epochs_override = std::nullopt) {
    const io::json checkpoint = io::parse_json_file(checkpoint_path);
    TrainRun run = TrainRun::from_checkpoint(checkpoint, epochs_override, out_dir);
    if (run.finished())
        throw ValidationError("resume: checkpoint already has " +
                              std::to_string(run.state().epoch) +
                              " epochs; raise --epochs to continue");
    return drive_run(run);
}

// ---------------------------------------------------------------------------
// Paired comparison runs
// ---------------------------------------------------------------------------

struct CompareRow {
    std::uint64_t seed = 0;
    double accuracy_a = 0.0;
    double accuracy_b = 0.0;
    double delta = 0.0;  // accuracy_b - accuracy_a
};

/// Descriptive summary of paired runs: per-seed accuracy deltas, their mean
/// and a sign count. No judgment is made about which side should win.
struct CompareReport {
    std::string loss_a;
    std::string loss_b;
    std::vector<CompareRow> rows;
    double mean_delta = 0.0;
    int n_positive = 0;
    int n_negative = 0;
    int n_zero = 0;

    io::json to_json() const {
        io::json doc;
        doc["loss_a"] = loss_a;
        doc["loss_b"] = loss_b;
        io::json rows_doc = io::json::array();
        for (const auto& row : rows)
            rows_doc.push_back({{"seed", row.seed},
                                {"accuracy_a", row.accuracy_a},
                                {"accuracy_b", row.accuracy_b},
                                {"delta", row.delta}});
        doc["rows"] = std::move(rows_doc);
        doc["mean_delta"] = mean_delta;
        doc["sign_summary"] = {{"positive", n_positive}, {"negative", n_negative},
                               {"zero", n_zero}};
        return doc;
    }

    std::string to_text() const {
        std::string text = "paired comparison: A = " + loss_a + ", B = " + loss_b + "\n";
        for (const auto& row : rows)
            text += "seed " + std::to_string(row.seed) + ": A " +
                    io::format_double(row.accuracy_a) + ", B " +
                    io::format_double(row.accuracy_b) + ", delta " +
                    io::format_double(row.delta) + "\n";
        text += "mean delta (B - A): " + io::format_double(mean_delta) + "\n";
        text += "signs: " + std::to_string(n_positive) + " positive, " +
                std::to_string(n_negative) + " negative, " + std::to_string(n_zero) + " zero\n";
        return text;
    }
};

namespace detail {

/// Copy with the loss/metric settings reset, leaving only the fields two
/// comparable configs must share.
inline io::json non_loss_fingerprint(ExperimentConfig cfg) {
    cfg.loss = LossKind::Mse;
    cfg.metric = MetricConfig{};
    cfg.cadence = MetricCadence::PerEpoch;
    cfg.out_dir.clear();
    return cfg.to_json();
}

}  // namespace detail

/// Runs both configs over n_seeds paired seeds (base seed + i). The configs
/// must be identical apart from the loss and metric settings.
inline CompareReport run_compare(const ExperimentConfig& a, const ExperimentConfig& b,
                                 int n_seeds) {
    a.validate();
    b.validate();
    if (n_seeds < 1) throw ValidationError("compare: need at least one seed");
    if (detail::non_loss_fingerprint(a) != detail::non_loss_fingerprint(b))
        throw ValidationError(
            "compare: configs differ outside the loss/metric settings; only loss, metric "
            "scale/lambda/clamp and cadence may vary");

    CompareReport report;
    report.loss_a = to_string(a.loss);
    report.loss_b = to_string(b.loss);
    for (int i = 0; i < n_seeds; ++i) {
        ExperimentConfig cfg_a = a;
        ExperimentConfig cfg_b = b;
        cfg_a.seed = a.seed + static_cast<std::uint64_t>(i);
        cfg_b.seed = cfg_a.seed;
        cfg_a.out_dir.clear();
        cfg_b.out_dir.clear();
        CompareRow row;
        row.seed = cfg_a.seed;
        row.accuracy_a = run_train(cfg_a).final_test_accuracy;
        row.accuracy_b = run_train(cfg_b).final_test_accuracy;
        row.delta = row.accuracy_b - row.accuracy_a;
        if (row.delta > 0)
            ++report.n_positive;
        else if (row.delta < 0)
            ++report.n_negative;
        else
            ++report.n_zero;
        report.mean_delta += row.delta;
        report.rows.push_back(row);
    }
    report.mean_delta /= static_cast<double>(n_seeds);
    return report;
}

// ---------------------------------------------------------------------------
// Metric report from an externally produced confusion matrix
// ---------------------------------------------------------------------------

struct MetricReport {
    NormalizedConfusion p;
    MatrixX<double> s;
    Metric metric;
    MatrixX<double> distances;

    MetricReport() : metric(Metric::identity(2)) {}
};

inline MetricReport metric_report_from_counts(const CountMatrix& counts,
                                              const MetricConfig& cfg) {
    if (counts.rows() != counts.cols())
        throw ValidationError("metric report: confusion matrix must be square");
    if (counts.minCoeff() < 0)
        throw ValidationError("metric report: confusion counts must be non-negative");
    MetricReport report;
    report.p = normalize_counts(counts);
    report.s = effective_distance(report.p.p);
    report.metric = build_metric(report.s, cfg);
    report.distances = distance_report(report.metric);
    return report;
}

/// Distinct class pairs (a < b) ordered by ascending distance, then indices.
inline std::vector<std::tuple<Index, Index, double>> sorted_class_pairs(
    const MatrixX<double>& distances) {
    std::vector<std::tuple<Index, Index, double>> pairs;
    for (Index a = 0; a < distances.rows(); ++a)
        for (Index b = a + 1; b < distances.cols(); ++b)
            pairs.emplace_back(a, b, distances(a, b));
    std::sort(pairs.begin(), pairs.end(), [](const auto& lhs, const auto& rhs) {
        if (std::get<2>(lhs) != std::get<2>(rhs)) return std::get<2>(lhs) < std::get<2>(rhs);
        if (std::get<0>(lhs) != std::get<0>(rhs)) return std::get<0>(lhs) < std::get<0>(rhs);
        return std::get<1>(lhs) < std::get<1>(rhs);
    });
    return pairs;
}

}  // namespace curved
