// Command-line harness: train, compare, metric-report, distance-table,
// gen-data. Exit codes: 0 success, 1 validation/config error, 2 runtime or
// numerical failure.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curved/curved.hpp"

namespace {

using curved::ExperimentConfig;
using curved::Index;

struct ConfigOptions {
    CLI::Option* config = nullptr;
    std::string config_path;

    CLI::Option* dataset_csv = nullptr;
    std::string dataset_csv_value;
    CLI::Option* csv_header = nullptr;
    CLI::Option* n_super = nullptr;
    Index n_super_value = 2;
    CLI::Option* per_super = nullptr;
    Index per_super_value = 2;
    CLI::Option* dim = nullptr;
    Index dim_value = 8;
    CLI::Option* super_sep = nullptr;
    double super_sep_value = 6.0;
    CLI::Option* sub_sep = nullptr;
    double sub_sep_value = 1.5;
    CLI::Option* noise_sigma = nullptr;
    double noise_sigma_value = 1.0;
    CLI::Option* n_per_class = nullptr;
    Index n_per_class_value = 500;

    CLI::Option* train_frac = nullptr;
    double train_frac_value = 0.7;
    CLI::Option* hidden = nullptr;
    std::vector<Index> hidden_value{32};
    CLI::Option* loss = nullptr;
    std::string loss_value = "ce";
    CLI::Option* scale = nullptr;
    double scale_value = 1.0;
    CLI::Option* lambda = nullptr;
    double lambda_value = 0.3;
    CLI::Option* clamp_max = nullptr;
    double clamp_max_value = 0.0;
    CLI::Option* cadence = nullptr;
    std::string cadence_value = "epoch";
    CLI::Option* lr = nullptr;
    double lr_value = 0.05;
    CLI::Option* momentum = nullptr;
    double momentum_value = 0.9;
    CLI::Option* epochs = nullptr;
    Index epochs_value = 50;
    CLI::Option* batch_size = nullptr;
    Index batch_size_value = 32;
    CLI::Option* seed = nullptr;
    std::uint64_t seed_value = 1;
};

/// Registers the shared experiment flags on a subcommand. A config file
/// supplies defaults; explicitly passed flags override it.
void add_config_options(CLI::App* cmd, ConfigOptions& opts) {
    opts.config = cmd->add_option("--config", opts.config_path,
                                  "JSON config file; flags override its values");
    opts.dataset_csv =
        cmd->add_option("--dataset-csv", opts.dataset_csv_value, "train on this CSV dataset");
    opts.csv_header = cmd->add_flag("--csv-header", "skip one header line in the CSV");
    opts.n_super = cmd->add_option("--n-super", opts.n_super_value, "generator: superclasses");
    opts.per_super =
        cmd->add_option("--per-super", opts.per_super_value, "generator: subclasses per superclass");
    opts.dim = cmd->add_option("--dim", opts.dim_value, "generator: feature dimension");
    opts.super_sep =
        cmd->add_option("--super-sep", opts.super_sep_value, "generator: superclass separation");
    opts.sub_sep =
        cmd->add_option("--sub-sep", opts.sub_sep_value, "generator: subclass offset norm");
    opts.noise_sigma =
        cmd->add_option("--noise-sigma", opts.noise_sigma_value, "generator: noise sigma");
    opts.n_per_class =
        cmd->add_option("--n-per-class", opts.n_per_class_value, "generator: examples per class");
    opts.train_frac = cmd->add_option("--train-frac", opts.train_frac_value,
                                      "stratified train fraction in (0,1)");
    opts.hidden = cmd->add_option("--hidden", opts.hidden_value,
                                  "hidden layer widths, e.g. --hidden 32 16");
    opts.loss = cmd->add_option("--loss", opts.loss_value, "loss: mse, ce, cqe or cce");
    opts.scale = cmd->add_option("--scale", opts.scale_value, "metric scale A");
    opts.lambda = cmd->add_option("--lambda", opts.lambda_value, "EMA smoothing in (0,1]");
    opts.clamp_max =
        cmd->add_option("--clamp-max", opts.clamp_max_value, "cap on off-diagonal metric entries");
    opts.cadence =
        cmd->add_option("--cadence", opts.cadence_value, "metric update cadence: epoch or batch");
    opts.lr = cmd->add_option("--lr", opts.lr_value, "learning rate");
    opts.momentum = cmd->add_option("--momentum", opts.momentum_value, "SGD momentum in [0,1)");
    opts.epochs = cmd->add_option("--epochs", opts.epochs_value, "training epochs");
    opts.batch_size = cmd->add_option("--batch-size", opts.batch_size_value, "mini-batch size");
    opts.seed = cmd->add_option("--seed", opts.seed_value, "seed for all derived randomness");
}

ExperimentConfig build_config(const ConfigOptions& opts) {
    ExperimentConfig cfg;
    if (opts.config->count() > 0)
        cfg = ExperimentConfig::from_json(curved::io::parse_json_file(opts.config_path));
    if (opts.dataset_csv->count() > 0) cfg.dataset_csv = opts.dataset_csv_value;
    if (opts.csv_header->count() > 0) cfg.csv_header = true;
    if (opts.n_super->count() > 0) cfg.gen.n_super = opts.n_super_value;
    if (opts.per_super->count() > 0) cfg.gen.per_super = opts.per_super_value;
    if (opts.dim->count() > 0) cfg.gen.d = opts.dim_value;
    if (opts.super_sep->count() > 0) cfg.gen.super_sep = opts.super_sep_value;
    if (opts.sub_sep->count() > 0) cfg.gen.sub_sep = opts.sub_sep_value;
    if (opts.noise_sigma->count() > 0) cfg.gen.noise_sigma = opts.noise_sigma_value;
    if (opts.n_per_class->count() > 0) cfg.gen.n_per_class = opts.n_per_class_value;
    if (opts.train_frac->count() > 0) cfg.train_frac = opts.train_frac_value;
    if (opts.hidden->count() > 0) cfg.hidden_dims = opts.hidden_value;
    if (opts.loss->count() > 0) cfg.loss = curved::parse_loss_kind(opts.loss_value);
    if (opts.scale->count() > 0) cfg.metric.scale = opts.scale_value;
    if (opts.lambda->count() > 0) cfg.metric.lambda = opts.lambda_value;
    if (opts.clamp_max->count() > 0) cfg.metric.clamp_max = opts.clamp_max_value;
    if (opts.cadence->count() > 0) cfg.cadence = curved::parse_cadence(opts.cadence_value);
    if (opts.lr->count() > 0) cfg.lr = opts.lr_value;
    if (opts.momentum->count() > 0) cfg.momentum = opts.momentum_value;
    if (opts.epochs->count() > 0) cfg.epochs = opts.epochs_value;
    if (opts.batch_size->count() > 0) cfg.batch_size = opts.batch_size_value;
    if (opts.seed->count() > 0) cfg.seed = opts.seed_value;
    return cfg;
}

void print_epoch_line(const curved::EpochReport& report) {
    std::cout << "epoch " << report.epoch << ": train loss " << report.train_loss
              << ", test accuracy " << report.test_accuracy << " (metric off-diag mean "
              << report.metric_summary.off_mean << ")\n";
}

int cmd_train(const ConfigOptions& opts, const std::string& out_dir,
              const std::string& resume_path, bool quiet) {
    curved::RunResult result;
    if (!resume_path.empty()) {
        std::optional<Index> epochs_override;
        if (opts.epochs->count() > 0) epochs_override = opts.epochs_value;
        result = curved::resume_train(resume_path, out_dir, epochs_override);
    } else {
        ExperimentConfig cfg = build_config(opts);
        cfg.out_dir = out_dir;
        result = curved::run_train(cfg);
    }
    if (!quiet)
        for (const auto& report : result.reports) print_epoch_line(report);
    std::cout << "final test accuracy: " << result.final_test_accuracy << "\n";
    const auto summary = curved::MetricSummary::of(result.final_metric);
    std::cout << "exported metric off-diagonal: min " << summary.off_min << ", mean "
              << summary.off_mean << ", max " << summary.off_max << "\n";
    if (result.final_metric.min_eigenvalue() < 0)
        std::cerr << "note: exported metric has negative smallest eigenvalue "
                  << result.final_metric.min_eigenvalue() << " (indefinite bilinear form)\n";
    std::cout << "artifacts written to " << out_dir << "\n";
    return 0;
}

struct SideOverrides {
    bool scale_a_set = false, scale_b_set = false;
    double scale_a = 1.0, scale_b = 1.0;
    bool lambda_a_set = false, lambda_b_set = false;
    double lambda_a = 0.3, lambda_b = 0.3;
};

int cmd_compare(const ConfigOptions& opts, const std::string& loss_a, const std::string& loss_b,
                const SideOverrides& sides, int n_seeds, const std::string& out_dir) {
    ExperimentConfig base = build_config(opts);
    ExperimentConfig cfg_a = base;
    ExperimentConfig cfg_b = base;
    cfg_a.loss = curved::parse_loss_kind(loss_a);
    cfg_b.loss = curved::parse_loss_kind(loss_b);
    if (sides.scale_a_set) cfg_a.metric.scale = sides.scale_a;
    if (sides.scale_b_set) cfg_b.metric.scale = sides.scale_b;
    if (sides.lambda_a_set) cfg_a.metric.lambda = sides.lambda_a;
    if (sides.lambda_b_set) cfg_b.metric.lambda = sides.lambda_b;
    const curved::CompareReport report = curved::run_compare(cfg_a, cfg_b, n_seeds);
    std::cout << report.to_text();
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        curved::io::write_text_file(out_dir + "/compare_report.json",
                                    report.to_json().dump(2) + "\n");
        curved::io::write_text_file(out_dir + "/compare_report.txt", report.to_text());
        std::cout << "report written to " << out_dir << "\n";
    }
    return 0;
}

int cmd_metric_report(const std::string& confusion_path, double scale, double lambda,
                      double clamp_max, bool clamp_set, const std::string& out_dir) {
    const curved::CountMatrix counts = curved::io::read_confusion_csv(confusion_path);
    curved::MetricConfig cfg;
    cfg.scale = scale;
    cfg.lambda = lambda;
    if (clamp_set) cfg.clamp_max = clamp_max;
    const curved::MetricReport report = curved::metric_report_from_counts(counts, cfg);

    const auto pairs = curved::sorted_class_pairs(report.distances);
    const std::size_t show = std::min<std::size_t>(3, pairs.size());
    std::cout << "smallest cross-class distances:\n";
    for (std::size_t i = 0; i < show; ++i) {
        const auto& [a, b, d] = pairs[i];
        std::cout << "  d(" << a << "," << b << ") = " << d << "\n";
    }
    std::cout << "largest cross-class distances:\n";
    for (std::size_t i = 0; i < show; ++i) {
        const auto& [a, b, d] = pairs[pairs.size() - 1 - i];
        std::cout << "  d(" << a << "," << b << ") = " << d << "\n";
    }
    if (report.metric.min_eigenvalue() < 0)
        std::cerr << "note: metric has negative smallest eigenvalue "
                  << report.metric.min_eigenvalue() << " (indefinite bilinear form)\n";

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        curved::io::write_matrix_csv(out_dir + "/p.csv", report.p.p);
        curved::io::write_matrix_csv(out_dir + "/s.csv", report.s);
        curved::io::write_metric_csv(out_dir + "/metric.csv", report.metric);
        curved::io::json provenance = {{"source", "confusion-csv"},
                                       {"input", confusion_path},
                                       {"scale", cfg.scale},
                                       {"lambda", cfg.lambda}};
        curved::io::write_metric_json(out_dir + "/metric.json", report.metric, provenance);
        curved::io::write_matrix_csv(out_dir + "/distances.csv", report.distances);
        std::cout << "P, S, metric and distance table written to " << out_dir << "\n";
    }
    return 0;
}

int cmd_distance_table(const std::string& metric_path, const std::string& out_path) {
    const curved::Metric metric = curved::io::read_metric_any(metric_path);
    const curved::MatrixX<double> distances = curved::distance_report(metric);
    std::cout << std::setprecision(6);
    for (Index a = 0; a < distances.rows(); ++a) {
        for (Index b = 0; b < distances.cols(); ++b)
            std::cout << std::setw(10) << distances(a, b) << (b + 1 < distances.cols() ? " " : "");
        std::cout << "\n";
    }
    if (metric.min_eigenvalue() < 0)
        std::cerr << "note: metric has negative smallest eigenvalue " << metric.min_eigenvalue()
                  << " (indefinite bilinear form)\n";
    if (!out_path.empty()) {
        curved::io::write_matrix_csv(out_path, distances);
        std::cout << "distance table written to " << out_path << "\n";
    }
    return 0;
}

int cmd_gen_data(const curved::HierarchySpec& spec, const std::string& out_path,
                 const std::string& meta_path) {
    const curved::Dataset ds = curved::generate(spec);
    curved::write_csv(out_path, ds);
    std::cout << "wrote " << ds.n() << " examples, " << ds.k << " classes, dimension " << ds.d()
              << " to " << out_path << "\n";
    if (!meta_path.empty()) {
        curved::io::json meta;
        meta["k"] = ds.k;
        meta["d"] = ds.d();
        meta["n"] = ds.n();
        meta["superclass_of"] = ds.superclass_of;
        meta["generator"] = {{"n_super", spec.n_super},       {"per_super", spec.per_super},
                             {"d", spec.d},                   {"super_sep", spec.super_sep},
                             {"sub_sep", spec.sub_sep},       {"noise_sigma", spec.noise_sigma},
                             {"n_per_class", spec.n_per_class}, {"seed", spec.seed}};
        curved::io::write_text_file(meta_path, meta.dump(2) + "\n");
        std::cout << "metadata written to " << meta_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"curved label-space classification harness"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "train a classifier, writing run artifacts");
    ConfigOptions train_opts;
    add_config_options(train, train_opts);
    std::string train_out;
    train->add_option("--out", train_out, "output directory for run artifacts")->required();
    std::string resume_path;
    train->add_option("--resume", resume_path,
                      "resume from a checkpoint.json (only --epochs and --out apply)");
    bool quiet = false;
    train->add_flag("--quiet", quiet, "suppress per-epoch lines");

    // compare
    auto* compare = app.add_subcommand("compare", "paired runs differing only in the loss");
    ConfigOptions compare_opts;
    add_config_options(compare, compare_opts);
    std::string loss_a = "ce", loss_b = "cce";
    compare->add_option("--loss-a", loss_a, "loss for side A")->required();
    compare->add_option("--loss-b", loss_b, "loss for side B")->required();
    SideOverrides sides;
    auto* scale_a_opt = compare->add_option("--scale-a", sides.scale_a, "metric scale for side A");
    auto* scale_b_opt = compare->add_option("--scale-b", sides.scale_b, "metric scale for side B");
    auto* lambda_a_opt =
        compare->add_option("--lambda-a", sides.lambda_a, "EMA smoothing for side A");
    auto* lambda_b_opt =
        compare->add_option("--lambda-b", sides.lambda_b, "EMA smoothing for side B");
    int n_seeds = 5;
    compare->add_option("--seeds", n_seeds, "number of paired seeds");
    std::string compare_out;
    compare->add_option("--out", compare_out, "directory for the comparison report");

    // metric-report
    auto* metric_report = app.add_subcommand(
        "metric-report", "build P, S, the metric and distances from a confusion-count CSV");
    std::string confusion_path;
    metric_report->add_option("--confusion", confusion_path, "k x k integer CSV, rows = true class")
        ->required();
    double mr_scale = 1.0, mr_lambda = 0.3, mr_clamp = 0.0;
    metric_report->add_option("--scale", mr_scale, "metric scale A");
    metric_report->add_option("--lambda", mr_lambda, "EMA smoothing (recorded in provenance)");
    auto* mr_clamp_opt =
        metric_report->add_option("--clamp-max", mr_clamp, "cap on off-diagonal metric entries");
    std::string mr_out;
    metric_report->add_option("--out", mr_out, "output directory");

    // distance-table
    auto* distance_table =
        app.add_subcommand("distance-table", "pairwise class distances of a metric file");
    std::string metric_path;
    distance_table->add_option("--metric", metric_path, "metric file (.csv or .json)")->required();
    std::string dt_out;
    distance_table->add_option("--out", dt_out, "also write the table as CSV");

    // gen-data
    auto* gen_data = app.add_subcommand("gen-data", "generate a synthetic hierarchical dataset");
    curved::HierarchySpec spec;
    gen_data->add_option("--n-super", spec.n_super, "superclasses");
    gen_data->add_option("--per-super", spec.per_super, "subclasses per superclass");
    gen_data->add_option("--dim", spec.d, "feature dimension");
    gen_data->add_option("--super-sep", spec.super_sep, "superclass separation");
    gen_data->add_option("--sub-sep", spec.sub_sep, "subclass offset norm");
    gen_data->add_option("--noise-sigma", spec.noise_sigma, "noise sigma");
    gen_data->add_option("--n-per-class", spec.n_per_class, "examples per class");
    gen_data->add_option("--seed", spec.seed, "generator seed");
    std::string gen_out, gen_meta;
    gen_data->add_option("--out", gen_out, "output CSV path")->required();
    gen_data->add_option("--meta", gen_meta, "also write dataset metadata JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (train->parsed()) {
            if (!resume_path.empty() && train_opts.config->count() > 0)
                throw curved::ValidationError(
                    "train: --resume takes its config from the checkpoint; drop --config");
            return cmd_train(train_opts, train_out, resume_path, quiet);
        }
        if (compare->parsed()) {
            sides.scale_a_set = scale_a_opt->count() > 0;
            sides.scale_b_set = scale_b_opt->count() > 0;
            sides.lambda_a_set = lambda_a_opt->count() > 0;
            sides.lambda_b_set = lambda_b_opt->count() > 0;
            return cmd_compare(compare_opts, loss_a, loss_b, sides, n_seeds, compare_out);
        }
        if (metric_report->parsed())
            return cmd_metric_report(confusion_path, mr_scale, mr_lambda, mr_clamp,
                                     mr_clamp_opt->count() > 0, mr_out);
        if (distance_table->parsed()) return cmd_distance_table(metric_path, dt_out);
        if (gen_data->parsed()) return cmd_gen_data(spec, gen_out, gen_meta);
    } catch (const curved::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const curved::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
