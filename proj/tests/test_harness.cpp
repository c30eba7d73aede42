#include <cmath>
#include <fstream>
#include <string>

#include <catch2/catch_amalgamated.hpp>

#include "curved/train.hpp"
#include "testutil.hpp"

using namespace curved;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.gen.n_super = 2;
    cfg.gen.per_super = 2;
    cfg.gen.d = 4;
    cfg.gen.super_sep = 6.0;
    cfg.gen.sub_sep = 1.5;
    cfg.gen.noise_sigma = 1.0;
    cfg.gen.n_per_class = 15;
    cfg.train_frac = 0.7;
    cfg.hidden_dims = {8};
    cfg.lr = 0.05;
    cfg.momentum = 0.9;
    cfg.epochs = 4;
    cfg.batch_size = 16;
    cfg.seed = 11;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config JSON round-trip and validation") {
    ExperimentConfig cfg = tiny_config();
    cfg.loss = LossKind::Cce;
    cfg.metric.scale = 1.5;
    cfg.metric.clamp_max = 2.0;
    cfg.cadence = MetricCadence::PerBatch;
    const ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
    REQUIRE(back.to_json() == cfg.to_json());
    REQUIRE(back.metric.clamp_max.has_value());
    REQUIRE(*back.metric.clamp_max == 2.0);
    REQUIRE(back.cadence == MetricCadence::PerBatch);

    SECTION("unknown keys rejected") {
        io::json doc = cfg.to_json();
        doc["typo_key"] = 1;
        REQUIRE_THROWS_AS(ExperimentConfig::from_json(doc), ValidationError);
        io::json doc2 = cfg.to_json();
        doc2["metric"]["alpha"] = 1;
        REQUIRE_THROWS_AS(ExperimentConfig::from_json(doc2), ValidationError);
    }
    SECTION("invalid values rejected") {
        ExperimentConfig bad = tiny_config();
        bad.epochs = 0;
        REQUIRE_THROWS_AS(bad.validate(), ValidationError);
        bad = tiny_config();
        bad.momentum = 1.0;
        REQUIRE_THROWS_AS(bad.validate(), ValidationError);
        bad = tiny_config();
        bad.metric.lambda = 0.0;
        REQUIRE_THROWS_AS(bad.validate(), ValidationError);
    }
}

TEST_CASE("epoch 0 of a curved run trains under the identity metric") {
    for (const MetricCadence cadence : {MetricCadence::PerEpoch, MetricCadence::PerBatch}) {
        ExperimentConfig cfg = tiny_config();
        cfg.loss = LossKind::Cqe;
        cfg.lr = 0.01;
        cfg.cadence = cadence;
        TrainRun run(cfg);
        const EpochReport first = run.run_epoch();
        REQUIRE(first.epoch == 0);
        REQUIRE(first.metric_summary.off_min == 0.0);
        REQUIRE(first.metric_summary.off_max == 0.0);
        const EpochReport second = run.run_epoch();
        REQUIRE(second.metric_summary.off_max > 0.0);  // statistics now in effect
    }
}

TEST_CASE("reports are deterministic for identical config and seed") {
    ExperimentConfig cfg = tiny_config();
    cfg.loss = LossKind::Cce;
    const RunResult a = run_train(cfg);
    const RunResult b = run_train(cfg);
    REQUIRE(a.reports.size() == b.reports.size());
    for (std::size_t e = 0; e < a.reports.size(); ++e)
        REQUIRE(a.reports[e].to_json().dump() == b.reports[e].to_json().dump());
    REQUIRE(a.final_metric.tensor() == b.final_metric.tensor());
    REQUIRE(a.final_test_accuracy == b.final_test_accuracy);

    ExperimentConfig other = cfg;
    other.seed = cfg.seed + 1;
    const RunResult c = run_train(other);
    REQUIRE(c.reports.front().to_json().dump() != a.reports.front().to_json().dump());
}

TEST_CASE("exported metric is bit-identical to a rebuild from the checkpointed EMA") {
    ExperimentConfig cfg = tiny_config();
    cfg.loss = LossKind::Cqe;
    cfg.out_dir = testutil::temp_dir("provenance");
    run_train(cfg);

    const EmaState ema = io::read_ema_json(cfg.out_dir + "/ema.json");
    const Metric rebuilt = metric_from_history(ema, cfg.metric);
    const Metric exported = io::read_metric_csv(cfg.out_dir + "/final_metric.csv");
    REQUIRE(exported.tensor() == rebuilt.tensor());

    const Metric exported_json = io::read_metric_json(cfg.out_dir + "/final_metric.json");
    REQUIRE(exported_json.tensor() == rebuilt.tensor());
}

TEST_CASE("run artifacts exist and the report stream has one line per epoch") {
    ExperimentConfig cfg = tiny_config();
    cfg.out_dir = testutil::temp_dir("artifacts");
    const RunResult result = run_train(cfg);
    REQUIRE(result.reports.size() == static_cast<std::size_t>(cfg.epochs));

    const std::string stream = slurp(cfg.out_dir + "/epoch_reports.jsonl");
    Index lines = 0;
    for (char c : stream) lines += c == '\n';
    REQUIRE(lines == cfg.epochs);

    for (const char* name : {"config.json", "run.log", "checkpoint.json", "final_network.json",
                             "ema.json", "final_metric.csv", "final_metric.json",
                             "distance_report.csv", "summary.txt"})
        REQUIRE(std::filesystem::exists(cfg.out_dir + "/" + name));

    // distance report matches the exported metric
    const Metric exported = io::read_metric_csv(cfg.out_dir + "/final_metric.csv");
    const MatrixX<double> distances = io::read_matrix_csv(cfg.out_dir + "/distance_report.csv");
    REQUIRE(distances == distance_report(exported));
}

TEST_CASE("resuming from a checkpoint replays the remaining epochs exactly") {
    ExperimentConfig straight_cfg = tiny_config();
    straight_cfg.loss = LossKind::Cqe;
    straight_cfg.epochs = 6;
    TrainRun straight(straight_cfg);
    std::vector<std::string> straight_reports;
    while (!straight.finished()) straight_reports.push_back(straight.run_epoch().to_json().dump());

    ExperimentConfig half_cfg = straight_cfg;
    half_cfg.epochs = 3;
    half_cfg.out_dir = testutil::temp_dir("resume");
    run_train(half_cfg);

    const std::string resumed_dir = testutil::temp_dir("resumed");
    const RunResult resumed =
        resume_train(half_cfg.out_dir + "/checkpoint.json", resumed_dir, Index{6});
    REQUIRE(resumed.reports.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        REQUIRE(resumed.reports[i].to_json().dump() == straight_reports[3 + i]);

    // final parameters agree bit-for-bit with the uninterrupted run
    const io::LoadedNetwork resumed_net = io::read_network_json(resumed_dir +
                                                                "/final_network.json");
    for (std::size_t l = 0; l < straight.state().net.num_layers(); ++l)
        REQUIRE(resumed_net.net.weights[l] == straight.state().net.weights[l]);

    REQUIRE_THROWS_AS(resume_train(half_cfg.out_dir + "/checkpoint.json",
                                   testutil::temp_dir("resume_bad"), Index{3}),
                      ValidationError);
}

TEST_CASE("per-batch cadence advances the EMA once per batch") {
    ExperimentConfig cfg = tiny_config();
    cfg.loss = LossKind::Cce;
    cfg.cadence = MetricCadence::PerBatch;
    cfg.epochs = 2;
    TrainRun run(cfg);
    run.run_epoch();
    const Index n_train = run.train_set().n();
    const Index batches = (n_train + cfg.batch_size - 1) / cfg.batch_size;
    REQUIRE(run.ema().t() == batches);
    run.run_epoch();
    REQUIRE(run.ema().t() == 2 * batches);
}

TEST_CASE("flat runs still accumulate history and export a metric") {
    ExperimentConfig cfg = tiny_config();
    cfg.loss = LossKind::CrossEntropy;
    const RunResult result = run_train(cfg);
    REQUIRE(result.final_metric.k() == 4);
    // every epoch reports the identity geometry for a flat loss
    for (const auto& report : result.reports) {
        REQUIRE(report.metric_summary.off_min == 0.0);
        REQUIRE(report.metric_summary.off_max == 0.0);
    }
}

TEST_CASE("cross-entropy on the default generated dataset clears 80% accuracy") {
    const ExperimentConfig cfg;  // defaults: 50 epochs, ce, generated hierarchy
    const RunResult result = run_train(cfg);
    REQUIRE(result.final_test_accuracy > 0.8);
}

TEST_CASE("cqe at A = 1e-9 tracks the mse run's losses under the same seed") {
    ExperimentConfig mse_cfg = tiny_config();
    mse_cfg.loss = LossKind::Mse;
    mse_cfg.epochs = 6;
    ExperimentConfig cqe_cfg = mse_cfg;
    cqe_cfg.loss = LossKind::Cqe;
    cqe_cfg.metric.scale = 1e-9;
    const RunResult mse_run = run_train(mse_cfg);
    const RunResult cqe_run = run_train(cqe_cfg);
    for (std::size_t e = 0; e < mse_run.reports.size(); ++e)
        REQUIRE(std::abs(cqe_run.reports[e].train_loss - mse_run.reports[e].train_loss) < 1e-6);
}

TEST_CASE("divergent training aborts with a numerical failure") {
    ExperimentConfig cfg = tiny_config();
    cfg.lr = 1e154;  // second step overflows the affine maps
    cfg.loss = LossKind::Mse;
    cfg.epochs = 10;
    TrainRun run(cfg);
    REQUIRE_THROWS_AS(
        [&] {
            while (!run.finished()) run.run_epoch();
        }(),
        NumericError);
}

TEST_CASE("run_compare") {
    ExperimentConfig cfg = tiny_config();
    cfg.epochs = 3;

    SECTION("self-comparison gives exactly zero deltas") {
        const CompareReport report = run_compare(cfg, cfg, 3);
        REQUIRE(report.rows.size() == 3);
        for (const auto& row : report.rows) REQUIRE(row.delta == 0.0);
        REQUIRE(report.mean_delta == 0.0);
        REQUIRE(report.n_zero == 3);
    }
    SECTION("structural content of the report") {
        ExperimentConfig b = cfg;
        b.loss = LossKind::Cce;
        const CompareReport report = run_compare(cfg, b, 5);
        REQUIRE(report.rows.size() == 5);
        REQUIRE(report.loss_a == "ce");
        REQUIRE(report.loss_b == "cce");
        double mean = 0.0;
        for (const auto& row : report.rows) {
            REQUIRE(row.delta == row.accuracy_b - row.accuracy_a);
            mean += row.delta;
        }
        REQUIRE(report.mean_delta == Catch::Approx(mean / 5.0).margin(1e-15));
        REQUIRE(report.n_positive + report.n_negative + report.n_zero == 5);
        REQUIRE(report.to_json().at("rows").size() == 5);
    }
    SECTION("paired seeds are consecutive from the base seed") {
        const CompareReport report = run_compare(cfg, cfg, 2);
        REQUIRE(report.rows[0].seed == cfg.seed);
        REQUIRE(report.rows[1].seed == cfg.seed + 1);
    }
    SECTION("configs differing outside the loss settings are rejected") {
        ExperimentConfig b = cfg;
        b.loss = LossKind::Cce;
        b.lr = cfg.lr * 2;
        REQUIRE_THROWS_AS(run_compare(cfg, b, 2), ValidationError);
        ExperimentConfig c = cfg;
        c.loss = LossKind::Cce;
        c.seed = cfg.seed + 7;
        REQUIRE_THROWS_AS(run_compare(cfg, c, 2), ValidationError);
    }
    SECTION("metric settings may differ") {
        ExperimentConfig b = cfg;
        b.loss = LossKind::Cqe;
        b.metric.scale = 2.0;
        b.cadence = MetricCadence::PerBatch;
        REQUIRE_NOTHROW(run_compare(cfg, b, 1));
    }
}

TEST_CASE("metric_report_from_counts frozen example") {
    CountMatrix counts(2, 2);
    counts << 8, 2, 4, 6;
    MetricConfig cfg;
    const MetricReport report = metric_report_from_counts(counts, cfg);
    REQUIRE(report.p.p(0, 0) == Catch::Approx(8.0 / 12.0).margin(1e-15));
    REQUIRE(report.p.p(0, 1) == Catch::Approx(0.25).margin(1e-15));
    REQUIRE(report.p.p(1, 0) == Catch::Approx(4.0 / 12.0).margin(1e-15));
    REQUIRE(report.p.p(1, 1) == Catch::Approx(0.75).margin(1e-15));
    REQUIRE(report.s(0, 1) == Catch::Approx(1.0 - 0.5 * (0.25 + 1.0 / 3.0)).margin(1e-15));
    REQUIRE(report.metric(0, 1) == Catch::Approx(17.0 / 24.0).margin(1e-15));
    REQUIRE(report.distances(0, 1) == Catch::Approx(std::sqrt(2.0 * (1.0 + 17.0 / 24.0)))
                                          .margin(1e-15));
    REQUIRE(report.distances(0, 1) == Catch::Approx(1.848).margin(5e-4));
}

TEST_CASE("metric_report: identity counts give flat distance 2 everywhere") {
    CountMatrix counts = CountMatrix::Zero(3, 3);
    counts.diagonal().setConstant(9);
    const MetricReport report = metric_report_from_counts(counts, MetricConfig{});
    for (Index a = 0; a < 3; ++a)
        for (Index b = 0; b < 3; ++b)
            if (a != b) REQUIRE(report.distances(a, b) == Catch::Approx(2.0).margin(1e-15));
}

TEST_CASE("sorted_class_pairs orders ascending with index tiebreak") {
    MatrixX<double> d(3, 3);
    d << 0.0, 2.0, 1.5,
         2.0, 0.0, 1.5,
         1.5, 1.5, 0.0;
    const auto pairs = sorted_class_pairs(d);
    REQUIRE(pairs.size() == 3);
    REQUIRE(std::get<0>(pairs[0]) == 0);
    REQUIRE(std::get<1>(pairs[0]) == 2);
    REQUIRE(std::get<0>(pairs[1]) == 1);
    REQUIRE(std::get<1>(pairs[1]) == 2);
    REQUIRE(std::get<2>(pairs[2]) == 2.0);
}
