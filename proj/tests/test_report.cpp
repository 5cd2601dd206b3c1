#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "kidc/errors.hpp"
#include "kidc/report.hpp"

using namespace kidc::evaluation;
using kidc::training::RunRecord;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

RunRecord fake_record(const std::string& kind, std::size_t fold, MetricsRow test,
                      double seconds) {
    RunRecord r;
    r.model_kind = kind;
    r.fold = fold;
    r.seed = 1;
    r.epoch_train_loss = {2.0, 1.0, 0.5};
    r.validation = {{2, test}, {3, test}};
    r.test = test;
    r.best_checkpoint_test = test;
    r.best_val_f1 = test.f1;
    r.best_epoch = 3;
    r.duration_seconds = seconds;
    r.config_json = "{}";
    return r;
}

}  // namespace

TEST_CASE("render_report emits tables, comparison, durations, and curves") {
    auto dir = fs::temp_directory_path() / "kidc_report_unit";
    fs::remove_all(dir);

    std::vector<RunRecord> records = {
        fake_record("transformer", 0, {98.82, 98.84, 98.82, 98.81}, 30240.0),
        fake_record("transformer", 1, {99.20, 99.19, 99.20, 99.16}, 30240.0),
        fake_record("rcnn", 0, {96.36, 96.49, 96.36, 96.31}, 3780.0),
    };
    render_report(records, dir.string());

    std::string tf = slurp(dir / "metrics_transformer.txt");
    CHECK(tf.find("Accuracy") < tf.find("Precision"));
    CHECK(tf.find("Precision") < tf.find("Recall"));
    CHECK(tf.find("Recall") < tf.find("F1-Score"));
    CHECK(tf.find("98.82") != std::string::npos);
    CHECK(tf.find("99.20") != std::string::npos);
    // average of the two folds at 2 decimals
    CHECK(tf.find("99.01") != std::string::npos);
    CHECK(tf.find("Average") != std::string::npos);

    std::string cmp = slurp(dir / "comparison.txt");
    CHECK(cmp.find("transformer") != std::string::npos);
    CHECK(cmp.find("rcnn") != std::string::npos);
    CHECK(cmp.find("transformer") < cmp.find("rcnn"));  // canonical ordering
    CHECK(cmp.find("96.36") != std::string::npos);

    std::string dur = slurp(dir / "durations.txt");
    CHECK(dur.find("8 hrs 24 mins") != std::string::npos);   // 30240 s per fold
    CHECK(dur.find("16 hrs 48 mins") != std::string::npos);  // transformer total

    CHECK(fs::exists(dir / "curves" / "transformer" / "fold1_train_loss.tsv"));
    CHECK(fs::exists(dir / "curves" / "transformer" / "fold1_val_accuracy.tsv"));
    CHECK(fs::exists(dir / "curves" / "rcnn" / "test_accuracy_by_fold.tsv"));
    std::string loss = slurp(dir / "curves" / "transformer" / "fold1_train_loss.tsv");
    CHECK(loss == "1\t2\n2\t1\n3\t0.5\n");

    // single run: one fold row, average equals it
    auto single_dir = fs::temp_directory_path() / "kidc_report_single";
    fs::remove_all(single_dir);
    render_report({fake_record("rcnn", 0, {90.0, 91.0, 90.0, 90.2}, 60.0)}, single_dir.string());
    std::string single = slurp(single_dir / "metrics_rcnn.txt");
    CHECK(single.find("90.20") != std::string::npos);
    std::size_t first = single.find("90.00");
    CHECK(single.find("90.00", first + 1) != std::string::npos);  // fold row and average row

    // determinism of metric files (durations live elsewhere)
    auto dir2 = fs::temp_directory_path() / "kidc_report_unit2";
    fs::remove_all(dir2);
    render_report(records, dir2.string());
    CHECK(slurp(dir / "metrics_transformer.txt") == slurp(dir2 / "metrics_transformer.txt"));
    CHECK(slurp(dir / "comparison.json") == slurp(dir2 / "comparison.json"));

    fs::remove_all(dir);
    fs::remove_all(dir2);
    fs::remove_all(single_dir);

    CHECK_THROWS_AS(render_report({}, (fs::temp_directory_path() / "x").string()),
                    kidc::InvalidInput);
}

TEST_CASE("format_duration matches the reporting style") {
    CHECK(format_duration(30240.0) == "8 hrs 24 mins");
    CHECK(format_duration(151200.0) == "42 hrs");
    CHECK(format_duration(3780.0) == "1 hrs 3 mins");
    CHECK(format_duration(59.0) == "1 mins");
    CHECK(format_duration(0.0) == "0 mins");
}
