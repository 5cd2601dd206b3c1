#include "kidc/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "kidc/errors.hpp"
#include "kidc/metrics.hpp"

namespace kidc::evaluation {

namespace fs = std::filesystem;
using training::RunRecord;

namespace {

constexpr const char* kKindOrder[] = {"transformer", "rcnn", "bilstm-attn"};

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string metrics_cells(const MetricsRow& m) {
    std::ostringstream out;
    out << pad_left(format_pct(m.accuracy), 12) << pad_left(format_pct(m.precision), 12)
        << pad_left(format_pct(m.recall), 12) << pad_left(format_pct(m.f1), 12);
    return out.str();
}

nlohmann::json metrics_json(const MetricsRow& m) {
    return nlohmann::json{{"accuracy", m.accuracy},
                          {"precision", m.precision},
                          {"recall", m.recall},
                          {"f1", m.f1}};
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write report file: " + path.string());
    out << content;
    if (!out) throw RunFailure("failed writing report file: " + path.string());
}

void write_curve(const fs::path& path, const std::vector<std::pair<double, double>>& points) {
    std::ostringstream out;
    for (const auto& [step, value] : points) {
        out << static_cast<long long>(step) << '\t';
        std::ostringstream v;
        v.precision(17);
        v << value;
        out << v.str() << '\n';
    }
    write_file(path, out.str());
}

}  // namespace

std::string format_duration(double seconds) {
    long long mins_total = std::llround(seconds / 60.0);
    long long hrs = mins_total / 60;
    long long mins = mins_total % 60;
    if (hrs == 0) return std::to_string(mins) + " mins";
    if (mins == 0) return std::to_string(hrs) + " hrs";
    return std::to_string(hrs) + " hrs " + std::to_string(mins) + " mins";
}

void render_report(const std::vector<RunRecord>& records, const std::string& out_dir) {
    if (records.empty()) throw InvalidInput("render_report: no run records");
    fs::create_directories(out_dir);
    fs::create_directories(fs::path(out_dir) / "curves");

    // group by model kind, known kinds first, folds in order
    std::vector<std::string> kinds;
    auto rank = [](const std::string& k) {
        for (std::size_t i = 0; i < 3; ++i) {
            if (k == kKindOrder[i]) return i;
        }
        return std::size_t{3};
    };
    std::map<std::string, std::vector<const RunRecord*>> by_kind;
    for (const RunRecord& r : records) {
        if (!by_kind.count(r.model_kind)) kinds.push_back(r.model_kind);
        by_kind[r.model_kind].push_back(&r);
    }
    std::stable_sort(kinds.begin(), kinds.end(),
                     [&](const auto& a, const auto& b) { return rank(a) < rank(b); });
    for (auto& [kind, recs] : by_kind) {
        std::sort(recs.begin(), recs.end(),
                  [](const RunRecord* a, const RunRecord* b) { return a->fold < b->fold; });
    }

    const std::string header =
        pad_right("Fold", 10) + pad_left("Accuracy", 12) + pad_left("Precision", 12) +
        pad_left("Recall", 12) + pad_left("F1-Score", 12) + "\n";

    struct ModelSummary {
        std::string kind;
        MetricsRow average;
        double total_seconds = 0.0;
        std::size_t folds = 0;
    };
    std::vector<ModelSummary> summaries;

    for (const std::string& kind : kinds) {
        const auto& recs = by_kind[kind];
        std::vector<MetricsRow> rows;
        std::ostringstream txt;
        nlohmann::json jfolds = nlohmann::json::array();
        txt << "Test performance per fold — " << kind << "\n" << header;
        double total_seconds = 0.0;
        for (const RunRecord* r : recs) {
            rows.push_back(r->test);
            txt << pad_right(std::to_string(r->fold + 1), 10) << metrics_cells(r->test) << "\n";
            nlohmann::json jf;
            jf["fold"] = r->fold;
            jf["test"] = metrics_json(r->test);
            jf["best_checkpoint_test"] = metrics_json(r->best_checkpoint_test);
            jf["best_epoch"] = r->best_epoch;
            jfolds.push_back(std::move(jf));
            total_seconds += r->duration_seconds;
        }
        MetricsRow avg = aggregate_folds(rows);
        txt << pad_right("Average", 10) << metrics_cells(avg) << "\n";

        nlohmann::json j;
        j["model"] = kind;
        j["folds"] = std::move(jfolds);
        j["average"] = metrics_json(avg);
        write_file(fs::path(out_dir) / ("metrics_" + kind + ".txt"), txt.str());
        write_file(fs::path(out_dir) / ("metrics_" + kind + ".json"), j.dump(1) + "\n");

        summaries.push_back({kind, avg, total_seconds, recs.size()});

        fs::path curve_dir = fs::path(out_dir) / "curves" / kind;
        fs::create_directories(curve_dir);
        std::vector<std::pair<double, double>> test_acc;
        for (const RunRecord* r : recs) {
            std::vector<std::pair<double, double>> loss_points, val_acc, val_f1;
            for (std::size_t e = 0; e < r->epoch_train_loss.size(); ++e) {
                loss_points.emplace_back(static_cast<double>(e + 1), r->epoch_train_loss[e]);
            }
            for (const auto& p : r->validation) {
                val_acc.emplace_back(static_cast<double>(p.epoch), p.metrics.accuracy);
                val_f1.emplace_back(static_cast<double>(p.epoch), p.metrics.f1);
            }
            std::string stem = "fold" + std::to_string(r->fold + 1);
            write_curve(curve_dir / (stem + "_train_loss.tsv"), loss_points);
            if (!val_acc.empty()) {
                write_curve(curve_dir / (stem + "_val_accuracy.tsv"), val_acc);
                write_curve(curve_dir / (stem + "_val_f1.tsv"), val_f1);
            }
            test_acc.emplace_back(static_cast<double>(r->fold + 1), r->test.accuracy);
        }
        write_curve(curve_dir / "test_accuracy_by_fold.tsv", test_acc);
    }

    // cross-model comparison
    {
        std::ostringstream txt;
        txt << "Overall performance comparison\n"
            << pad_right("Model", 22) + pad_left("Accuracy", 12) + pad_left("Precision", 12) +
                   pad_left("Recall", 12) + pad_left("F1-Score", 12) + "\n";
        nlohmann::json j = nlohmann::json::array();
        for (const ModelSummary& s : summaries) {
            txt << pad_right(s.kind, 22) << metrics_cells(s.average) << "\n";
            j.push_back({{"model", s.kind}, {"average", metrics_json(s.average)}});
        }
        write_file(fs::path(out_dir) / "comparison.txt", txt.str());
        write_file(fs::path(out_dir) / "comparison.json", j.dump(1) + "\n");
    }

    // training durations
    {
        std::ostringstream txt;
        txt << "Training duration\n"
            << pad_right("Model", 22) << pad_left("Avg/Fold", 18) << pad_left("Total", 18)
            << "\n";
        nlohmann::json j = nlohmann::json::array();
        for (const ModelSummary& s : summaries) {
            double avg = s.total_seconds / static_cast<double>(s.folds);
            txt << pad_right(s.kind, 22) << pad_left(format_duration(avg), 18)
                << pad_left(format_duration(s.total_seconds), 18) << "\n";
            j.push_back({{"model", s.kind},
                         {"avg_seconds_per_fold", avg},
                         {"total_seconds", s.total_seconds}});
        }
        write_file(fs::path(out_dir) / "durations.txt", txt.str());
        write_file(fs::path(out_dir) / "durations.json", j.dump(1) + "\n");
    }
}

}  // namespace kidc::evaluation
