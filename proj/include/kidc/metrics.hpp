#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace kidc::evaluation {

// C×C counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t num_classes);
    static ConfusionMatrix from_pairs(const std::vector<int>& preds,
                                      const std::vector<int>& labels, std::size_t num_classes);

    std::size_t num_classes() const { return c_; }
    std::size_t count(std::size_t truth, std::size_t pred) const {
        return counts_[truth * c_ + pred];
    }
    void add(std::size_t truth, std::size_t pred, std::size_t n = 1);
    std::size_t total() const;

private:
    std::size_t c_;
    std::vector<std::size_t> counts_;
};

// Percentages in [0,100], full precision internally, rendered at 2 decimals.
struct MetricsRow {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

enum class Averaging { weighted, macro };

struct PerClassMetrics {
    std::size_t support = 0;
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;  // percentages
};

struct MetricsResult {
    MetricsRow row;
    std::vector<PerClassMetrics> per_class;
    std::vector<std::size_t> never_predicted;  // precision fixed at 0, flagged in reports
};

// Support-weighted averaging by default: that is the only mode under which
// aggregate recall coincides with accuracy, which is the observable in the
// result tables this mirrors. Classes with zero support are excluded from the
// weighting; a never-predicted class contributes precision 0.
MetricsResult metrics_detailed(const ConfusionMatrix& cm, Averaging avg = Averaging::weighted);
MetricsRow metrics(const ConfusionMatrix& cm, Averaging avg = Averaging::weighted);

// Unweighted arithmetic mean per metric across folds.
MetricsRow aggregate_folds(const std::vector<MetricsRow>& rows);

// Locale-independent rendering: "." separator, half-up at 2 decimals.
std::string format_pct(double v);

}  // namespace kidc::evaluation
