#include "kidc/metrics.hpp"

#include <cmath>

#include "kidc/errors.hpp"

namespace kidc::evaluation {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : c_(num_classes), counts_(num_classes * num_classes, 0) {
    if (num_classes == 0) throw InvalidInput("confusion matrix needs at least one class");
}

ConfusionMatrix ConfusionMatrix::from_pairs(const std::vector<int>& preds,
                                            const std::vector<int>& labels,
                                            std::size_t num_classes) {
    if (preds.size() != labels.size()) {
        throw InvalidInput("confusion: " + std::to_string(preds.size()) + " predictions vs " +
                           std::to_string(labels.size()) + " labels");
    }
    ConfusionMatrix cm(num_classes);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] < 0 || static_cast<std::size_t>(preds[i]) >= num_classes ||
            labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
            throw InvalidInput("confusion: class id out of range at pair " + std::to_string(i));
        }
        cm.add(static_cast<std::size_t>(labels[i]), static_cast<std::size_t>(preds[i]));
    }
    return cm;
}

void ConfusionMatrix::add(std::size_t truth, std::size_t pred, std::size_t n) {
    if (truth >= c_ || pred >= c_) {
        throw InvalidInput("confusion: cell (" + std::to_string(truth) + "," +
                           std::to_string(pred) + ") outside " + std::to_string(c_) + " classes");
    }
    counts_[truth * c_ + pred] += n;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (std::size_t v : counts_) t += v;
    return t;
}

MetricsResult metrics_detailed(const ConfusionMatrix& cm, Averaging avg) {
    const std::size_t c = cm.num_classes();
    const std::size_t total = cm.total();
    if (total == 0) throw InvalidInput("metrics: empty confusion matrix");

    MetricsResult res;
    res.per_class.resize(c);
    std::size_t trace = 0;
    for (std::size_t i = 0; i < c; ++i) {
        PerClassMetrics& m = res.per_class[i];
        m.tp = cm.count(i, i);
        trace += m.tp;
        for (std::size_t r = 0; r < c; ++r) {
            if (r != i) {
                m.fp += cm.count(r, i);
                m.fn += cm.count(i, r);
            }
        }
        m.support = m.tp + m.fn;
        bool never_predicted = m.tp + m.fp == 0;
        if (never_predicted && m.support > 0) res.never_predicted.push_back(i);
        m.precision = never_predicted
                          ? 0.0
                          : 100.0 * static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
        m.recall = m.support == 0
                       ? 0.0
                       : 100.0 * static_cast<double>(m.tp) / static_cast<double>(m.support);
        m.f1 = (m.precision + m.recall) == 0.0
                   ? 0.0
                   : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }

    res.row.accuracy = 100.0 * static_cast<double>(trace) / static_cast<double>(total);
    double wp = 0.0, wf = 0.0, weight_total = 0.0, classes_with_support = 0.0, mr = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        const PerClassMetrics& m = res.per_class[i];
        if (m.support == 0) continue;  // zero-support classes are excluded from averaging
        if (avg == Averaging::weighted) {
            double w = static_cast<double>(m.support);
            wp += w * m.precision;
            wf += w * m.f1;
            weight_total += w;
        } else {
            wp += m.precision;
            wf += m.f1;
            mr += m.recall;
            classes_with_support += 1.0;
        }
    }
    if (avg == Averaging::weighted) {
        res.row.precision = wp / weight_total;
        res.row.f1 = wf / weight_total;
        // support-weighted recall is trace/total algebraically; computing it
        // directly keeps the identity with accuracy exact
        res.row.recall = res.row.accuracy;
    } else {
        res.row.precision = wp / classes_with_support;
        res.row.recall = mr / classes_with_support;
        res.row.f1 = wf / classes_with_support;
    }
    return res;
}

MetricsRow metrics(const ConfusionMatrix& cm, Averaging avg) {
    return metrics_detailed(cm, avg).row;
}

MetricsRow aggregate_folds(const std::vector<MetricsRow>& rows) {
    if (rows.empty()) throw InvalidInput("aggregate_folds: no rows");
    MetricsRow out;
    for (const MetricsRow& r : rows) {
        out.accuracy += r.accuracy;
        out.precision += r.precision;
        out.recall += r.recall;
        out.f1 += r.f1;
    }
    double n = static_cast<double>(rows.size());
    out.accuracy /= n;
    out.precision /= n;
    out.recall /= n;
    out.f1 /= n;
    return out;
}

std::string format_pct(double v) {
    if (!std::isfinite(v)) throw InvalidInput("format_pct: non-finite value");
    bool neg = v < 0.0;
    long long scaled = std::llround(std::abs(v) * 100.0);  // half-up for non-negative input
    std::string s = (neg ? "-" : "") + std::to_string(scaled / 100) + ".";
    long long frac = scaled % 100;
    s += static_cast<char>('0' + frac / 10);
    s += static_cast<char>('0' + frac % 10);
    return s;
}

}  // namespace kidc::evaluation
