#pragma once

// Brute-force metrics oracle: expands a confusion matrix back into raw
// (pred, label) pairs, recomputes per-class tp/fp/fn by scanning the pairs,
// and averages the naive way. Independent of evaluation::metrics internals.

#include <vector>

#include "kidc/metrics.hpp"

namespace kidc::testing {

inline evaluation::MetricsRow metrics_pair_oracle(const evaluation::ConfusionMatrix& cm) {
    std::vector<int> preds, labels;
    for (std::size_t t = 0; t < cm.num_classes(); ++t) {
        for (std::size_t p = 0; p < cm.num_classes(); ++p) {
            for (std::size_t n = 0; n < cm.count(t, p); ++n) {
                labels.push_back(static_cast<int>(t));
                preds.push_back(static_cast<int>(p));
            }
        }
    }
    const std::size_t c = cm.num_classes();
    std::vector<double> tp(c, 0), fp(c, 0), fn(c, 0);
    double correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == labels[i]) {
            tp[static_cast<std::size_t>(labels[i])] += 1;
            correct += 1;
        } else {
            fp[static_cast<std::size_t>(preds[i])] += 1;
            fn[static_cast<std::size_t>(labels[i])] += 1;
        }
    }
    evaluation::MetricsRow row;
    row.accuracy = 100.0 * correct / static_cast<double>(preds.size());
    double sum_p = 0, sum_r = 0, sum_f = 0, total_support = 0;
    for (std::size_t i = 0; i < c; ++i) {
        double support = tp[i] + fn[i];
        if (support == 0) continue;
        double prec = (tp[i] + fp[i]) == 0 ? 0.0 : tp[i] / (tp[i] + fp[i]);
        double rec = tp[i] / support;
        double f1 = (prec + rec) == 0 ? 0.0 : 2 * prec * rec / (prec + rec);
        sum_p += support * prec;
        sum_r += support * rec;
        sum_f += support * f1;
        total_support += support;
    }
    row.precision = 100.0 * sum_p / total_support;
    row.recall = 100.0 * sum_r / total_support;
    row.f1 = 100.0 * sum_f / total_support;
    return row;
}

inline evaluation::ConfusionMatrix random_confusion(num::Rng& rng, std::size_t max_classes) {
    std::size_t c = 2 + rng.index(max_classes - 1);
    evaluation::ConfusionMatrix cm(c);
    // ensure a nonzero total
    cm.add(rng.index(c), rng.index(c), 1 + rng.index(20));
    std::size_t cells = rng.index(c * c * 2);
    for (std::size_t i = 0; i < cells; ++i) cm.add(rng.index(c), rng.index(c), rng.index(30));
    return cm;
}

}  // namespace kidc::testing
