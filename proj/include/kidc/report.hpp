#pragma once

#include <string>
#include <vector>

#include "kidc/trainer.hpp"

namespace kidc::evaluation {

// Renders result files from per-fold run records, grouped by model kind:
//   metrics_<kind>.txt/.json   per-fold table plus average row
//   comparison.txt/.json       one average row per model
//   durations.txt/.json        avg time per fold and total elapsed per model
//   curves/<kind>/*.tsv        two-column "step<TAB>value" data series
// The metrics and curve files are pure functions of the records' metrics, so
// reruns of a seeded experiment reproduce them byte for byte; wall-clock
// values are confined to the duration files.
void render_report(const std::vector<training::RunRecord>& records, const std::string& out_dir);

std::string format_duration(double seconds);

}  // namespace kidc::evaluation
