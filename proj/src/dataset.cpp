#include "kidc/dataset.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "kidc/errors.hpp"
#include "kidc/textnorm.hpp"

namespace kidc::dataset {

namespace {
constexpr const char* kHeader = "y\tx\tidiom_y";
}

Dataset build_dataset(const std::vector<std::tuple<long, std::string, std::string>>& rows,
                      const std::string& origin) {
    Dataset ds;
    std::map<long, int> dense;           // original label -> dense id
    std::vector<std::size_t> first_row;  // dense id -> first row index (1-based data row)
    int empty_surface_class = -1;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& [y, raw_text, raw_surface] = rows[r];
        std::string text = textnorm::normalize(raw_text);
        std::string surface = textnorm::normalize(raw_surface);
        std::string where = origin + " row " + std::to_string(r + 1);
        if (text.empty()) {
            throw InvalidInput(where + ": sentence is empty after normalization");
        }
        auto it = dense.find(y);
        int label;
        if (it == dense.end()) {
            label = static_cast<int>(ds.classes.size());
            dense.emplace(y, label);
            ds.classes.push_back({surface, y});
            first_row.push_back(r + 1);
            if (surface.empty()) {
                if (empty_surface_class >= 0) {
                    throw InvalidInput(where + ": second class with empty idiom surface (first at row " +
                                       std::to_string(first_row[static_cast<std::size_t>(
                                           empty_surface_class)]) +
                                       "); only one non-idiom class is allowed");
                }
                empty_surface_class = label;
            }
        } else {
            label = it->second;
            const std::string& expect = ds.classes[static_cast<std::size_t>(label)].idiom_surface;
            if (expect != surface) {
                throw InvalidInput(where + ": label " + std::to_string(y) + " maps to surface '" +
                                   surface + "' but row " +
                                   std::to_string(first_row[static_cast<std::size_t>(label)]) +
                                   " maps it to '" + expect + "'");
            }
        }
        ds.examples.push_back({label, std::move(text), std::move(surface)});
    }
    return ds;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open dataset file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput(path + ": empty file, expected header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader) {
        throw InvalidInput(path + ":1: expected header \"y<TAB>x<TAB>idiom_y\", got '" + line + "'");
    }
    std::vector<std::tuple<long, std::string, std::string>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t t1 = line.find('\t');
        std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos ||
            line.find('\t', t2 + 1) != std::string::npos) {
            throw InvalidInput(path + ":" + std::to_string(lineno) +
                               ": expected exactly 3 tab-separated fields");
        }
        std::string ys = line.substr(0, t1);
        long y = 0;
        try {
            std::size_t used = 0;
            y = std::stol(ys, &used);
            if (used != ys.size()) throw std::invalid_argument(ys);
        } catch (const std::exception&) {
            throw InvalidInput(path + ":" + std::to_string(lineno) + ": label '" + ys +
                               "' is not an integer");
        }
        rows.emplace_back(y, line.substr(t1 + 1, t2 - t1 - 1), line.substr(t2 + 1));
    }
    try {
        return build_dataset(rows, path);
    } catch (const InvalidInput& e) {
        throw InvalidInput(std::string(e.what()) + " (rows are 1-based after the header)");
    }
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write dataset file: " + path);
    out << kHeader << '\n';
    for (const Example& e : ds.examples) {
        out << ds.classes[static_cast<std::size_t>(e.label)].original_label << '\t' << e.text
            << '\t' << e.idiom_surface << '\n';
    }
    if (!out) throw RunFailure("failed writing dataset file: " + path);
}

ValidationReport validate(const Dataset& ds, std::size_t min_class_count) {
    ValidationReport rep;
    rep.class_counts.assign(ds.num_classes(), 0);
    std::size_t empty_surface_classes = 0;
    for (std::size_t c = 0; c < ds.num_classes(); ++c) {
        if (ds.classes[c].idiom_surface.empty()) ++empty_surface_classes;
    }
    if (empty_surface_classes > 1) {
        rep.errors.push_back(std::to_string(empty_surface_classes) +
                             " classes have an empty idiom surface; at most one non-idiom class "
                             "is allowed");
    }
    std::unordered_map<std::string, std::size_t> seen_text;
    for (std::size_t i = 0; i < ds.examples.size(); ++i) {
        const Example& e = ds.examples[i];
        if (e.label < 0 || static_cast<std::size_t>(e.label) >= ds.num_classes()) {
            rep.errors.push_back("row " + std::to_string(i + 1) + ": label " +
                                 std::to_string(e.label) + " outside [0," +
                                 std::to_string(ds.num_classes()) + ")");
            continue;
        }
        rep.class_counts[static_cast<std::size_t>(e.label)] += 1;
        if (e.text.empty()) {
            rep.errors.push_back("row " + std::to_string(i + 1) + ": empty sentence");
            continue;
        }
        auto [it, inserted] = seen_text.emplace(e.text, i);
        if (!inserted) {
            rep.errors.push_back("duplicate sentence at rows " + std::to_string(it->second + 1) +
                                 " and " + std::to_string(i + 1));
        }
        if (!e.idiom_surface.empty() && e.text.find(e.idiom_surface) == std::string::npos) {
            rep.warnings.push_back("row " + std::to_string(i + 1) + ": idiom surface '" +
                                   e.idiom_surface +
                                   "' does not appear verbatim (inflected use is legal)");
        }
    }
    for (std::size_t c = 0; c < rep.class_counts.size(); ++c) {
        if (rep.class_counts[c] < min_class_count) {
            rep.errors.push_back("class " + std::to_string(c) + " ('" +
                                 ds.classes[c].idiom_surface + "') has " +
                                 std::to_string(rep.class_counts[c]) + " examples, minimum is " +
                                 std::to_string(min_class_count));
        }
    }
    return rep;
}

std::string ValidationReport::to_string() const {
    std::ostringstream out;
    out << "classes: " << class_counts.size() << "\n";
    for (std::size_t c = 0; c < class_counts.size(); ++c) {
        out << "  class " << c << ": " << class_counts[c] << " examples\n";
    }
    out << "errors: " << errors.size() << "\n";
    for (const auto& e : errors) out << "  " << e << "\n";
    out << "warnings: " << warnings.size() << "\n";
    for (const auto& w : warnings) out << "  " << w << "\n";
    return out.str();
}

}  // namespace kidc::dataset
