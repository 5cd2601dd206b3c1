#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kidc::dataset {

struct Example {
    int label = 0;              // dense class id
    std::string text;           // normalized sentence
    std::string idiom_surface;  // canonical idiom string, empty for the non-idiom class
};

struct ClassInfo {
    std::string idiom_surface;
    long original_label = 0;  // the y value as it appeared in the source file
};

// Labels are dense 0..num_classes-1 in first-occurrence order. At most one
// class may carry the empty (non-idiom) surface, and all examples of a class
// share its surface.
struct Dataset {
    std::vector<Example> examples;
    std::vector<ClassInfo> classes;  // index == dense label

    std::size_t num_classes() const { return classes.size(); }
    std::size_t size() const { return examples.size(); }
};

// TSV with header "y<TAB>x<TAB>idiom_y". Text is normalized on load; original
// label values are retained in ClassInfo::original_label.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

// Builds a Dataset from raw rows (original label, text, surface), applying the
// same normalization, dense remapping, and invariant checks as load_dataset.
// row_names are used in error messages ("line 7" for files).
Dataset build_dataset(const std::vector<std::tuple<long, std::string, std::string>>& rows,
                      const std::string& origin);

struct ValidationReport {
    std::vector<std::size_t> class_counts;
    std::vector<std::string> errors;
    std::vector<std::string> warnings;  // e.g. inflected idiom absent from its sentence
    bool ok() const { return errors.empty(); }
    std::string to_string() const;
};

// Always produces a report; never throws on content problems. Idiom surfaces
// missing from their sentence are warnings, not errors, because idioms
// inflect.
ValidationReport validate(const Dataset& ds, std::size_t min_class_count = 1);

enum class Role : std::uint8_t { train = 0, validation = 1, test = 2 };

const char* role_name(Role r);

// Nested stratified k-fold assignment: every example is test in exactly one
// outer fold; within each outer fold the non-test examples split 80/20 into
// train/validation per class (within one example).
struct FoldPlan {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<Role>> roles;  // roles[example][fold]

    std::size_t test_fold_of(std::size_t example) const;
    std::vector<std::size_t> indices(std::size_t fold, Role role) const;

    void save(const std::string& path) const;
    static FoldPlan load(const std::string& path);
};

FoldPlan stratified_nested_folds(const Dataset& ds, std::size_t k, std::uint64_t seed);

struct SyntheticSpec {
    std::size_t num_idioms = 1;
    std::size_t contexts_per_idiom = 1;
    std::size_t variants_per_context = 1;
    std::size_t non_idiom_count = 0;
    std::uint64_t seed = 0;
};

// Deterministic synthetic Sorani dataset: every idiom class gets
// contexts_per_idiom × variants_per_context sentences built from templated
// context frames with a unique per-idiom marker phrase embedded verbatim;
// non-idiom sentences use the same frames without any marker. Output always
// passes validate() with zero errors.
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace kidc::dataset
