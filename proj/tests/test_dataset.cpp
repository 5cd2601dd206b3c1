#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "kidc/dataset.hpp"
#include "kidc/errors.hpp"
#include "kidc/rng.hpp"
#include "support/fold_invariants.hpp"

using namespace kidc::dataset;
using kidc::InvalidInput;
using kidc::num::Rng;

namespace {

std::filesystem::path write_tmp(const std::string& name, const std::string& content) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
}

// Six sentences for one idiom class (y=4), using inflected forms of the
// canonical surface so the surface never appears verbatim.
const char* kIdiomSurface = "برین کولاندنەوە";

std::string sample_tsv() {
    std::string s = "y\tx\tidiom_y\n";
    const char* sentences[] = {
        "مەبەستم نەبوو برینت بکولێنمەوە بە قسەکەم.",
        "برینەکەت کولایەوە کە باسم کرد.",
        "نەمدەزانی برینی دەکولێنمەوە بەو باسە.",
        "هەر جارێک برینەکەی دەکولێتەوە بەو یادەوەرییە.",
        "قسەکە برینی کۆنی کولاندەوە.",
        "ئەو باسە برینێکی کولاندەوە کە ساڕێژ نەببوو.",
    };
    for (const char* x : sentences) {
        s += "4\t";
        s += x;
        s += "\t";
        s += kIdiomSurface;
        s += "\n";
    }
    return s;
}

}  // namespace

TEST_CASE("load_dataset: idiom table sample gives one dense class") {
    auto p = write_tmp("kidc_ds_sample.tsv", sample_tsv());
    Dataset ds = load_dataset(p.string());
    CHECK(ds.examples.size() == 6);
    CHECK(ds.num_classes() == 1);
    CHECK(ds.classes[0].original_label == 4);
    CHECK(ds.classes[0].idiom_surface == kIdiomSurface);
    for (const auto& e : ds.examples) CHECK(e.label == 0);

    ValidationReport rep = validate(ds);
    CHECK(rep.ok());
    CHECK(rep.errors.empty());
    CHECK(rep.warnings.size() >= 1);  // inflected forms, surface absent verbatim
    CHECK(rep.class_counts == std::vector<std::size_t>{6});
    std::filesystem::remove(p);
}

TEST_CASE("load_dataset: header-only file is an empty dataset") {
    auto p = write_tmp("kidc_ds_empty.tsv", "y\tx\tidiom_y\n");
    Dataset ds = load_dataset(p.string());
    CHECK(ds.examples.empty());
    CHECK(ds.num_classes() == 0);
    std::filesystem::remove(p);
}

TEST_CASE("load_dataset: malformed input errors carry line numbers") {
    auto p1 = write_tmp("kidc_ds_bad1.tsv", "wrong header\n");
    CHECK_THROWS_AS(load_dataset(p1.string()), InvalidInput);

    auto p2 = write_tmp("kidc_ds_bad2.tsv", "y\tx\tidiom_y\n1\tonly two fields\n");
    CHECK_THROWS_WITH_AS(load_dataset(p2.string()),
                         (p2.string() + ":2: expected exactly 3 tab-separated fields").c_str(),
                         InvalidInput);

    auto p3 = write_tmp("kidc_ds_bad3.tsv", "y\tx\tidiom_y\nfour\ttext\tsurface\n");
    CHECK_THROWS_AS(load_dataset(p3.string()), InvalidInput);

    auto p4 = write_tmp("kidc_ds_bad4.tsv", "y\tx\tidiom_y\n1\t \t\n");
    CHECK_THROWS_AS(load_dataset(p4.string()), InvalidInput);  // empty after normalization

    CHECK_THROWS_AS(load_dataset("/nonexistent/kidc.tsv"), InvalidInput);
    for (auto& p : {p1, p2, p3, p4}) std::filesystem::remove(p);
}

TEST_CASE("load_dataset: one label with two surfaces names both rows") {
    auto p = write_tmp("kidc_ds_conflict.tsv",
                       "y\tx\tidiom_y\n7\tsentence one\tsurface a\n7\tsentence two\tsurface b\n");
    try {
        load_dataset(p.string());
        FAIL("expected InvalidInput");
    } catch (const InvalidInput& e) {
        std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("row 1") != std::string::npos);
    }
    std::filesystem::remove(p);
}

TEST_CASE("load_dataset: only one non-idiom class may exist") {
    auto p = write_tmp("kidc_ds_two_empty.tsv",
                       "y\tx\tidiom_y\n1\tsentence one\t\n2\tsentence two\t\n");
    CHECK_THROWS_AS(load_dataset(p.string()), InvalidInput);
    std::filesystem::remove(p);
}

TEST_CASE("save then load is the identity on dataset content") {
    Dataset ds = generate_synthetic({3, 4, 2, 6, 11});
    auto p = std::filesystem::temp_directory_path() / "kidc_ds_rt.tsv";
    save_dataset(ds, p.string());
    Dataset back = load_dataset(p.string());
    REQUIRE(back.examples.size() == ds.examples.size());
    REQUIRE(back.num_classes() == ds.num_classes());
    for (std::size_t i = 0; i < ds.examples.size(); ++i) {
        CHECK(back.examples[i].label == ds.examples[i].label);
        CHECK(back.examples[i].text == ds.examples[i].text);
        CHECK(back.examples[i].idiom_surface == ds.examples[i].idiom_surface);
    }
    for (std::size_t c = 0; c < ds.num_classes(); ++c) {
        CHECK(back.classes[c].idiom_surface == ds.classes[c].idiom_surface);
        CHECK(back.classes[c].original_label == ds.classes[c].original_label);
    }
    std::filesystem::remove(p);
}

TEST_CASE("validate flags duplicates with both row indices") {
    Dataset ds;
    ds.classes = {{"idiom x", 0}};
    ds.examples = {{0, "a b c", "idiom x"}, {0, "d e f", "idiom x"}, {0, "a b c", "idiom x"}};
    ValidationReport rep = validate(ds);
    REQUIRE(rep.errors.size() == 1);
    CHECK(rep.errors[0] == "duplicate sentence at rows 1 and 3");
}

TEST_CASE("validate reports classes under the configured minimum") {
    Dataset ds = generate_synthetic({2, 2, 1, 1, 5});
    ValidationReport rep = validate(ds, 2);
    REQUIRE(rep.errors.size() == 1);  // the single non-idiom example
    CHECK(rep.errors[0].find("minimum is 2") != std::string::npos);
}

TEST_CASE("balanced synthetic dataset has equal per-class counts") {
    Dataset ds = generate_synthetic({4, 5, 2, 10, 3});
    ValidationReport rep = validate(ds);
    CHECK(rep.ok());
    CHECK(rep.warnings.empty());
    CHECK(rep.class_counts == std::vector<std::size_t>{10, 10, 10, 10, 10});
}

TEST_CASE("generate_synthetic: counting and determinism") {
    Dataset small = generate_synthetic({2, 3, 2, 5, 7});
    CHECK(small.examples.size() == 17);
    CHECK(small.num_classes() == 3);
    CHECK(small.classes[2].idiom_surface.empty());

    Dataset one = generate_synthetic({3, 1, 1, 0, 7});
    CHECK(one.examples.size() == 3);
    CHECK(one.num_classes() == 3);

    Dataset a = generate_synthetic({5, 4, 3, 9, 123});
    Dataset b = generate_synthetic({5, 4, 3, 9, 123});
    REQUIRE(a.examples.size() == b.examples.size());
    for (std::size_t i = 0; i < a.examples.size(); ++i) {
        CHECK(a.examples[i].text == b.examples[i].text);
    }
    Dataset c = generate_synthetic({5, 4, 3, 9, 124});
    bool any_diff = false;
    for (std::size_t i = 0; i < a.examples.size(); ++i) {
        any_diff = any_diff || a.examples[i].text != c.examples[i].text;
    }
    CHECK(any_diff);

    CHECK_THROWS_AS(generate_synthetic({0, 1, 1, 0, 1}), InvalidInput);
}

TEST_CASE("generate_synthetic: paper-shaped spec yields 101x35x3 sentences") {
    Dataset ds = generate_synthetic({101, 35, 3, 0, 42});
    CHECK(ds.examples.size() == 10605);
    CHECK(ds.num_classes() == 101);
    ValidationReport rep = validate(ds);
    CHECK(rep.ok());
}

TEST_CASE("stratified folds: exact counting case 102x100, k=5") {
    Dataset ds = generate_synthetic({101, 20, 5, 100, 9});  // 102 classes x 100 examples
    FoldPlan plan = stratified_nested_folds(ds, 5, 33);
    CHECK(kidc::testing::check_fold_invariants(ds, plan).empty());
    for (std::size_t f = 0; f < 5; ++f) {
        std::vector<std::size_t> count(ds.num_classes(), 0);
        for (std::size_t i : plan.indices(f, Role::test)) {
            count[static_cast<std::size_t>(ds.examples[i].label)] += 1;
        }
        for (std::size_t c = 0; c < ds.num_classes(); ++c) CHECK(count[c] == 20);
    }
}

TEST_CASE("stratified folds: k=1 and undersized classes are rejected") {
    Dataset ds = generate_synthetic({2, 2, 1, 4, 1});
    CHECK_THROWS_AS(stratified_nested_folds(ds, 1, 0), InvalidInput);
    try {
        stratified_nested_folds(ds, 5, 0);
        FAIL("expected InvalidInput");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("class 0") != std::string::npos);
        CHECK(std::string(e.what()).find("fewer than k=5") != std::string::npos);
    }
}

TEST_CASE("stratified folds: deterministic per (order, k, seed)") {
    Dataset ds = generate_synthetic({3, 10, 2, 20, 5});
    FoldPlan a = stratified_nested_folds(ds, 4, 17);
    FoldPlan b = stratified_nested_folds(ds, 4, 17);
    CHECK(a.roles == b.roles);
    FoldPlan c = stratified_nested_folds(ds, 4, 18);
    CHECK(a.roles != c.roles);
}

TEST_CASE("fold plan invariants hold over random datasets and seeds") {
    Rng rng(2024);
    for (int rep = 0; rep < 25; ++rep) {
        SyntheticSpec spec;
        spec.num_idioms = 1 + rng.index(8);
        spec.contexts_per_idiom = 2 + rng.index(10);
        spec.variants_per_context = 1 + rng.index(3);
        spec.non_idiom_count = rng.index(40);
        spec.seed = rng.next_u64();
        Dataset ds = generate_synthetic(spec);
        std::size_t k = 2 + rng.index(4);
        bool feasible = true;
        std::vector<std::size_t> counts(ds.num_classes(), 0);
        for (const auto& e : ds.examples) counts[static_cast<std::size_t>(e.label)] += 1;
        for (std::size_t n : counts) feasible = feasible && n >= k;
        if (!feasible) continue;
        FoldPlan plan = stratified_nested_folds(ds, k, rng.next_u64());
        std::string issue = kidc::testing::check_fold_invariants(ds, plan);
        CAPTURE(issue);
        CHECK(issue.empty());
    }
}

TEST_CASE("fold plan JSON round-trip") {
    Dataset ds = generate_synthetic({2, 4, 2, 6, 77});
    FoldPlan plan = stratified_nested_folds(ds, 3, 55);
    auto p = std::filesystem::temp_directory_path() / "kidc_plan.json";
    plan.save(p.string());
    FoldPlan back = FoldPlan::load(p.string());
    CHECK(back.k == plan.k);
    CHECK(back.seed == plan.seed);
    CHECK(back.roles == plan.roles);
    std::filesystem::remove(p);
    CHECK_THROWS_AS(FoldPlan::load("/nonexistent/plan.json"), InvalidInput);
    auto bad = write_tmp("kidc_plan_bad.json", "{\"k\": 2}");
    CHECK_THROWS_AS(FoldPlan::load(bad.string()), InvalidInput);
    std::filesystem::remove(bad);
}
