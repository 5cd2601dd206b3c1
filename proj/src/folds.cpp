#include <cmath>
#include <fstream>

#include <json.hpp>

#include "kidc/dataset.hpp"
#include "kidc/errors.hpp"
#include "kidc/rng.hpp"

namespace kidc::dataset {

const char* role_name(Role r) {
    switch (r) {
        case Role::train: return "train";
        case Role::validation: return "validation";
        case Role::test: return "test";
    }
    return "?";
}

namespace {

Role role_from_name(const std::string& s) {
    if (s == "train") return Role::train;
    if (s == "validation") return Role::validation;
    if (s == "test") return Role::test;
    throw InvalidInput("fold plan: unknown role '" + s + "'");
}

}  // namespace

std::size_t FoldPlan::test_fold_of(std::size_t example) const {
    const auto& r = roles.at(example);
    for (std::size_t f = 0; f < r.size(); ++f) {
        if (r[f] == Role::test) return f;
    }
    throw InvalidInput("fold plan: example " + std::to_string(example) + " is never a test example");
}

std::vector<std::size_t> FoldPlan::indices(std::size_t fold, Role role) const {
    if (fold >= k) {
        throw InvalidInput("fold " + std::to_string(fold) + " out of range, plan has k=" +
                           std::to_string(k));
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < roles.size(); ++i) {
        if (roles[i][fold] == role) out.push_back(i);
    }
    return out;
}

void FoldPlan::save(const std::string& path) const {
    nlohmann::json j;
    j["k"] = k;
    j["seed"] = seed;
    nlohmann::json jroles = nlohmann::json::array();
    for (const auto& per_example : roles) {
        nlohmann::json row = nlohmann::json::array();
        for (Role r : per_example) row.push_back(role_name(r));
        jroles.push_back(std::move(row));
    }
    j["roles"] = std::move(jroles);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write fold plan: " + path);
    out << j.dump(1) << '\n';
    if (!out) throw RunFailure("failed writing fold plan: " + path);
}

FoldPlan FoldPlan::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open fold plan: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": not a valid fold plan: " + e.what());
    }
    FoldPlan plan;
    try {
        plan.k = j.at("k").get<std::size_t>();
        plan.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& row : j.at("roles")) {
            std::vector<Role> per_example;
            for (const auto& r : row) per_example.push_back(role_from_name(r.get<std::string>()));
            if (per_example.size() != plan.k) {
                throw InvalidInput(path + ": roles row has " + std::to_string(per_example.size()) +
                                   " entries, expected k=" + std::to_string(plan.k));
            }
            plan.roles.push_back(std::move(per_example));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": not a valid fold plan: " + e.what());
    }
    for (std::size_t i = 0; i < plan.roles.size(); ++i) plan.test_fold_of(i);  // sanity
    return plan;
}

FoldPlan stratified_nested_folds(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    if (k < 2) {
        throw InvalidInput("k=" + std::to_string(k) +
                           " gives no test/train separation; need k >= 2");
    }
    std::vector<std::vector<std::size_t>> members(ds.num_classes());
    for (std::size_t i = 0; i < ds.examples.size(); ++i) {
        members[static_cast<std::size_t>(ds.examples[i].label)].push_back(i);
    }
    for (std::size_t c = 0; c < members.size(); ++c) {
        if (members[c].size() < k) {
            throw InvalidInput("class " + std::to_string(c) + " ('" + ds.classes[c].idiom_surface +
                               "') has " + std::to_string(members[c].size()) +
                               " examples, fewer than k=" + std::to_string(k));
        }
    }

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.roles.assign(ds.examples.size(), std::vector<Role>(k, Role::train));

    for (std::size_t c = 0; c < members.size(); ++c) {
        std::vector<std::size_t>& idx = members[c];
        num::Rng rng = num::Rng::stream(seed, c);
        rng.shuffle(idx);
        // round-robin test assignment keeps per-fold class counts within one
        for (std::size_t i = 0; i < idx.size(); ++i) {
            plan.roles[idx[i]][i % k] = Role::test;
        }
        // inner 80/20 split per fold, stratified within the class; the window
        // rotates with the fold so validation duty spreads over the class
        for (std::size_t f = 0; f < k; ++f) {
            std::vector<std::size_t> non_test;
            for (std::size_t i = 0; i < idx.size(); ++i) {
                if (i % k != f) non_test.push_back(idx[i]);
            }
            std::size_t n_val =
                static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(non_test.size())));
            for (std::size_t v = 0; v < n_val; ++v) {
                std::size_t pos = (f * n_val + v) % non_test.size();
                plan.roles[non_test[pos]][f] = Role::validation;
            }
        }
    }
    return plan;
}

}  // namespace kidc::dataset
