#include "kidc/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "kidc/checkpoint.hpp"
#include "kidc/errors.hpp"
#include "kidc/graph.hpp"
#include "kidc/models.hpp"

namespace kidc::training {

namespace fs = std::filesystem;
using models::ModelParams;

void TrainConfig::validate() const {
    model.validate();
    if (epochs < 1) throw InvalidInput("train config: epochs must be >= 1");
    if (batch_size < 1) throw InvalidInput("train config: batch_size must be >= 1");
    if (base_lr <= 0) throw InvalidInput("train config: base_lr must be positive");
    if (eval_every_epochs < 1) throw InvalidInput("train config: eval_every_epochs must be >= 1");
    if (warmup_fraction < 0 || warmup_fraction >= 1) {
        throw InvalidInput("train config: warmup_fraction must be in [0,1)");
    }
    if (clip_norm < 0) throw InvalidInput("train config: clip_norm must be >= 0");
}

TrainConfig paper_train_defaults(const models::ModelConfig& model) {
    TrainConfig cfg;
    cfg.model = model;
    cfg.preset = "paper";
    cfg.batch_size = 16;
    cfg.base_lr = 2e-5;
    cfg.eval_every_epochs = 5;
    switch (model.kind) {
        case models::ModelKind::transformer:
            cfg.epochs = 15;
            cfg.schedule_kind = ScheduleKind::linear_decay_with_warmup;
            cfg.clip_norm = 0.0;
            break;
        case models::ModelKind::rcnn:
            cfg.epochs = 50;
            cfg.schedule_kind = ScheduleKind::constant;
            cfg.clip_norm = 1.0;
            break;
        case models::ModelKind::bilstm_attn:
            cfg.epochs = 50;
            cfg.schedule_kind = ScheduleKind::linear_decay_with_warmup;
            cfg.clip_norm = 1.0;
            break;
    }
    return cfg;
}

TrainConfig desk_train_defaults(const models::ModelConfig& model) {
    TrainConfig cfg = paper_train_defaults(model);
    cfg.preset = "desk";
    switch (model.kind) {
        case models::ModelKind::transformer:
            cfg.epochs = 12;
            cfg.base_lr = 2e-3;
            break;
        case models::ModelKind::rcnn:
            cfg.epochs = 25;
            cfg.base_lr = 4e-3;
            break;
        case models::ModelKind::bilstm_attn:
            cfg.epochs = 25;
            cfg.base_lr = 2e-3;
            break;
    }
    return cfg;
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
    return num::Rng::stream(seed, 0xF01D + fold).next_u64();
}

namespace {

nlohmann::json train_config_json(const TrainConfig& cfg) {
    nlohmann::json j;
    j["model"] = nlohmann::json::parse(cfg.model.to_json_string());
    j["preset"] = cfg.preset;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["base_lr"] = cfg.base_lr;
    j["eval_every_epochs"] = cfg.eval_every_epochs;
    j["seed"] = cfg.seed;
    j["fold"] = cfg.fold;
    j["weight_decay"] = cfg.optimizer.weight_decay;
    j["beta1"] = cfg.optimizer.beta1;
    j["beta2"] = cfg.optimizer.beta2;
    j["epsilon"] = cfg.optimizer.epsilon;
    j["schedule"] = schedule_name(cfg.schedule_kind);
    j["warmup_fraction"] = cfg.warmup_fraction;
    j["clip_norm"] = cfg.clip_norm;
    return j;
}

nlohmann::json metrics_json(const evaluation::MetricsRow& m) {
    return nlohmann::json{{"accuracy", m.accuracy},
                          {"precision", m.precision},
                          {"recall", m.recall},
                          {"f1", m.f1}};
}

evaluation::MetricsRow metrics_from_json(const nlohmann::json& j) {
    evaluation::MetricsRow m;
    m.accuracy = j.at("accuracy").get<double>();
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.f1 = j.at("f1").get<double>();
    return m;
}

// write-then-rename so a failed write never clobbers the last good checkpoint
void save_checkpoint_atomic(const ModelParams& params, const std::string& path) {
    std::string tmp = path + ".tmp";
    models::save_params(params, tmp);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw RunFailure("cannot move checkpoint into place at " + path + ": " + ec.message());
}

}  // namespace

EncodedDataset encode_dataset(const dataset::Dataset& ds, const tokenizer::Vocab& vocab,
                              std::size_t max_len) {
    EncodedDataset out;
    out.inputs.reserve(ds.examples.size());
    out.labels.reserve(ds.examples.size());
    for (const auto& e : ds.examples) {
        out.inputs.push_back(tokenizer::encode(e.text, vocab, max_len));
        out.labels.push_back(e.label);
    }
    out.num_classes = ds.num_classes();
    return out;
}

evaluation::MetricsRow evaluate_subset(const ModelParams& params, const models::ModelConfig& cfg,
                                       const EncodedDataset& data,
                                       const std::vector<std::size_t>& indices,
                                       std::size_t batch_size) {
    if (indices.empty()) throw InvalidInput("evaluate_subset: empty index set");
    std::vector<int> preds;
    std::vector<int> labels;
    preds.reserve(indices.size());
    labels.reserve(indices.size());
    for (std::size_t at = 0; at < indices.size(); at += batch_size) {
        std::size_t end = std::min(indices.size(), at + batch_size);
        models::Batch batch;
        batch.reserve(end - at);
        for (std::size_t i = at; i < end; ++i) batch.push_back(data.inputs[indices[i]]);
        num::Tensor logits = models::forward_eval(params, cfg, batch);
        for (int p : models::predict(logits)) preds.push_back(p);
        for (std::size_t i = at; i < end; ++i) labels.push_back(data.labels[indices[i]]);
    }
    auto cm = evaluation::ConfusionMatrix::from_pairs(preds, labels,
                                                      std::max(data.num_classes, cfg.num_classes));
    return evaluation::metrics(cm);
}

RunRecord train_on_indices(const EncodedDataset& data, std::vector<std::size_t> train_idx,
                           std::vector<std::size_t> val_idx,
                           const std::vector<std::size_t>& test_idx, const TrainConfig& cfg,
                           const std::string& out_dir) {
    cfg.validate();
    if (train_idx.empty()) throw InvalidInput("train_on_indices: empty training set");
    for (const auto& idx : {train_idx, val_idx, test_idx}) {
        for (std::size_t i : idx) {
            if (i >= data.inputs.size()) {
                throw InvalidInput("train_on_indices: example index " + std::to_string(i) +
                                   " outside dataset of " + std::to_string(data.inputs.size()));
            }
        }
    }
    auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);

    std::uint64_t seed = fold_seed(cfg.seed, cfg.fold);
    ModelParams params = ModelParams::init(cfg.model, seed);
    AdamW opt(cfg.optimizer, models::param_schema(cfg.model));
    num::Rng shuffle_rng = num::Rng::stream(seed, 1);
    num::Rng dropout_rng = num::Rng::stream(seed, 2);

    const std::size_t steps_per_epoch = (train_idx.size() + cfg.batch_size - 1) / cfg.batch_size;
    Schedule sched;
    sched.kind = cfg.schedule_kind;
    sched.total_steps = cfg.epochs * steps_per_epoch;
    if (sched.kind == ScheduleKind::linear_decay_with_warmup) {
        sched.warmup_steps = static_cast<std::size_t>(
            std::llround(cfg.warmup_fraction * static_cast<double>(sched.total_steps)));
        if (sched.warmup_steps >= sched.total_steps && sched.total_steps > 0) {
            sched.warmup_steps = sched.total_steps - 1;
        }
    }

    RunRecord rec;
    rec.model_kind = models::kind_name(cfg.model.kind);
    rec.fold = cfg.fold;
    rec.seed = cfg.seed;
    rec.config_json = train_config_json(cfg).dump();
    rec.best_checkpoint_path = (fs::path(out_dir) / "best.ckpt").string();
    rec.final_checkpoint_path = (fs::path(out_dir) / "final.ckpt").string();

    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(train_idx);
        double loss_sum = 0.0;
        for (std::size_t at = 0; at < train_idx.size(); at += cfg.batch_size) {
            std::size_t end = std::min(train_idx.size(), at + cfg.batch_size);
            models::Batch batch;
            std::vector<int> targets;
            batch.reserve(end - at);
            targets.reserve(end - at);
            for (std::size_t i = at; i < end; ++i) {
                batch.push_back(data.inputs[train_idx[i]]);
                targets.push_back(data.labels[train_idx[i]]);
            }
            try {
                num::Graph g;
                models::BoundParams bound = models::bind_params(g, params, cfg.model);
                models::ForwardOptions opts{true, &dropout_rng};
                num::Var loss = g.cross_entropy(models::forward(g, bound, cfg.model, batch, opts),
                                                targets);
                double loss_val = g.val(loss)[0];
                if (!std::isfinite(loss_val)) {
                    throw RunFailure("non-finite loss");
                }
                loss_sum += loss_val * static_cast<double>(end - at);
                g.backward(loss);

                std::unordered_map<std::string, num::Tensor> grads;
                grads.reserve(bound.vars.size());
                for (const auto& [name, var] : bound.vars) {
                    if (g.is_trainable(var)) grads.emplace(name, g.grad(var));
                }
                if (cfg.clip_norm > 0.0) {
                    double sq = 0.0;
                    for (const auto& [name, gt] : grads) {
                        for (double v : gt.values()) sq += v * v;
                    }
                    double norm = std::sqrt(sq);
                    if (norm > cfg.clip_norm) {
                        double scale = cfg.clip_norm / norm;
                        for (auto& [name, gt] : grads) {
                            for (double& v : gt.values()) v *= scale;
                        }
                    }
                }
                opt.step(params, grads, lr_at(step, sched, cfg.base_lr));
                ++step;
            } catch (const RunFailure& e) {
                throw RunFailure("epoch " + std::to_string(epoch) + " batch " +
                                 std::to_string(at / cfg.batch_size) + ": " + e.what());
            }
        }
        rec.epoch_train_loss.push_back(loss_sum / static_cast<double>(train_idx.size()));

        bool eval_now = (epoch % cfg.eval_every_epochs == 0 || epoch == cfg.epochs);
        if (eval_now && !val_idx.empty()) {
            evaluation::MetricsRow m = evaluate_subset(params, cfg.model, data, val_idx,
                                                       cfg.batch_size);
            rec.validation.push_back({epoch, m});
            if (rec.validation.size() == 1 || m.f1 > rec.best_val_f1) {
                rec.best_val_f1 = m.f1;
                rec.best_epoch = epoch;
                save_checkpoint_atomic(params, rec.best_checkpoint_path);
            }
        }
    }
    save_checkpoint_atomic(params, rec.final_checkpoint_path);
    if (rec.validation.empty()) {
        // nothing selected a best checkpoint; the final model is the best model
        rec.best_epoch = cfg.epochs;
        save_checkpoint_atomic(params, rec.best_checkpoint_path);
    }

    // test metrics are computed exactly once, after training is complete
    if (!test_idx.empty()) {
        rec.test = evaluate_subset(params, cfg.model, data, test_idx, cfg.batch_size);
        ModelParams best = models::load_params_for(rec.best_checkpoint_path, cfg.model);
        rec.best_checkpoint_test = evaluate_subset(best, cfg.model, data, test_idx,
                                                   cfg.batch_size);
    }
    rec.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.save((fs::path(out_dir) / "record.json").string());
    return rec;
}

RunRecord train_fold(const EncodedDataset& data, const dataset::FoldPlan& plan, std::size_t fold,
                     const TrainConfig& cfg, const std::string& out_dir) {
    if (plan.roles.size() != data.inputs.size()) {
        throw InvalidInput("fold plan covers " + std::to_string(plan.roles.size()) +
                           " examples, dataset has " + std::to_string(data.inputs.size()));
    }
    TrainConfig fold_cfg = cfg;
    fold_cfg.fold = fold;
    return train_on_indices(data, plan.indices(fold, dataset::Role::train),
                            plan.indices(fold, dataset::Role::validation),
                            plan.indices(fold, dataset::Role::test), fold_cfg, out_dir);
}

CvResult run_cross_validation(const dataset::Dataset& ds, const dataset::FoldPlan& plan,
                              const TrainConfig& base_cfg, const std::string& out_dir,
                              const CvOptions& opts) {
    if (plan.roles.size() != ds.examples.size()) {
        throw InvalidInput("fold plan covers " + std::to_string(plan.roles.size()) +
                           " examples, dataset has " + std::to_string(ds.examples.size()));
    }
    fs::create_directories(out_dir);
    save_class_table(ds, (fs::path(out_dir) / "classes.tsv").string());

    CvResult result;
    result.records.resize(plan.k);
    result.fold_errors.assign(plan.k, "");
    std::vector<char> ok(plan.k, 0);

    auto run_fold = [&](std::size_t f) {
        try {
            std::string fold_dir = (fs::path(out_dir) / ("fold_" + std::to_string(f))).string();
            fs::create_directories(fold_dir);

            tokenizer::Vocab vocab = [&] {
                if (opts.shared_vocab) return *opts.shared_vocab;
                std::vector<std::string> train_texts;
                for (std::size_t i : plan.indices(f, dataset::Role::train)) {
                    train_texts.push_back(ds.examples[i].text);
                }
                return tokenizer::train_vocab(train_texts, opts.vocab_target_size,
                                              opts.vocab_min_freq);
            }();
            std::string fold_dir_vocab = (fs::path(fold_dir) / "vocab.txt").string();
            vocab.save(fold_dir_vocab);

            TrainConfig cfg = base_cfg;
            cfg.model.vocab_size = vocab.size();
            cfg.model.num_classes = ds.num_classes();
            cfg.fold = f;
            cfg.model.save((fs::path(fold_dir) / "config.json").string());

            EncodedDataset data = encode_dataset(ds, vocab, cfg.model.max_len);
            result.records[f] = train_fold(data, plan, f, cfg, fold_dir);
            ok[f] = 1;
        } catch (const std::exception& e) {
            result.fold_errors[f] = e.what();
        }
    };

    std::size_t parallel = std::max<std::size_t>(1, opts.parallel);
    for (std::size_t base = 0; base < plan.k; base += parallel) {
        std::vector<std::thread> wave;
        for (std::size_t f = base; f < std::min(plan.k, base + parallel); ++f) {
            wave.emplace_back(run_fold, f);
        }
        for (auto& t : wave) t.join();
    }

    std::vector<evaluation::MetricsRow> rows;
    for (std::size_t f = 0; f < plan.k; ++f) {
        if (ok[f]) {
            rows.push_back(result.records[f].test);
        } else {
            result.failed = true;
        }
    }
    if (!rows.empty()) result.aggregate = evaluation::aggregate_folds(rows);

    nlohmann::json summary;
    summary["k"] = plan.k;
    summary["failed"] = result.failed;
    summary["fold_errors"] = result.fold_errors;
    nlohmann::json jfolds = nlohmann::json::array();
    for (std::size_t f = 0; f < plan.k; ++f) {
        if (ok[f]) {
            jfolds.push_back(metrics_json(result.records[f].test));
        } else {
            jfolds.push_back(nullptr);
        }
    }
    summary["fold_test_metrics"] = jfolds;
    if (!rows.empty()) summary["aggregate"] = metrics_json(result.aggregate);
    std::ofstream sum_out(fs::path(out_dir) / "summary.json", std::ios::binary);
    sum_out << summary.dump(1) << '\n';

    if (result.failed) {
        std::string detail;
        for (std::size_t f = 0; f < plan.k; ++f) {
            if (!result.fold_errors[f].empty()) {
                detail += " fold " + std::to_string(f) + ": " + result.fold_errors[f] + ";";
            }
        }
        throw RunFailure("cross-validation failed, partial results in " + out_dir + ":" + detail);
    }
    return result;
}

void save_class_table(const dataset::Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write class table: " + path);
    out << "label\tidiom_y\toriginal_y\n";
    for (std::size_t c = 0; c < ds.num_classes(); ++c) {
        out << c << '\t' << ds.classes[c].idiom_surface << '\t' << ds.classes[c].original_label
            << '\n';
    }
}

std::vector<std::pair<int, std::string>> load_class_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open class table: " + path);
    std::string line;
    std::getline(in, line);
    std::vector<std::pair<int, std::string>> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t t1 = line.find('\t');
        std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos) {
            throw InvalidInput(path + ": malformed class table line");
        }
        out.emplace_back(std::stoi(line.substr(0, t1)), line.substr(t1 + 1, t2 - t1 - 1));
    }
    return out;
}

// ---------------------------------------------------------------------------
// RunRecord (de)serialization
// ---------------------------------------------------------------------------

std::string RunRecord::to_json_string() const {
    nlohmann::json j;
    j["model_kind"] = model_kind;
    j["fold"] = fold;
    j["seed"] = seed;
    j["epoch_train_loss"] = epoch_train_loss;
    nlohmann::json val = nlohmann::json::array();
    for (const auto& p : validation) {
        val.push_back({{"epoch", p.epoch}, {"metrics", metrics_json(p.metrics)}});
    }
    j["validation"] = val;
    j["test"] = metrics_json(test);
    j["best_checkpoint_test"] = metrics_json(best_checkpoint_test);
    j["best_val_f1"] = best_val_f1;
    j["best_epoch"] = best_epoch;
    j["duration_seconds"] = duration_seconds;
    j["config"] = nlohmann::json::parse(config_json.empty() ? "{}" : config_json);
    j["best_checkpoint_path"] = best_checkpoint_path;
    j["final_checkpoint_path"] = final_checkpoint_path;
    return j.dump(1);
}

RunRecord RunRecord::from_json_string(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        RunRecord r;
        r.model_kind = j.at("model_kind").get<std::string>();
        r.fold = j.at("fold").get<std::size_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.epoch_train_loss = j.at("epoch_train_loss").get<std::vector<double>>();
        for (const auto& p : j.at("validation")) {
            r.validation.push_back(
                {p.at("epoch").get<std::size_t>(), metrics_from_json(p.at("metrics"))});
        }
        r.test = metrics_from_json(j.at("test"));
        r.best_checkpoint_test = metrics_from_json(j.at("best_checkpoint_test"));
        r.best_val_f1 = j.at("best_val_f1").get<double>();
        r.best_epoch = j.at("best_epoch").get<std::size_t>();
        r.duration_seconds = j.at("duration_seconds").get<double>();
        r.config_json = j.at("config").dump();
        r.best_checkpoint_path = j.at("best_checkpoint_path").get<std::string>();
        r.final_checkpoint_path = j.at("final_checkpoint_path").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("run record JSON: ") + e.what());
    }
}

void RunRecord::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write run record: " + path);
    out << to_json_string() << '\n';
    if (!out) throw RunFailure("failed writing run record: " + path);
}

RunRecord RunRecord::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open run record: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

}  // namespace kidc::training
