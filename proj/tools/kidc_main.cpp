// kidc — Sorani Kurdish idiom detection toolkit.
// Subcommands cover the full pipeline: normalization, vocabulary training,
// encoding, synthetic data, validation, fold planning, training, k-fold
// cross-validation, evaluation, single-sentence classification, reporting.
// Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.
// Logs go to stderr; results go to files (classify prints to stdout).

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kidc/checkpoint.hpp"
#include "kidc/dataset.hpp"
#include "kidc/errors.hpp"
#include "kidc/metrics.hpp"
#include "kidc/models.hpp"
#include "kidc/report.hpp"
#include "kidc/textnorm.hpp"
#include "kidc/tokenizer.hpp"
#include "kidc/trainer.hpp"

namespace fs = std::filesystem;
using namespace kidc;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

models::ModelConfig preset_model_config(const std::string& preset, models::ModelKind kind,
                                        std::size_t vocab_size, std::size_t num_classes) {
    if (preset == "paper") return models::paper_config(kind, vocab_size, num_classes);
    if (preset == "desk") return models::desk_config(kind, vocab_size, num_classes);
    throw InvalidInput("unknown preset '" + preset + "'; expected paper or desk");
}

training::TrainConfig preset_train_config(const std::string& preset,
                                          const models::ModelConfig& model) {
    return preset == "paper" ? training::paper_train_defaults(model)
                             : training::desk_train_defaults(model);
}

tokenizer::Vocab fold_vocab(const dataset::Dataset& ds, const dataset::FoldPlan& plan,
                            std::size_t fold, std::size_t target_size, std::size_t min_freq) {
    std::vector<std::string> texts;
    for (std::size_t i : plan.indices(fold, dataset::Role::train)) {
        texts.push_back(ds.examples[i].text);
    }
    return tokenizer::train_vocab(texts, target_size, min_freq);
}

// sidecar file next to a checkpoint, or one directory up (cv layout)
std::string sidecar(const std::string& checkpoint_path, const char* name) {
    fs::path dir = fs::path(checkpoint_path).parent_path();
    if (fs::exists(dir / name)) return (dir / name).string();
    if (fs::exists(dir.parent_path() / name)) return (dir.parent_path() / name).string();
    throw InvalidInput(std::string("cannot locate ") + name + " next to " + checkpoint_path +
                       "; pass it explicitly");
}

struct TrainOverrides {
    std::size_t epochs = 0;
    std::size_t batch_size = 0;
    double lr = 0.0;
    std::uint64_t seed = 0;
    std::size_t max_len = 0;
    double weight_decay = -1.0;
    double clip_norm = -1.0;
    std::size_t eval_every = 0;
    bool freeze_encoder = false;

    void apply(training::TrainConfig& cfg) const {
        if (epochs) cfg.epochs = epochs;
        if (batch_size) cfg.batch_size = batch_size;
        if (lr > 0) cfg.base_lr = lr;
        cfg.seed = seed;
        if (max_len) cfg.model.max_len = max_len;
        if (weight_decay >= 0) cfg.optimizer.weight_decay = weight_decay;
        if (clip_norm >= 0) cfg.clip_norm = clip_norm;
        if (eval_every) cfg.eval_every_epochs = eval_every;
        if (freeze_encoder) cfg.model.freeze_encoder = true;
    }
};

void add_train_overrides(CLI::App* cmd, TrainOverrides& ov) {
    cmd->add_option("--epochs", ov.epochs,
                    "Training epochs (default per model/preset; 15/50/50 at paper settings)");
    cmd->add_option("--batch-size", ov.batch_size, "Mini-batch size (default 16)");
    cmd->add_option("--lr", ov.lr, "Base learning rate (default 2e-5 at paper settings)");
    cmd->add_option("--seed", ov.seed, "RNG seed; all randomness derives from it (default 0)");
    cmd->add_option("--max-len", ov.max_len, "Sequence length (default 128 paper / 32 desk)");
    cmd->add_option("--weight-decay", ov.weight_decay, "AdamW decoupled decay (default 0.01)");
    cmd->add_option("--clip-norm", ov.clip_norm,
                    "Global gradient-norm clip; 0 disables (default 1.0 for LSTM models)");
    cmd->add_option("--eval-every", ov.eval_every, "Validate every N epochs (default 5)");
    cmd->add_flag("--freeze-encoder", ov.freeze_encoder,
                  "Freeze the contextual encoder of bilstm-attn");
}

int run_cli(int argc, char** argv) {
    CLI::App app{"kidc — Sorani Kurdish idiom detection toolkit"};
    app.require_subcommand(1);

    // ---- normalize ----
    auto* norm_cmd = app.add_subcommand("normalize", "Normalize Arabic-script text line by line");
    std::string norm_in, norm_out, norm_table;
    norm_cmd->add_option("--in", norm_in, "Input text file (UTF-8)")->required();
    norm_cmd->add_option("--out", norm_out, "Output file")->required();
    norm_cmd->add_option("--table", norm_table,
                         "Character unification table (default: built-in Sorani table)");
    norm_cmd->callback([&] {
        textnorm::UnificationTable table = norm_table.empty()
                                               ? textnorm::UnificationTable::builtin()
                                               : textnorm::UnificationTable::load(norm_table);
        std::ofstream out(norm_out, std::ios::binary);
        if (!out) throw InvalidInput("cannot write file: " + norm_out);
        for (const std::string& line : read_lines(norm_in)) {
            out << textnorm::normalize(line, {}, table) << '\n';
        }
        if (!out) throw RunFailure("failed writing " + norm_out);
    });

    // ---- vocab train ----
    auto* vocab_cmd = app.add_subcommand("vocab", "Subword vocabulary tools");
    vocab_cmd->require_subcommand(1);
    auto* vocab_train = vocab_cmd->add_subcommand("train", "Train a vocabulary from a corpus");
    std::string vt_corpus, vt_out;
    std::size_t vt_size = 2000, vt_min_freq = 2;
    vocab_train->add_option("--corpus", vt_corpus, "Corpus file, one sentence per line")
        ->required();
    vocab_train->add_option("--size", vt_size, "Target vocabulary size (default 2000)");
    vocab_train->add_option("--min-freq", vt_min_freq, "Minimum pair/char frequency (default 2)");
    vocab_train->add_option("--out", vt_out, "Output vocab file")->required();
    vocab_train->callback([&] {
        std::vector<std::string> lines;
        for (const std::string& raw : read_lines(vt_corpus)) {
            lines.push_back(textnorm::normalize(raw));
        }
        tokenizer::train_vocab(lines, vt_size, vt_min_freq).save(vt_out);
        std::cerr << "[kidc] vocab written to " << vt_out << "\n";
    });

    // ---- encode ----
    auto* enc_cmd = app.add_subcommand("encode", "Encode sentences to id/mask JSON lines");
    std::string enc_vocab, enc_in, enc_out;
    std::size_t enc_max_len = 128;
    enc_cmd->add_option("--vocab", enc_vocab, "Vocab file")->required();
    enc_cmd->add_option("--max-len", enc_max_len, "Sequence length (default 128)");
    enc_cmd->add_option("--in", enc_in, "Input sentences, one per line")->required();
    enc_cmd->add_option("--out", enc_out, "Output JSONL file")->required();
    enc_cmd->callback([&] {
        tokenizer::Vocab vocab = tokenizer::Vocab::load(enc_vocab);
        std::ofstream out(enc_out, std::ios::binary);
        if (!out) throw InvalidInput("cannot write file: " + enc_out);
        for (const std::string& raw : read_lines(enc_in)) {
            auto t = tokenizer::encode(textnorm::normalize(raw), vocab, enc_max_len);
            out << "{\"ids\":[";
            for (std::size_t i = 0; i < t.ids.size(); ++i) out << (i ? "," : "") << t.ids[i];
            out << "],\"mask\":[";
            for (std::size_t i = 0; i < t.mask.size(); ++i) out << (i ? "," : "") << t.mask[i];
            out << "],\"real_len\":" << t.real_len << "}\n";
        }
        if (!out) throw RunFailure("failed writing " + enc_out);
    });

    // ---- gen-data ----
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic idiom dataset");
    dataset::SyntheticSpec spec;
    std::string gen_out;
    gen_cmd->add_option("--idioms", spec.num_idioms, "Idiom classes (default 1)");
    gen_cmd->add_option("--contexts", spec.contexts_per_idiom, "Contexts per idiom (default 1)");
    gen_cmd->add_option("--variants", spec.variants_per_context,
                        "Grammatical variants per context (default 1)");
    gen_cmd->add_option("--non-idiom", spec.non_idiom_count, "Non-idiom sentences (default 0)");
    gen_cmd->add_option("--seed", spec.seed, "RNG seed (default 0)");
    gen_cmd->add_option("--out", gen_out, "Output TSV file")->required();
    gen_cmd->callback([&] {
        dataset::Dataset ds = dataset::generate_synthetic(spec);
        dataset::save_dataset(ds, gen_out);
        std::cerr << "[kidc] " << ds.examples.size() << " rows, " << ds.num_classes()
                  << " classes written to " << gen_out << "\n";
    });

    // ---- validate ----
    auto* val_cmd = app.add_subcommand("validate", "Validate a dataset file");
    std::string val_data;
    std::size_t val_min_count = 1;
    val_cmd->add_option("--data", val_data, "Dataset TSV")->required();
    val_cmd->add_option("--min-class-count", val_min_count,
                        "Minimum examples per class (default 1)");
    val_cmd->callback([&] {
        dataset::Dataset ds = dataset::load_dataset(val_data);
        dataset::ValidationReport rep = dataset::validate(ds, val_min_count);
        std::cout << rep.to_string();
        if (!rep.ok()) throw InvalidInput("dataset has " + std::to_string(rep.errors.size()) +
                                          " validation errors");
    });

    // ---- split ----
    auto* split_cmd = app.add_subcommand("split", "Build a nested stratified k-fold plan");
    std::string split_data, split_out;
    std::size_t split_k = 5;
    std::uint64_t split_seed = 0;
    split_cmd->add_option("--data", split_data, "Dataset TSV")->required();
    split_cmd->add_option("--k", split_k, "Fold count (default 5)");
    split_cmd->add_option("--seed", split_seed, "RNG seed (default 0)");
    split_cmd->add_option("--out", split_out, "Output plan JSON")->required();
    split_cmd->callback([&] {
        dataset::Dataset ds = dataset::load_dataset(split_data);
        dataset::stratified_nested_folds(ds, split_k, split_seed).save(split_out);
        std::cerr << "[kidc] fold plan written to " << split_out << "\n";
    });

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "Train one fold of one model");
    std::string tr_model, tr_data, tr_plan, tr_preset = "desk", tr_out, tr_vocab;
    std::size_t tr_fold = 0, tr_vocab_size = 2000, tr_vocab_min_freq = 2;
    TrainOverrides tr_ov;
    train_cmd->add_option("--model", tr_model, "transformer | rcnn | bilstm-attn")->required();
    train_cmd->add_option("--data", tr_data, "Dataset TSV")->required();
    train_cmd->add_option("--plan", tr_plan, "Fold plan JSON")->required();
    train_cmd->add_option("--fold", tr_fold, "Outer fold id")->required();
    train_cmd->add_option("--preset", tr_preset, "paper | desk (default desk)");
    train_cmd->add_option("--out", tr_out, "Output directory")->required();
    train_cmd->add_option("--vocab", tr_vocab,
                          "Vocab file (default: train one on the fold's training split)");
    train_cmd->add_option("--vocab-size", tr_vocab_size, "Auto-vocab target size (default 2000)");
    train_cmd->add_option("--vocab-min-freq", tr_vocab_min_freq,
                          "Auto-vocab min frequency (default 2)");
    add_train_overrides(train_cmd, tr_ov);
    train_cmd->callback([&] {
        dataset::Dataset ds = dataset::load_dataset(tr_data);
        dataset::FoldPlan plan = dataset::FoldPlan::load(tr_plan);
        if (tr_fold >= plan.k) {
            throw InvalidInput("fold " + std::to_string(tr_fold) + " out of range; plan has k=" +
                               std::to_string(plan.k));
        }
        tokenizer::Vocab vocab = tr_vocab.empty()
                                     ? fold_vocab(ds, plan, tr_fold, tr_vocab_size,
                                                  tr_vocab_min_freq)
                                     : tokenizer::Vocab::load(tr_vocab);
        models::ModelKind kind = models::kind_from_name(tr_model);
        models::ModelConfig mc =
            preset_model_config(tr_preset, kind, vocab.size(), ds.num_classes());
        training::TrainConfig cfg = preset_train_config(tr_preset, mc);
        tr_ov.apply(cfg);
        cfg.fold = tr_fold;

        fs::create_directories(tr_out);
        vocab.save((fs::path(tr_out) / "vocab.txt").string());
        cfg.model.save((fs::path(tr_out) / "config.json").string());
        training::save_class_table(ds, (fs::path(tr_out) / "classes.tsv").string());

        training::EncodedDataset data = training::encode_dataset(ds, vocab, cfg.model.max_len);
        training::RunRecord rec = training::train_fold(data, plan, tr_fold, cfg, tr_out);
        std::cerr << "[kidc] fold " << tr_fold << " test accuracy "
                  << evaluation::format_pct(rec.test.accuracy) << ", record in " << tr_out
                  << "\n";
    });

    // ---- cv ----
    auto* cv_cmd = app.add_subcommand("cv", "Cross-validate a model over all folds");
    std::string cv_model, cv_data, cv_preset = "desk", cv_out, cv_vocab;
    std::size_t cv_k = 5, cv_parallel = 1, cv_vocab_size = 2000, cv_vocab_min_freq = 2;
    TrainOverrides cv_ov;
    cv_cmd->add_option("--model", cv_model, "transformer | rcnn | bilstm-attn")->required();
    cv_cmd->add_option("--data", cv_data, "Dataset TSV")->required();
    cv_cmd->add_option("--k", cv_k, "Fold count (default 5)");
    cv_cmd->add_option("--preset", cv_preset, "paper | desk (default desk)");
    cv_cmd->add_option("--out", cv_out, "Output directory")->required();
    cv_cmd->add_option("--parallel", cv_parallel, "Folds trained concurrently (default 1)");
    cv_cmd->add_option("--vocab", cv_vocab,
                       "Shared vocab file (default: per-fold vocab from each training split)");
    cv_cmd->add_option("--vocab-size", cv_vocab_size, "Auto-vocab target size (default 2000)");
    cv_cmd->add_option("--vocab-min-freq", cv_vocab_min_freq,
                       "Auto-vocab min frequency (default 2)");
    add_train_overrides(cv_cmd, cv_ov);
    cv_cmd->callback([&] {
        dataset::Dataset ds = dataset::load_dataset(cv_data);
        dataset::FoldPlan plan = dataset::stratified_nested_folds(ds, cv_k, cv_ov.seed);
        models::ModelKind kind = models::kind_from_name(cv_model);
        // vocab size differs per fold; the placeholder keeps config validation happy
        models::ModelConfig mc = preset_model_config(cv_preset, kind, 5, ds.num_classes());
        training::TrainConfig cfg = preset_train_config(cv_preset, mc);
        cv_ov.apply(cfg);

        fs::create_directories(cv_out);
        plan.save((fs::path(cv_out) / "plan.json").string());
        training::CvOptions opts;
        opts.parallel = cv_parallel;
        opts.vocab_target_size = cv_vocab_size;
        opts.vocab_min_freq = cv_vocab_min_freq;
        std::optional<tokenizer::Vocab> shared;
        if (!cv_vocab.empty()) {
            shared = tokenizer::Vocab::load(cv_vocab);
            opts.shared_vocab = &*shared;
        }
        training::CvResult res = training::run_cross_validation(ds, plan, cfg, cv_out, opts);
        std::vector<training::RunRecord> records = res.records;
        evaluation::render_report(records, (fs::path(cv_out) / "report").string());
        std::cerr << "[kidc] cv mean test accuracy "
                  << evaluation::format_pct(res.aggregate.accuracy) << ", results in " << cv_out
                  << "\n";
    });

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a fold's test split");
    std::string ev_ckpt, ev_data, ev_plan, ev_config, ev_vocab, ev_out;
    std::size_t ev_fold = 0;
    eval_cmd->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
    eval_cmd->add_option("--data", ev_data, "Dataset TSV")->required();
    eval_cmd->add_option("--plan", ev_plan, "Fold plan JSON")->required();
    eval_cmd->add_option("--fold", ev_fold, "Outer fold id")->required();
    eval_cmd->add_option("--config", ev_config,
                         "Model config JSON (default: config.json beside the checkpoint)");
    eval_cmd->add_option("--vocab", ev_vocab,
                         "Vocab file (default: vocab.txt beside the checkpoint)");
    eval_cmd->add_option("--out", ev_out, "Write metrics JSON here (default: print to stdout)");
    eval_cmd->callback([&] {
        models::ModelConfig mc = models::ModelConfig::load(
            ev_config.empty() ? sidecar(ev_ckpt, "config.json") : ev_config);
        tokenizer::Vocab vocab =
            tokenizer::Vocab::load(ev_vocab.empty() ? sidecar(ev_ckpt, "vocab.txt") : ev_vocab);
        models::ModelParams params = models::load_params_for(ev_ckpt, mc);
        dataset::Dataset ds = dataset::load_dataset(ev_data);
        dataset::FoldPlan plan = dataset::FoldPlan::load(ev_plan);
        training::EncodedDataset data = training::encode_dataset(ds, vocab, mc.max_len);
        auto test_idx = plan.indices(ev_fold, dataset::Role::test);
        evaluation::MetricsRow m = training::evaluate_subset(params, mc, data, test_idx, 16);
        std::string text = "accuracy " + evaluation::format_pct(m.accuracy) + "  precision " +
                           evaluation::format_pct(m.precision) + "  recall " +
                           evaluation::format_pct(m.recall) + "  f1 " +
                           evaluation::format_pct(m.f1) + "\n";
        if (ev_out.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(ev_out, std::ios::binary);
            if (!out) throw InvalidInput("cannot write file: " + ev_out);
            out << "{\"accuracy\":" << m.accuracy << ",\"precision\":" << m.precision
                << ",\"recall\":" << m.recall << ",\"f1\":" << m.f1 << "}\n";
        }
    });

    // ---- classify ----
    auto* cls_cmd = app.add_subcommand("classify", "Classify one sentence");
    std::string cl_ckpt, cl_vocab, cl_text, cl_config, cl_classes;
    cls_cmd->add_option("--checkpoint", cl_ckpt, "Checkpoint file")->required();
    cls_cmd->add_option("--vocab", cl_vocab, "Vocab file")->required();
    cls_cmd->add_option("--text", cl_text, "Sentence to classify")->required();
    cls_cmd->add_option("--config", cl_config,
                        "Model config JSON (default: config.json beside the checkpoint)");
    cls_cmd->add_option("--classes", cl_classes,
                        "Class table TSV (default: classes.tsv beside the checkpoint)");
    cls_cmd->callback([&] {
        models::ModelConfig mc = models::ModelConfig::load(
            cl_config.empty() ? sidecar(cl_ckpt, "config.json") : cl_config);
        tokenizer::Vocab vocab = tokenizer::Vocab::load(cl_vocab);
        models::ModelParams params = models::load_params_for(cl_ckpt, mc);
        auto classes = training::load_class_table(
            cl_classes.empty() ? sidecar(cl_ckpt, "classes.tsv") : cl_classes);

        auto input = tokenizer::encode(textnorm::normalize(cl_text), vocab, mc.max_len);
        num::Tensor logits = models::forward_eval(params, mc, {input});
        int pred = models::predict(logits)[0];

        double mx = logits.at(0, 0);
        for (std::size_t c = 1; c < logits.cols(); ++c) mx = std::max(mx, logits.at(0, c));
        double z = 0.0;
        std::vector<double> probs(logits.cols());
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            probs[c] = std::exp(logits.at(0, c) - mx);
            z += probs[c];
        }
        std::string surface;
        for (const auto& [label, surf] : classes) {
            if (label == pred) surface = surf;
        }
        std::cout << "class: " << pred << "\n";
        std::cout << "idiom: " << (surface.empty() ? "(non-idiom)" : surface) << "\n";
        std::cout << "probabilities:";
        for (std::size_t c = 0; c < probs.size(); ++c) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", probs[c] / z);
            std::cout << " " << c << "=" << buf;
        }
        std::cout << "\n";
    });

    // ---- report ----
    auto* rep_cmd = app.add_subcommand("report", "Render tables and curves from run records");
    std::string rp_runs, rp_out;
    rep_cmd->add_option("--runs", rp_runs, "Directory scanned recursively for record.json files")
        ->required();
    rep_cmd->add_option("--out", rp_out, "Output directory")->required();
    rep_cmd->callback([&] {
        if (!fs::exists(rp_runs)) throw InvalidInput("no such directory: " + rp_runs);
        std::vector<training::RunRecord> records;
        for (const auto& entry : fs::recursive_directory_iterator(rp_runs)) {
            if (entry.is_regular_file() && entry.path().filename() == "record.json") {
                records.push_back(training::RunRecord::load(entry.path().string()));
            }
        }
        if (records.empty()) throw InvalidInput("no record.json files under " + rp_runs);
        evaluation::render_report(records, rp_out);
        std::cerr << "[kidc] report for " << records.size() << " runs written to " << rp_out
                  << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const RunFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
