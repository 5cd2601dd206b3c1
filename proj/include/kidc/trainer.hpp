#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kidc/adamw.hpp"
#include "kidc/dataset.hpp"
#include "kidc/metrics.hpp"
#include "kidc/model_config.hpp"
#include "kidc/model_params.hpp"
#include "kidc/schedule.hpp"
#include "kidc/tokenizer.hpp"

namespace kidc::training {

struct TrainConfig {
    models::ModelConfig model;
    std::string preset = "desk";  // recorded in the config echo
    std::size_t epochs = 1;
    std::size_t batch_size = 16;
    double base_lr = 2e-5;
    std::size_t eval_every_epochs = 5;
    std::uint64_t seed = 0;
    std::size_t fold = 0;
    AdamWConfig optimizer;
    ScheduleKind schedule_kind = ScheduleKind::linear_decay_with_warmup;
    double warmup_fraction = 0.1;  // of total steps
    double clip_norm = 0.0;        // 0 disables clipping

    void validate() const;
};

// Published settings: lr 2e-5, batch 16, epochs 15/50/50, warmup-decay for
// the transformer-based models, fixed rate for the RCNN, global-norm clip 1.0
// for the LSTM-bearing models.
TrainConfig paper_train_defaults(const models::ModelConfig& model);

// CI-scale settings for the small configs: same structure, fewer epochs, and
// a from-scratch learning rate (2e-5 is a fine-tuning rate; nothing here is
// pretrained).
TrainConfig desk_train_defaults(const models::ModelConfig& model);

struct EvalPoint {
    std::size_t epoch = 0;
    evaluation::MetricsRow metrics;
};

struct RunRecord {
    std::string model_kind;
    std::size_t fold = 0;
    std::uint64_t seed = 0;
    std::vector<double> epoch_train_loss;
    std::vector<EvalPoint> validation;      // every eval_every_epochs and at the final epoch
    evaluation::MetricsRow test;            // from the final checkpoint
    evaluation::MetricsRow best_checkpoint_test;  // from the best-validation-F1 checkpoint
    double best_val_f1 = 0.0;
    std::size_t best_epoch = 0;
    double duration_seconds = 0.0;
    std::string config_json;
    std::string best_checkpoint_path;
    std::string final_checkpoint_path;

    std::string to_json_string() const;
    static RunRecord from_json_string(const std::string& text);
    void save(const std::string& path) const;
    static RunRecord load(const std::string& path);
};

struct EncodedDataset {
    std::vector<tokenizer::TokenizedInput> inputs;
    std::vector<int> labels;
    std::size_t num_classes = 0;
};

EncodedDataset encode_dataset(const dataset::Dataset& ds, const tokenizer::Vocab& vocab,
                              std::size_t max_len);

evaluation::MetricsRow evaluate_subset(const models::ModelParams& params,
                                       const models::ModelConfig& cfg, const EncodedDataset& data,
                                       const std::vector<std::size_t>& indices,
                                       std::size_t batch_size);

// Core loop: seeded per-epoch shuffling, mini-batches with a short tail,
// cross-entropy + AdamW, periodic validation, best/final checkpoints, test
// metrics computed once after training. test_idx never enters the loop; it is
// only touched for the final measurement.
RunRecord train_on_indices(const EncodedDataset& data, std::vector<std::size_t> train_idx,
                           std::vector<std::size_t> val_idx,
                           const std::vector<std::size_t>& test_idx, const TrainConfig& cfg,
                           const std::string& out_dir);

RunRecord train_fold(const EncodedDataset& data, const dataset::FoldPlan& plan, std::size_t fold,
                     const TrainConfig& cfg, const std::string& out_dir);

struct CvOptions {
    std::size_t parallel = 1;
    const tokenizer::Vocab* shared_vocab = nullptr;  // default: per-fold vocab from train split
    std::size_t vocab_target_size = 2000;
    std::size_t vocab_min_freq = 2;
};

struct CvResult {
    std::vector<RunRecord> records;  // fold order
    evaluation::MetricsRow aggregate;
    bool failed = false;
    std::vector<std::string> fold_errors;  // empty string when the fold succeeded
};

// Trains k independent models (fresh initialization per fold, RNG streams
// derived from seed and fold id). Folds may run concurrently; they share no
// mutable state. Partial results are persisted even when a fold fails.
CvResult run_cross_validation(const dataset::Dataset& ds, const dataset::FoldPlan& plan,
                              const TrainConfig& base_cfg, const std::string& out_dir,
                              const CvOptions& opts = {});

void save_class_table(const dataset::Dataset& ds, const std::string& path);
std::vector<std::pair<int, std::string>> load_class_table(const std::string& path);

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold);

}  // namespace kidc::training
