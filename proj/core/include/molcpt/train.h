//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_TRAIN_H_
#define MOLCPT_TRAIN_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "molcpt/dataset.h"
#include "molcpt/fragment.h"
#include "molcpt/metrics.h"
#include "molcpt/model.h"
#include "molcpt/prompt.h"

namespace molcpt {

enum class Regime {
  // Fresh linear classifier on h_G.
  kProbe,
  // Prompt, answers, encoder, and (optionally) the output head all train.
  kMolcpt,
  // Prompt and answers train; encoder and output head stay fixed.
  kFrozen,
  // Answers initialized from class means, then evaluated without training.
  kZeroshot,
};

std::string_view regime_name(Regime r);
Regime parse_regime(std::string_view name);

struct RunConfig {
  Regime regime = Regime::kMolcpt;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  // Answer regimes without the motif prompt score f_output(h_G) directly.
  bool prompt_enabled = true;
  PromptConfig prompt;
  std::size_t ensemble = 1;
  double orth = 0.0;
  double answer_tau = 1.0;
  std::vector<std::uint64_t> seeds { 0 };
  // Motif table from random rows instead of encoder embeddings.
  bool random_motif_init = false;
  // Probe regime: keep the encoder fixed and train only the classifier.
  bool probe_frozen = false;
  // Molcpt regime: also train the pretraining output head.
  bool update_head = true;
  // Evaluation workers; 0 reads MOLCPT_THREADS and defaults to 1.
  std::size_t threads = 0;
};

// One line of the metrics stream. `epoch` is a number or a summary tag.
struct MetricRow {
  std::string epoch;
  std::string split;
  double loss = 0.0;
  std::optional<double> roc_auc;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::size_t best_epoch = 0;
  std::optional<double> best_valid_auc;
  std::optional<double> test_auc;
  double best_valid_loss = 0.0;
  double test_loss = 0.0;
};

struct RunResult {
  std::vector<MetricRow> rows;
  std::vector<SeedResult> seeds;
  // Over seeds with a defined test AUC.
  MeanStd test;
  MeanStd valid;
  // Parameters at the selected epoch of the best-validation seed.
  PromptModel model;
};

// Resolves RunConfig::threads against MOLCPT_THREADS.
std::size_t evaluation_threads(std::size_t requested);

// Runs the regime once per seed from the pretrained encoder and head. The
// dataset is scaffold-split first when it carries no split. Every epoch,
// including epoch 0 before any update, is evaluated on all three splits; the
// epoch with the best validation AUC is selected per seed.
RunResult finetune_run(const TaskDataset &ds, const PromptModel &pretrained,
                       const MotifVocabulary &vocab, const RunConfig &config);

// Scores of one molecule per task (s_1 - s_0 or the probe logit difference)
// under a fine-tuned model in inference mode.
std::vector<double> score_molecule(const MolGraph &g, const PromptModel &model,
                                   const MotifVocabulary &vocab, Regime regime);

// TSV with header "epoch\tsplit\tloss\troc_auc".
std::string format_metrics(const std::vector<MetricRow> &rows);
void write_metrics(const std::vector<MetricRow> &rows,
                   const std::filesystem::path &path);

// Fixed six-decimal form used in TSV output; "nan" when empty.
std::string format_real(std::optional<double> v);

}  // namespace molcpt

#endif  // MOLCPT_TRAIN_H_
