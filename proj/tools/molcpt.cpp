//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "molcpt/checkpoint.h"
#include "molcpt/dataset.h"
#include "molcpt/error.h"
#include "molcpt/fragment.h"
#include "molcpt/model.h"
#include "molcpt/pretrain.h"
#include "molcpt/split.h"
#include "molcpt/sweep.h"
#include "molcpt/synthetic.h"
#include "molcpt/train.h"

namespace {

using namespace molcpt;

// Exit codes: 0 success, 2 usage, 3 and up one per error category.
int exit_code(ErrorCategory c) {
  return c == ErrorCategory::kUsage ? 2 : 3 + static_cast<int>(c);
}

std::string one_line(std::string s) {
  for (char &c: s)
    if (c == '\n' || c == '\r')
      c = ' ';
  return s;
}

TaskDataset read_dataset(const std::string &path) {
  TaskDataset ds = load_dataset(path);
  if (ds.skipped > 0)
    std::fprintf(stderr, "note: skipped %zu rows with unparseable SMILES\n", ds.skipped);
  return ds;
}

std::vector<MolGraph> train_corpus(TaskDataset &ds) {
  if (ds.split.train.empty() && ds.split.valid.empty() && ds.split.test.empty())
    ds.split = scaffold_split(ds);
  std::vector<MolGraph> corpus;
  for (std::size_t i: ds.split.train)
    corpus.push_back(ds.records[i].graph);
  return corpus;
}

std::string read_text(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCategory::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text))
    throw Error(ErrorCategory::kIo, "cannot write " + path);
}

// Options shared by finetune, zeroshot, and sweep.
struct RunOptions {
  std::string data;
  std::string ckpt;
  std::string rules = "simple";
  RunConfig config;
  bool no_prompt = false;
  bool frozen_head = false;
  std::string regime = "molcpt";
};

void add_run_options(CLI::App *cmd, RunOptions &o, bool trainable) {
  cmd->add_option("--data", o.data, "CSV with a smiles column and 0/1 task columns")
      ->required();
  cmd->add_option("--ckpt", o.ckpt, "Pretrained checkpoint")->required();
  cmd->add_option("--rules", o.rules, "Fragmentation rules of the vocabulary")
      ->check(CLI::IsMember({ "simple", "brics16" }));
  cmd->add_option("--heads", o.config.prompt.heads, "Attention heads")->capture_default_str();
  cmd->add_option("--ensemble", o.config.ensemble, "Answers per label, 0 for one random row")
      ->capture_default_str();
  cmd->add_option("--answer-tau", o.config.answer_tau, "Answer score temperature")
      ->capture_default_str();
  cmd->add_option("--seeds", o.config.seeds, "Comma-separated run seeds")->delimiter(',');
  cmd->add_option("--threads", o.config.threads, "Evaluation workers, 0 reads MOLCPT_THREADS");
  cmd->add_flag("--feedforward", o.config.prompt.feedforward, "Add the attention FFN block");
  cmd->add_flag("--include-empty", o.config.prompt.include_empty,
                "Keep EMPTY among matched motifs");
  cmd->add_flag("--no-prompt", o.no_prompt, "Score f_output(h_G) without the motif prompt");
  if (!trainable)
    return;
  cmd->add_option("--regime", o.regime, "Fine-tuning regime")
      ->check(CLI::IsMember({ "probe", "molcpt", "frozen", "zeroshot" }))
      ->capture_default_str();
  cmd->add_option("--orth", o.config.orth, "Answer orthogonality weight")->capture_default_str();
  cmd->add_option("--epochs", o.config.epochs, "Fine-tuning epochs")->capture_default_str();
  cmd->add_option("--batch", o.config.batch_size, "Batch size")->capture_default_str();
  cmd->add_option("--lr", o.config.lr, "Adam learning rate")->capture_default_str();
  cmd->add_flag("--freeze-empty", o.config.prompt.freeze_empty,
                "Keep the EMPTY motif row at zero");
  cmd->add_flag("--random-motif-init", o.config.random_motif_init,
                "Initialize the motif table randomly");
  cmd->add_flag("--probe-frozen", o.config.probe_frozen, "Probe regime: freeze the encoder");
  cmd->add_flag("--frozen-head", o.frozen_head, "Molcpt regime: keep f_output fixed");
}

RunConfig finish_config(const RunOptions &o) {
  RunConfig c = o.config;
  c.regime = parse_regime(o.regime);
  c.prompt_enabled = !o.no_prompt;
  c.update_head = !o.frozen_head;
  return c;
}

void report(const RunResult &r) {
  for (const SeedResult &s: r.seeds)
    std::printf("seed %llu\tbest_epoch %zu\tvalid_auc %s\ttest_auc %s\n",
                static_cast<unsigned long long>(s.seed), s.best_epoch,
                format_real(s.best_valid_auc).c_str(), format_real(s.test_auc).c_str());
  std::printf("test_auc %s +- %s\n", format_real(r.test.mean).c_str(),
              format_real(r.test.std).c_str());
}

int run(int argc, char **argv) {
  CLI::App app { "MolCPT: motif prompting and answer search for molecular property prediction",
                 "molcpt" };
  app.require_subcommand(1);

  // vocab
  std::string v_data, v_rules = "simple", v_out;
  std::size_t v_t = 0;
  bool v_all = false;
  CLI::App *vocab = app.add_subcommand("vocab", "Build a motif vocabulary");
  vocab->add_option("--data", v_data, "CSV with a smiles column")->required();
  vocab->add_option("--rules", v_rules, "Fragmentation rules")
      ->check(CLI::IsMember({ "simple", "brics16" }))
      ->capture_default_str();
  vocab->add_option("--t", v_t, "Minimum number of molecules containing a motif")->required();
  vocab->add_option("--out", v_out, "Vocabulary file")->required();
  vocab->add_flag("--all", v_all, "Count every molecule, not only the scaffold training split");

  // pretrain
  std::string p_data, p_out, p_task = "contrastive", p_augment = "node_drop", p_log;
  PretrainConfig pc;
  CLI::App *pretrain = app.add_subcommand("pretrain", "Self-supervised encoder pretraining");
  pretrain->add_option("--data", p_data, "CSV with a smiles column")->required();
  pretrain->add_option("--task", p_task, "Pretraining task")
      ->check(CLI::IsMember({ "contrastive", "attrmask" }))
      ->capture_default_str();
  pretrain->add_option("--epochs", pc.epochs, "Epochs")->capture_default_str();
  pretrain->add_option("--seed", pc.seed, "Seed")->capture_default_str();
  pretrain->add_option("--out", p_out, "Checkpoint file")->required();
  pretrain->add_option("--layers", pc.encoder.layers, "GIN layers")->capture_default_str();
  pretrain->add_option("--dim", pc.encoder.dim, "Embedding width")->capture_default_str();
  pretrain->add_option("--batch", pc.batch_size, "Batch size")->capture_default_str();
  pretrain->add_option("--lr", pc.lr, "Adam learning rate")->capture_default_str();
  pretrain->add_option("--tau", pc.tau, "NT-Xent temperature")->capture_default_str();
  pretrain->add_option("--mask-ratio", pc.mask_ratio, "Attribute masking ratio")
      ->capture_default_str();
  pretrain->add_option("--augment", p_augment, "Contrastive augmentation")
      ->check(CLI::IsMember({ "node_drop", "edge_drop", "attr_mask" }))
      ->capture_default_str();
  pretrain->add_option("--augment-ratio", pc.augment_ratio, "Augmentation ratio")
      ->capture_default_str();
  pretrain->add_option("--loss-log", p_log, "TSV of mean loss per epoch");

  // finetune
  RunOptions fo;
  std::string f_vocab, f_out, f_metrics;
  CLI::App *finetune = app.add_subcommand("finetune", "Fine-tune on a labeled dataset");
  add_run_options(finetune, fo, true);
  finetune->add_option("--vocab", f_vocab, "Vocabulary file")->required();
  finetune->add_option("--out", f_out, "Checkpoint of the selected model");
  finetune->add_option("--metrics", f_metrics, "Metrics TSV")->required();

  // zeroshot
  RunOptions zo;
  zo.regime = "zeroshot";
  std::string z_vocab, z_out, z_metrics;
  CLI::App *zeroshot = app.add_subcommand("zeroshot", "Class-mean answers, no gradient steps");
  add_run_options(zeroshot, zo, false);
  zeroshot->add_option("--vocab", z_vocab, "Vocabulary file")->required();
  zeroshot->add_option("--out", z_out, "Checkpoint with the initialized answers");
  zeroshot->add_option("--metrics", z_metrics, "Metrics TSV")->required();

  // sweep
  RunOptions so;
  std::string s_grid, s_metrics;
  SweepOptions sweep_opts;
  std::size_t s_t = 10;
  CLI::App *sweep_cmd = app.add_subcommand("sweep", "Hyperparameter grid or random search");
  add_run_options(sweep_cmd, so, true);
  sweep_cmd->add_option("--grid", s_grid,
                        "Grid file, 'default', or items like \"t=0:100:10;heads=2,4,8\"")
      ->required();
  sweep_cmd->add_option("--t", s_t, "Threshold when the grid leaves t unset")
      ->capture_default_str();
  sweep_cmd->add_option("--budget", sweep_opts.budget, "Maximum configurations")
      ->capture_default_str();
  sweep_cmd->add_option("--sample-seed", sweep_opts.seed, "Seed of the random sample")
      ->capture_default_str();
  sweep_cmd->add_option("--metrics", s_metrics, "Results TSV")->required();

  // planted
  PlantedConfig planted_cfg;
  std::string pl_out;
  CLI::App *planted = app.add_subcommand("planted", "Write the synthetic planted-motif dataset");
  planted->add_option("--molecules", planted_cfg.molecules, "Molecules, half carry benzene")
      ->capture_default_str();
  planted->add_option("--seed", planted_cfg.seed, "Seed")->capture_default_str();
  planted->add_option("--out", pl_out, "CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    throw Error(ErrorCategory::kUsage, e.what());
  }

  if (*planted) {
    write_text(pl_out, format_dataset(planted_dataset(planted_cfg)));
    return 0;
  }

  if (*vocab) {
    TaskDataset ds = read_dataset(v_data);
    std::vector<MolGraph> corpus;
    if (v_all)
      for (const Record &r: ds.records)
        corpus.push_back(r.graph);
    else
      corpus = train_corpus(ds);
    const MotifVocabulary v = build_vocabulary(corpus, parse_rule_set(v_rules), v_t);
    v.save(v_out);
    std::printf("motifs %zu (including EMPTY) from %zu molecules\n", v.size(), corpus.size());
    return 0;
  }

  if (*pretrain) {
    const TaskDataset ds = read_dataset(p_data);
    std::vector<MolGraph> corpus;
    for (const Record &r: ds.records)
      corpus.push_back(r.graph);
    pc.task = parse_pretrain_task(p_task);
    pc.augment = parse_augment_kind(p_augment);
    PretrainResult r = pretrain_run(corpus, pc);
    PromptModel m;
    m.encoder = std::move(r.encoder);
    m.head = std::move(r.head);
    m.seed = pc.seed;
    save_checkpoint(to_checkpoint(m), p_out);
    if (!p_log.empty()) {
      std::string tsv = "epoch\tloss\n";
      for (std::size_t e = 0; e < r.epoch_losses.size(); ++e)
        tsv += std::to_string(e + 1) + "\t" + format_real(r.epoch_losses[e]) + "\n";
      write_text(p_log, tsv);
    }
    if (!r.epoch_losses.empty())
      std::printf("final loss %s\n", format_real(r.epoch_losses.back()).c_str());
    return 0;
  }

  if (*finetune || *zeroshot) {
    const RunOptions &o = *finetune ? fo : zo;
    const std::string &vocab_path = *finetune ? f_vocab : z_vocab;
    const TaskDataset ds = read_dataset(o.data);
    const MotifVocabulary v = MotifVocabulary::load(vocab_path, parse_rule_set(o.rules));
    const PromptModel pretrained = from_checkpoint(load_checkpoint(o.ckpt));
    const RunResult r = finetune_run(ds, pretrained, v, finish_config(o));
    write_metrics(r.rows, *finetune ? f_metrics : z_metrics);
    const std::string &out = *finetune ? f_out : z_out;
    if (!out.empty())
      save_checkpoint(to_checkpoint(r.model), out);
    report(r);
    return 0;
  }

  if (*sweep_cmd) {
    const TaskDataset ds = read_dataset(so.data);
    const PromptModel pretrained = from_checkpoint(load_checkpoint(so.ckpt));
    sweep_opts.base = finish_config(so);
    sweep_opts.rules = parse_rule_set(so.rules);
    SweepGrid grid;
    if (s_grid == "default")
      grid = SweepGrid::default_ranges();
    else if (std::filesystem::is_regular_file(s_grid))
      grid = parse_sweep_grid(read_text(s_grid), sweep_opts.base, s_t);
    else
      grid = parse_sweep_grid(s_grid, sweep_opts.base, s_t);
    const std::vector<SweepRow> rows =
        sweep(ds, pretrained, grid, sweep_opts, [&](std::size_t done, const SweepRow &row) {
          std::fprintf(stderr, "config %zu: t=%zu heads=%zu ensemble=%zu orth=%g valid_auc %s\n",
                       done, row.point.threshold, row.point.heads, row.point.ensemble,
                       row.point.orth, format_real(row.valid_auc).c_str());
        });
    write_text(s_metrics, format_sweep(rows));
    if (!rows.empty())
      std::printf("best: t=%zu heads=%zu ensemble=%zu orth=%g valid_auc %s test_auc %s\n",
                  rows[0].point.threshold, rows[0].point.heads, rows[0].point.ensemble,
                  rows[0].point.orth, format_real(rows[0].valid_auc).c_str(),
                  format_real(rows[0].test_auc).c_str());
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  try {
    return run(argc, argv);
  } catch (const molcpt::Error &e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(molcpt::category_name(e.category())).c_str(),
                 one_line(e.what()).c_str());
    return exit_code(e.category());
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: internal: %s\n", one_line(e.what()).c_str());
    return 1;
  }
}
