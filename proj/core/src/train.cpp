//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/train.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <thread>

#include "molcpt/error.h"
#include "molcpt/rng.h"
#include "molcpt/split.h"

namespace molcpt {

using nd::Parameter;
using nd::Tape;
using nd::Tensor;
using nd::Var;

std::string_view regime_name(Regime r) {
  switch (r) {
  case Regime::kProbe:
    return "probe";
  case Regime::kMolcpt:
    return "molcpt";
  case Regime::kFrozen:
    return "frozen";
  case Regime::kZeroshot:
    return "zeroshot";
  }
  return "unknown";
}

Regime parse_regime(std::string_view name) {
  for (Regime r: { Regime::kProbe, Regime::kMolcpt, Regime::kFrozen, Regime::kZeroshot })
    if (regime_name(r) == name)
      return r;
  throw Error(ErrorCategory::kUsage, "unknown regime '" + std::string(name) + "'");
}

std::size_t evaluation_threads(std::size_t requested) {
  if (requested > 0)
    return std::min<std::size_t>(requested, 64);
  const char *env = std::getenv("MOLCPT_THREADS");
  if (env == nullptr || *env == '\0')
    return 1;
  const std::string_view v(env);
  std::size_t n = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc() || p != v.data() + v.size() || n == 0)
    throw Error(ErrorCategory::kUsage,
                "MOLCPT_THREADS must be a positive integer, got '" + std::string(v) + "'");
  return std::min<std::size_t>(n, 64);
}

namespace {

constexpr std::size_t kEvalChunk = 64;

bool uses_answers(Regime r) {
  return r != Regime::kProbe;
}

// Molecules to push through the model together.
struct Batch {
  std::vector<const MolGraph *> graphs;
  std::vector<const std::vector<std::size_t> *> motifs;
  // n x d embeddings when the encoder is fixed and h_G was precomputed.
  const Tensor *cached = nullptr;
  std::vector<std::size_t> cached_rows;
};

// Answer regimes return f_output(h_G + e_cpt); the probe returns h_G.
Var represent(Tape &tape, const PromptModel &m, bool answers, const Batch &b) {
  Var h = b.cached != nullptr
              ? nd::gather_rows(tape.constant(*b.cached), b.cached_rows)
              : encode(tape, GraphBatch::of(b.graphs), m.encoder).graphs;
  if (!answers)
    return h;
  if (!m.has_prompt)
    return m.head.apply(tape, h);
  std::vector<Var> rows;
  rows.reserve(b.graphs.size());
  for (std::size_t i = 0; i < b.graphs.size(); ++i) {
    Var hi = nd::gather_rows(h, { i });
    rows.push_back(prompt_embed(tape, hi, *b.motifs[i], m.table, m.attention).prompted);
  }
  return m.head.apply(tape, nd::concat(rows, 0));
}

// Summed cross-entropy over present labels and per-task logits of a batch.
struct Forward {
  Var ce_sum;
  std::size_t present = 0;
  std::vector<Tensor> logits;  // per task, n x 2
};

Forward forward(Tape &tape, const PromptModel &m, bool answers, const Batch &b,
                std::span<const Record *const> records, AnswerMode mode, Rng *rng) {
  const std::size_t n = b.graphs.size();
  Var out = represent(tape, m, answers, b);
  const std::size_t tasks = answers ? m.banks.size() : m.probes.size();
  Forward f;
  std::vector<Var> terms;
  for (std::size_t t = 0; t < tasks; ++t) {
    Var logits;
    if (answers) {
      std::vector<std::size_t> members;
      if (mode == AnswerMode::kTrain)
        members = sample_members(m.banks[t], n, *rng);
      logits = answer_scores(tape, out, m.banks[t], mode, members);
    } else {
      logits = m.probes[t].logits(tape, out);
    }
    f.logits.push_back(logits.value());
    std::vector<std::size_t> rows, targets;
    for (std::size_t i = 0; i < n; ++i) {
      const int y = records[i]->labels[t];
      if (y == 0 || y == 1) {
        rows.push_back(i);
        targets.push_back(static_cast<std::size_t>(y));
      }
    }
    if (rows.empty())
      continue;
    const double count = static_cast<double>(rows.size());
    terms.push_back(
        nd::scale(nd::cross_entropy(nd::gather_rows(logits, rows), targets), count));
    f.present += rows.size();
  }
  f.ce_sum = terms.empty() ? tape.constant(Tensor::scalar(0.0)) : nd::add_n(terms);
  return f;
}

double penalty_value(const PromptModel &m) {
  double total = 0.0;
  for (const AnswerBank &bank: m.banks)
    if (bank.orth != 0.0) {
      Tape tape({ .grad_enabled = false });
      total += bank.orth * orthogonality_penalty(tape, bank).value().item();
    }
  return total;
}

struct Evaluation {
  double loss = 0.0;
  std::optional<double> auc;
  std::vector<double> scores;  // n x tasks
};

class Runner {
public:
  Runner(const TaskDataset &ds, const MotifVocabulary &vocab, const RunConfig &config)
      : ds_(ds), vocab_(vocab), config_(config),
        answers_(uses_answers(config.regime)),
        threads_(evaluation_threads(config.threads)) {
    if (answers_ && config.prompt_enabled) {
      motifs_.reserve(ds.size());
      for (const Record &r: ds.records)
        motifs_.push_back(attended_motifs(motifs_of(r.graph, vocab),
                                          config.prompt.include_empty));
    }
  }

  bool encoder_fixed() const {
    return config_.regime == Regime::kFrozen || config_.regime == Regime::kZeroshot
           || (config_.regime == Regime::kProbe && config_.probe_frozen);
  }

  void cache_embeddings(const EncoderParams &encoder) {
    cache_ = Tensor({ ds_.size(), encoder.config.dim });
    std::vector<const MolGraph *> all;
    for (const Record &r: ds_.records)
      all.push_back(&r.graph);
    parallel_chunks(all.size(), [&](std::size_t lo, std::size_t hi) {
      const Tensor e = embed_graphs(std::span(all).subspan(lo, hi - lo), encoder);
      std::copy(e.values().begin(), e.values().end(),
                cache_->values().begin() + static_cast<std::ptrdiff_t>(lo * e.cols()));
    });
  }

  Batch batch_of(std::span<const std::size_t> idx) const {
    Batch b;
    for (std::size_t i: idx) {
      b.graphs.push_back(&ds_.records[i].graph);
      if (!motifs_.empty())
        b.motifs.push_back(&motifs_[i]);
    }
    if (cache_) {
      b.cached = &*cache_;
      b.cached_rows.assign(idx.begin(), idx.end());
    }
    return b;
  }

  std::vector<const Record *> records_of(std::span<const std::size_t> idx) const {
    std::vector<const Record *> out;
    for (std::size_t i: idx)
      out.push_back(&ds_.records[i]);
    return out;
  }

  // Inference-mode outputs (n x d_ans) of the given records.
  Tensor outputs(const PromptModel &m, std::span<const std::size_t> idx) const {
    Tensor out;
    std::vector<Tensor> parts((idx.size() + kEvalChunk - 1) / kEvalChunk);
    parallel_chunks(idx.size(), [&](std::size_t lo, std::size_t hi) {
      Tape tape({ .grad_enabled = false });
      parts[lo / kEvalChunk] =
          represent(tape, m, answers_, batch_of(idx.subspan(lo, hi - lo))).value();
    });
    if (parts.empty())
      return Tensor({ 0, answers_ ? m.head.output_dim() : m.encoder.config.dim });
    std::vector<double> data;
    for (const Tensor &p: parts)
      data.insert(data.end(), p.values().begin(), p.values().end());
    return Tensor({ idx.size(), parts[0].cols() }, std::move(data));
  }

  Evaluation evaluate(const PromptModel &m, std::span<const std::size_t> idx) const {
    const std::size_t tasks = ds_.task_count();
    struct Part {
      double ce = 0.0;
      std::vector<double> scores;
    };
    std::vector<Part> parts((idx.size() + kEvalChunk - 1) / kEvalChunk);
    parallel_chunks(idx.size(), [&](std::size_t lo, std::size_t hi) {
      Tape tape({ .grad_enabled = false });
      const auto sub = idx.subspan(lo, hi - lo);
      const auto recs = records_of(sub);
      Forward f = forward(tape, m, answers_, batch_of(sub), recs, AnswerMode::kInfer,
                          nullptr);
      Part &p = parts[lo / kEvalChunk];
      p.ce = f.ce_sum.value().item();
      p.scores.resize(sub.size() * tasks);
      for (std::size_t i = 0; i < sub.size(); ++i)
        for (std::size_t t = 0; t < tasks; ++t) {
          const double s[] { f.logits[t](i, 0), f.logits[t](i, 1) };
          p.scores[i * tasks + t] = predict(s).score;
        }
    });
    Evaluation ev;
    double ce = 0.0;
    for (const Part &p: parts) {
      ce += p.ce;
      ev.scores.insert(ev.scores.end(), p.scores.begin(), p.scores.end());
    }
    ev.loss = (idx.empty() ? 0.0 : ce / static_cast<double>(idx.size())) + penalty_value(m);
    std::vector<int> labels;
    for (std::size_t i: idx)
      labels.insert(labels.end(), ds_.records[i].labels.begin(),
                    ds_.records[i].labels.end());
    ev.auc = multitask_auc(ev.scores, labels, tasks).mean;
    return ev;
  }

  PromptModel init_model(const PromptModel &pretrained, std::uint64_t seed) {
    PromptModel m;
    m.encoder = pretrained.encoder;
    m.head = pretrained.head;
    m.rules = vocab_.rules();
    m.vocab_hash = vocab_.hash();
    m.seed = seed;
    const std::size_t d = m.encoder.config.dim;
    Rng rng(mix_seed(seed, 0x70726f6dULL));
    if (!answers_) {
      for (std::size_t t = 0; t < ds_.task_count(); ++t)
        m.probes.push_back(ProbeHead::zeros(d, t));
    } else {
      if (config_.prompt_enabled) {
        m.has_prompt = true;
        m.prompt = config_.prompt;
        m.table = config_.random_motif_init ? random_motif_table(vocab_.size(), d, rng)
                                            : init_motif_table(vocab_, m.encoder);
        m.attention = AttentionParams::init(d, config_.prompt, rng);
      }
      // Answers start from the class means of the untrained prompted outputs.
      const Tensor out = outputs(m, ds_.split.train);
      for (std::size_t t = 0; t < ds_.task_count(); ++t) {
        std::vector<std::size_t> rows;
        std::vector<int> labels;
        for (std::size_t i = 0; i < ds_.split.train.size(); ++i) {
          const int y = ds_.records[ds_.split.train[i]].labels[t];
          if (y == 0 || y == 1) {
            rows.push_back(i);
            labels.push_back(y);
          }
        }
        Tensor sub({ rows.size(), out.cols() });
        for (std::size_t r = 0; r < rows.size(); ++r)
          std::copy_n(&out.values()[rows[r] * out.cols()], out.cols(),
                      &sub.values()[r * out.cols()]);
        AnswerBank bank = init_answers(sub, labels, config_.ensemble, rng.next()).bank;
        bank.rows.name = "answer.rows." + std::to_string(t);
        bank.orth = config_.orth;
        bank.tau = config_.answer_tau;
        m.banks.push_back(std::move(bank));
      }
    }
    set_trainable(m);
    return m;
  }

  void set_trainable(PromptModel &m) const {
    const Regime r = config_.regime;
    m.encoder.set_trainable(!encoder_fixed());
    m.head.set_trainable(r == Regime::kMolcpt && config_.update_head);
  }

  void train_epoch(PromptModel &m, nd::Adam &adam, std::uint64_t seed,
                   std::size_t epoch) const {
    Rng rng(mix_seed(seed, 0x66696e65ULL + epoch));
    std::vector<std::size_t> order = ds_.split.train;
    rng.shuffle(order);
    const bool freeze_empty = m.has_prompt && m.prompt.freeze_empty;
    for (std::size_t lo = 0; lo < order.size(); lo += config_.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + config_.batch_size);
      const auto idx = std::span<const std::size_t>(order).subspan(lo, hi - lo);
      Tape tape;
      Var loss;
      try {
        const auto recs = records_of(idx);
        Forward f = forward(tape, m, answers_, batch_of(idx), recs, AnswerMode::kTrain,
                            &rng);
        if (f.present == 0)
          continue;
        std::vector<Var> terms { nd::scale(f.ce_sum, 1.0 / static_cast<double>(idx.size())) };
        for (const AnswerBank &bank: m.banks)
          if (bank.orth != 0.0)
            terms.push_back(nd::scale(orthogonality_penalty(tape, bank), bank.orth));
        loss = nd::add_n(terms);
      } catch (const Error &e) {
        if (e.category() == ErrorCategory::kNumeric)
          throw Error(ErrorCategory::kNumeric, "fine-tuning diverged at epoch "
                                                   + std::to_string(epoch + 1) + ": "
                                                   + e.what());
        throw;
      }
      if (!std::isfinite(loss.value().item()))
        throw Error(ErrorCategory::kNumeric,
                    "fine-tuning diverged at epoch " + std::to_string(epoch + 1));
      const nd::Gradients grads = tape.backward(loss);
      if (freeze_empty) {
        adam.step(grads, [&](const Parameter &p, Tensor &g) {
          if (&p == &m.table.rows)
            std::fill_n(g.values().begin(), g.cols(), 0.0);
        });
      } else {
        adam.step(grads);
      }
    }
  }

  std::vector<Parameter *> trainable(PromptModel &m) const {
    std::vector<Parameter *> out;
    for (Parameter *p: m.parameters())
      if (p->requires_grad)
        out.push_back(p);
    return out;
  }

  const TaskDataset &ds_;
  const MotifVocabulary &vocab_;
  const RunConfig &config_;
  const bool answers_;
  const std::size_t threads_;
  std::vector<std::vector<std::size_t>> motifs_;
  std::optional<Tensor> cache_;

private:
  // Runs fn(lo, hi) over fixed-size chunks of [0, n); chunk results are
  // stored by index, so output does not depend on the worker count.
  void parallel_chunks(std::size_t n,
                       const std::function<void(std::size_t, std::size_t)> &fn) const {
    const std::size_t chunks = (n + kEvalChunk - 1) / kEvalChunk;
    const std::size_t workers = std::min(threads_, chunks);
    auto run = [&](std::size_t w) {
      for (std::size_t c = w; c < chunks; c += std::max<std::size_t>(workers, 1))
        fn(c * kEvalChunk, std::min(n, (c + 1) * kEvalChunk));
    };
    if (workers <= 1) {
      run(0);
      return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          run(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (std::thread &t: pool)
      t.join();
    for (const std::exception_ptr &e: errors)
      if (e)
        std::rethrow_exception(e);
  }
};

// Higher validation AUC wins; when neither side has one (a single-class
// validation split), lower validation loss wins. Ties keep the earlier epoch.
bool better(const std::optional<double> &auc, double loss,
            const std::optional<double> &best_auc, double best_loss) {
  if (auc && best_auc)
    return *auc > *best_auc;
  if (auc || best_auc)
    return auc.has_value();
  return loss < best_loss;
}

}  // namespace

RunResult finetune_run(const TaskDataset &input, const PromptModel &pretrained,
                       const MotifVocabulary &vocab, const RunConfig &config) {
  if (config.seeds.empty())
    throw Error(ErrorCategory::kUsage, "at least one seed is required");
  if (config.batch_size == 0)
    throw Error(ErrorCategory::kUsage, "batch size must be positive");
  if (!(config.lr > 0.0))
    throw Error(ErrorCategory::kUsage, "learning rate must be positive");
  if (!(config.answer_tau > 0.0))
    throw Error(ErrorCategory::kUsage, "answer temperature must be positive");
  if (config.orth < 0.0)
    throw Error(ErrorCategory::kUsage, "orthogonality weight must be non-negative");
  if (input.task_count() == 0 || input.size() == 0)
    throw Error(ErrorCategory::kData, "dataset has no tasks or no records");
  if (pretrained.vocab_hash != 0 && pretrained.vocab_hash != vocab.hash())
    throw Error(ErrorCategory::kCheckpoint,
                "checkpoint was trained with a different motif vocabulary");
  if (pretrained.vocab_hash != 0 && pretrained.rules != vocab.rules())
    throw Error(ErrorCategory::kCheckpoint,
                "checkpoint was trained with " + std::string(rule_set_name(pretrained.rules))
                    + " rules, vocabulary uses " + std::string(rule_set_name(vocab.rules())));

  TaskDataset split_ds;
  const TaskDataset *dsp = &input;
  if (input.split.train.empty() && input.split.valid.empty() && input.split.test.empty()) {
    split_ds = input;
    split_ds.split = scaffold_split(split_ds);
    dsp = &split_ds;
  }
  const TaskDataset &ds = *dsp;
  if (ds.split.train.empty())
    throw Error(ErrorCategory::kData, "training split is empty");

  Runner runner(ds, vocab, config);
  if (runner.encoder_fixed())
    runner.cache_embeddings(pretrained.encoder);

  RunResult result;
  std::optional<double> overall_auc;
  double overall_loss = 0.0;
  bool have_model = false;
  const std::size_t epochs = config.regime == Regime::kZeroshot ? 0 : config.epochs;
  const std::pair<const char *, const std::vector<std::size_t> *> splits[] {
    { "train", &ds.split.train }, { "valid", &ds.split.valid }, { "test", &ds.split.test }
  };

  for (std::uint64_t seed: config.seeds) {
    PromptModel m = runner.init_model(pretrained, seed);
    std::vector<Parameter *> params = runner.trainable(m);
    nd::Adam adam(params, { .lr = config.lr });

    SeedResult sr;
    sr.seed = seed;
    PromptModel best = m;
    bool have_best = false;
    for (std::size_t epoch = 0; epoch <= epochs; ++epoch) {
      if (epoch > 0)
        runner.train_epoch(m, adam, seed, epoch - 1);
      Evaluation ev[3];
      for (std::size_t s = 0; s < 3; ++s) {
        ev[s] = runner.evaluate(m, *splits[s].second);
        result.rows.push_back({ std::to_string(epoch), splits[s].first, ev[s].loss,
                                ev[s].auc });
      }
      if (!have_best || better(ev[1].auc, ev[1].loss, sr.best_valid_auc, sr.best_valid_loss)) {
        have_best = true;
        sr.best_epoch = epoch;
        sr.best_valid_auc = ev[1].auc;
        sr.best_valid_loss = ev[1].loss;
        sr.test_auc = ev[2].auc;
        sr.test_loss = ev[2].loss;
        best = m;
      }
    }
    result.rows.push_back({ "best", "valid", sr.best_valid_loss, sr.best_valid_auc });
    result.rows.push_back({ "best", "test", sr.test_loss, sr.test_auc });
    if (!have_model
        || better(sr.best_valid_auc, sr.best_valid_loss, overall_auc, overall_loss)) {
      have_model = true;
      overall_auc = sr.best_valid_auc;
      overall_loss = sr.best_valid_loss;
      result.model = std::move(best);
    }
    result.seeds.push_back(sr);
  }

  std::vector<double> test, valid, test_loss;
  for (const SeedResult &s: result.seeds) {
    if (s.test_auc)
      test.push_back(*s.test_auc);
    if (s.best_valid_auc)
      valid.push_back(*s.best_valid_auc);
    test_loss.push_back(s.test_loss);
  }
  result.test = mean_std(test);
  result.valid = mean_std(valid);
  const MeanStd loss = mean_std(test_loss);
  const bool any = !test.empty();
  result.rows.push_back({ "mean", "test", loss.mean,
                          any ? std::optional(result.test.mean) : std::nullopt });
  result.rows.push_back({ "std", "test", loss.std,
                          any ? std::optional(result.test.std) : std::nullopt });
  return result;
}

std::vector<double> score_molecule(const MolGraph &g, const PromptModel &model,
                                   const MotifVocabulary &vocab, Regime regime) {
  const bool answers = uses_answers(regime);
  const std::vector<std::size_t> motifs =
      model.has_prompt ? attended_motifs(motifs_of(g, vocab), model.prompt.include_empty)
              : std::vector<std::size_t> {};
  Batch b;
  b.graphs.push_back(&g);
  b.motifs.push_back(&motifs);
  Tape tape({ .grad_enabled = false });
  Var out = represent(tape, model, answers, b);
  std::vector<double> scores;
  const std::size_t tasks = answers ? model.banks.size() : model.probes.size();
  for (std::size_t t = 0; t < tasks; ++t) {
    const Tensor s = answers
                         ? answer_scores(tape, out, model.banks[t], AnswerMode::kInfer).value()
                         : model.probes[t].logits(tape, out).value();
    const double v[] { s(0, 0), s(0, 1) };
    scores.push_back(predict(v).score);
  }
  return scores;
}

std::string format_real(std::optional<double> v) {
  if (!v || !std::isfinite(*v))
    return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

std::string format_metrics(const std::vector<MetricRow> &rows) {
  std::string out = "epoch\tsplit\tloss\troc_auc\n";
  for (const MetricRow &r: rows)
    out += r.epoch + "\t" + r.split + "\t" + format_real(r.loss) + "\t"
           + format_real(r.roc_auc) + "\n";
  return out;
}

void write_metrics(const std::vector<MetricRow> &rows,
                   const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCategory::kIo, "cannot write '" + path.string() + "'");
  out << format_metrics(rows);
  if (!out)
    throw Error(ErrorCategory::kIo, "failed writing '" + path.string() + "'");
}

}  // namespace molcpt
