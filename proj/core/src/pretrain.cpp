//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/pretrain.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "molcpt/error.h"
#include "molcpt/rng.h"

namespace molcpt {

using nd::Parameter;
using nd::Tape;
using nd::Tensor;
using nd::Var;

std::string_view pretrain_task_name(PretrainTask t) {
  return t == PretrainTask::kContrastive ? "contrastive" : "attrmask";
}

PretrainTask parse_pretrain_task(std::string_view name) {
  if (name == "contrastive")
    return PretrainTask::kContrastive;
  if (name == "attrmask")
    return PretrainTask::kAttrMask;
  throw Error(ErrorCategory::kUsage,
              "unknown pretraining task '" + std::string(name) + "'");
}

std::string_view augment_kind_name(AugmentKind k) {
  switch (k) {
  case AugmentKind::kNodeDrop:
    return "node_drop";
  case AugmentKind::kEdgeDrop:
    return "edge_drop";
  case AugmentKind::kAttrMask:
    return "attr_mask";
  }
  return "";
}

AugmentKind parse_augment_kind(std::string_view name) {
  if (name == "node_drop")
    return AugmentKind::kNodeDrop;
  if (name == "edge_drop")
    return AugmentKind::kEdgeDrop;
  if (name == "attr_mask")
    return AugmentKind::kAttrMask;
  throw Error(ErrorCategory::kUsage,
              "unknown augmentation '" + std::string(name) + "'");
}

std::size_t ratio_count(double ratio, std::size_t n) {
  // The small slack keeps products such as 0.1 * 30 from flooring to 2.
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

namespace {

MolGraph largest_component(const MolGraph &g) {
  const std::vector<std::size_t> comp = g.components();
  std::vector<std::size_t> size;
  for (std::size_t c: comp) {
    if (c >= size.size())
      size.resize(c + 1, 0);
    ++size[c];
  }
  const std::size_t best = static_cast<std::size_t>(
      std::max_element(size.begin(), size.end()) - size.begin());
  std::vector<std::size_t> keep;
  for (std::size_t a = 0; a < g.num_atoms(); ++a)
    if (comp[a] == best)
      keep.push_back(a);
  return g.induced_subgraph(keep);
}

MolGraph drop_nodes(const MolGraph &g, double ratio, Rng &rng) {
  const std::size_t n = g.num_atoms();
  const std::size_t k = std::min(ratio_count(ratio, n), n - 1);
  std::vector<bool> dropped(n, false);
  for (std::size_t a: rng.sample(n, k))
    dropped[a] = true;
  std::vector<std::size_t> keep;
  for (std::size_t a = 0; a < n; ++a)
    if (!dropped[a])
      keep.push_back(a);
  MolGraph out = largest_component(g.induced_subgraph(keep));
  assign_ring_flags(out);
  return out;
}

MolGraph drop_edges(const MolGraph &g, double ratio, Rng &rng) {
  const std::size_t k = ratio_count(ratio, g.num_bonds());
  std::vector<std::size_t> acyclic, ring;
  for (std::size_t b = 0; b < g.num_bonds(); ++b)
    (g.bond(b).in_ring ? ring : acyclic).push_back(b);
  rng.shuffle(acyclic);
  rng.shuffle(ring);
  std::vector<std::size_t> order = acyclic;
  order.insert(order.end(), ring.begin(), ring.end());
  std::vector<bool> dropped(g.num_bonds(), false);
  for (std::size_t i = 0; i < k; ++i)
    dropped[order[i]] = true;

  MolGraph out;
  for (const Atom &a: g.atoms())
    out.add_atom(a);
  for (std::size_t b = 0; b < g.num_bonds(); ++b)
    if (!dropped[b])
      out.add_bond(g.bond(b).a, g.bond(b).b, g.bond(b).order);
  out.set_source_smiles(g.source_smiles());
  assign_ring_flags(out);
  return out;
}

MolGraph mask_atoms(const MolGraph &g, std::size_t k, Rng &rng) {
  MolGraph out = g;
  for (std::size_t a: rng.sample(g.num_atoms(), std::min(k, g.num_atoms())))
    out.atom(a).masked = true;
  return out;
}

void check_ratio(double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0))
    throw Error(ErrorCategory::kUsage, "augmentation ratio must be in [0, 1)");
}

}  // namespace

MolGraph augment(const MolGraph &g, AugmentKind kind, double ratio,
                 std::uint64_t seed) {
  check_ratio(ratio);
  if (g.empty())
    throw Error(ErrorCategory::kData, "cannot augment an empty graph");
  Rng rng(seed);
  switch (kind) {
  case AugmentKind::kNodeDrop:
    return drop_nodes(g, ratio, rng);
  case AugmentKind::kEdgeDrop:
    return drop_edges(g, ratio, rng);
  case AugmentKind::kAttrMask:
    return mask_atoms(g, ratio_count(ratio, g.num_atoms()), rng);
  }
  return g;
}

OutputHead OutputHead::init(PretrainTask task, std::size_t dim, Rng &rng) {
  OutputHead h;
  h.task = task;
  if (task == PretrainTask::kContrastive) {
    h.weights.push_back({ "head.w1", nd::xavier_uniform(dim, dim, rng) });
    h.weights.push_back({ "head.w2", nd::xavier_uniform(dim, dim, rng) });
  } else {
    h.weights.push_back({ "head.w", nd::xavier_uniform(dim, kElementClasses, rng) });
  }
  return h;
}

std::size_t OutputHead::output_dim() const {
  return weights.back().value.cols();
}

Var OutputHead::apply(Tape &tape, Var h) const {
  if (task == PretrainTask::kContrastive)
    return nd::matmul(nd::relu(nd::matmul(h, tape.param(weights[0]))),
                      tape.param(weights[1]));
  return nd::matmul(h, tape.param(weights[0]));
}

std::vector<Parameter *> OutputHead::parameters() {
  std::vector<Parameter *> out;
  for (Parameter &w: weights)
    out.push_back(&w);
  return out;
}

void OutputHead::set_trainable(bool trainable) {
  for (Parameter &w: weights)
    w.requires_grad = trainable;
}

Var ntxent_loss(Var z1, Var z2, double tau) {
  if (!(tau > 0.0))
    throw Error(ErrorCategory::kUsage, "temperature must be positive");
  if (z1.shape() != z2.shape() || z1.value().rank() != 2)
    throw Error(ErrorCategory::kShape, "ntxent_loss: views must be equal-shape matrices");
  const std::size_t n = z1.shape()[0];
  if (n < 2)
    throw Error(ErrorCategory::kUsage, "ntxent_loss needs a batch of at least 2");
  Var sim = nd::scale(nd::matmul(nd::normalize_rows(z1),
                                 nd::transpose(nd::normalize_rows(z2))),
                      1.0 / tau);
  std::vector<std::size_t> targets(n);
  std::iota(targets.begin(), targets.end(), 0);
  Var both[] { nd::cross_entropy(sim, targets),
               nd::cross_entropy(nd::transpose(sim), targets) };
  return nd::scale(nd::add_n(both), 0.5);
}

namespace {

struct MaskedBatch {
  std::vector<MolGraph> graphs;
  // Row in the batch node matrix and element class per masked atom.
  std::vector<std::size_t> rows;
  std::vector<std::size_t> targets;
};

MaskedBatch mask_batch(std::span<const MolGraph *const> graphs, double ratio,
                       std::uint64_t seed, bool single_seed) {
  check_ratio(ratio);
  MaskedBatch mb;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const MolGraph &g = *graphs[i];
    if (g.empty())
      throw Error(ErrorCategory::kData, "cannot mask an empty graph");
    Rng rng(single_seed ? seed : mix_seed(seed, i));
    const std::size_t k = std::max<std::size_t>(1, ratio_count(ratio, g.num_atoms()));
    MolGraph masked = mask_atoms(g, k, rng);
    for (std::size_t a = 0; a < g.num_atoms(); ++a)
      if (masked.atom(a).masked) {
        mb.rows.push_back(offset + a);
        mb.targets.push_back(static_cast<std::size_t>(g.atom(a).element));
      }
    offset += g.num_atoms();
    mb.graphs.push_back(std::move(masked));
  }
  return mb;
}

Var masked_logits(Tape &tape, const MaskedBatch &mb, const EncoderParams &params,
                  const OutputHead &head) {
  if (head.task != PretrainTask::kAttrMask)
    throw Error(ErrorCategory::kUsage, "attribute masking needs a masking head");
  std::vector<const MolGraph *> ptrs;
  for (const MolGraph &g: mb.graphs)
    ptrs.push_back(&g);
  Encoded enc = encode(tape, GraphBatch::of(ptrs), params);
  return head.apply(tape, nd::gather_rows(enc.nodes, mb.rows));
}

}  // namespace

Var attrmask_task(Tape &tape, const MolGraph &g, double mask_ratio,
                  std::uint64_t seed, const EncoderParams &params,
                  const OutputHead &head) {
  const MolGraph *one[] { &g };
  MaskedBatch mb = mask_batch(one, mask_ratio, seed, true);
  return nd::cross_entropy(masked_logits(tape, mb, params, head), mb.targets);
}

Var attrmask_loss(Tape &tape, std::span<const MolGraph *const> graphs,
                  double mask_ratio, std::uint64_t seed,
                  const EncoderParams &params, const OutputHead &head) {
  MaskedBatch mb = mask_batch(graphs, mask_ratio, seed, false);
  return nd::cross_entropy(masked_logits(tape, mb, params, head), mb.targets);
}

double attrmask_accuracy(std::span<const MolGraph> graphs, double mask_ratio,
                         std::uint64_t seed, const EncoderParams &params,
                         const OutputHead &head) {
  std::vector<const MolGraph *> ptrs;
  for (const MolGraph &g: graphs)
    ptrs.push_back(&g);
  MaskedBatch mb = mask_batch(ptrs, mask_ratio, seed, false);
  Tape tape({ .grad_enabled = false });
  const Tensor &logits = masked_logits(tape, mb, params, head).value();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < mb.rows.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, best))
        best = c;
    correct += best == mb.targets[i];
  }
  return mb.rows.empty() ? 0.0
                         : static_cast<double>(correct)
                               / static_cast<double>(mb.rows.size());
}

namespace {

std::vector<std::vector<std::size_t>> make_batches(std::size_t n,
                                                   std::size_t batch_size,
                                                   Rng &rng, bool min_two) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  // A lone trailing item cannot form a contrastive batch; fold it back.
  if (min_two && out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back()[0]);
    out.pop_back();
  }
  return out;
}

}  // namespace

std::vector<double> pretrain_epochs(std::span<const MolGraph> corpus,
                                    const PretrainConfig &config,
                                    EncoderParams &encoder, OutputHead &head,
                                    const EpochLogger &log) {
  if (corpus.empty())
    throw Error(ErrorCategory::kData, "pretraining corpus is empty");
  if (config.batch_size == 0)
    throw Error(ErrorCategory::kUsage, "batch size must be positive");
  const bool contrastive = config.task == PretrainTask::kContrastive;
  if (contrastive && corpus.size() < 2)
    throw Error(ErrorCategory::kData,
                "contrastive pretraining needs at least 2 molecules");
  if (head.task != config.task)
    throw Error(ErrorCategory::kUsage, "output head does not match the task");

  std::vector<Parameter *> params = encoder.parameters();
  for (Parameter *p: head.parameters())
    params.push_back(p);
  nd::Adam adam(params, { .lr = config.lr });

  std::vector<double> losses;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(mix_seed(config.seed, 0x70726574ULL + epoch));
    const auto batches = make_batches(corpus.size(), config.batch_size, rng,
                                      contrastive);
    double total = 0.0;
    for (const auto &batch: batches) {
      Tape tape;
      Var loss;
      try {
        if (contrastive) {
          std::vector<MolGraph> views;
          for (std::size_t i: batch) {
            views.push_back(augment(corpus[i], config.augment,
                                    config.augment_ratio, rng.next()));
            views.push_back(augment(corpus[i], config.augment,
                                    config.augment_ratio, rng.next()));
          }
          std::vector<const MolGraph *> a, b;
          for (std::size_t i = 0; i < batch.size(); ++i) {
            a.push_back(&views[2 * i]);
            b.push_back(&views[2 * i + 1]);
          }
          Var z1 = head.apply(tape, encode(tape, GraphBatch::of(a), encoder).graphs);
          Var z2 = head.apply(tape, encode(tape, GraphBatch::of(b), encoder).graphs);
          loss = ntxent_loss(z1, z2, config.tau);
        } else {
          std::vector<const MolGraph *> gs;
          for (std::size_t i: batch)
            gs.push_back(&corpus[i]);
          loss = attrmask_loss(tape, gs, config.mask_ratio, rng.next(), encoder, head);
        }
      } catch (const Error &e) {
        if (e.category() == ErrorCategory::kNumeric)
          throw Error(ErrorCategory::kNumeric,
                      "pretraining diverged at epoch " + std::to_string(epoch)
                          + ": " + e.what());
        throw;
      }
      const double value = loss.value().item();
      if (!std::isfinite(value))
        throw Error(ErrorCategory::kNumeric,
                    "pretraining diverged at epoch " + std::to_string(epoch));
      total += value;
      adam.step(tape.backward(loss));
    }
    const double mean = total / static_cast<double>(batches.size());
    losses.push_back(mean);
    if (log)
      log(epoch, mean);
  }
  return losses;
}

PretrainResult pretrain_run(std::span<const MolGraph> corpus,
                            const PretrainConfig &config, const EpochLogger &log) {
  Rng rng(mix_seed(config.seed, 0x696e6974ULL));
  PretrainResult r { EncoderParams::init(config.encoder, rng),
                     OutputHead::init(config.task, config.encoder.dim, rng),
                     {} };
  r.epoch_losses = pretrain_epochs(corpus, config, r.encoder, r.head, log);
  return r;
}

}  // namespace molcpt
