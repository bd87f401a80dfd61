//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_PRETRAIN_H_
#define MOLCPT_PRETRAIN_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "molcpt/encoder.h"
#include "molcpt/ndiff.h"
#include "molcpt/smiles.h"

namespace molcpt {

class Rng;

enum class PretrainTask {
  kContrastive,
  kAttrMask,
};

std::string_view pretrain_task_name(PretrainTask t);
PretrainTask parse_pretrain_task(std::string_view name);

enum class AugmentKind {
  kNodeDrop,
  kEdgeDrop,
  kAttrMask,
};

std::string_view augment_kind_name(AugmentKind k);
AugmentKind parse_augment_kind(std::string_view name);

// Number of items a ratio selects out of n: floor(ratio * n).
std::size_t ratio_count(double ratio, std::size_t n);

// Perturbed copy of g, deterministic in seed. Node drop keeps the largest
// remaining component; edge drop removes acyclic bonds before ring bonds;
// attribute masking flags atoms for the encoder's MASK row. The result
// always keeps at least one atom.
MolGraph augment(const MolGraph &g, AugmentKind kind, double ratio,
                 std::uint64_t seed);

// Projection head reused by answer search: a 2-layer MLP d -> d -> d for
// the contrastive task, a linear map d -> kElementClasses for masking.
struct OutputHead {
  PretrainTask task = PretrainTask::kContrastive;
  std::vector<nd::Parameter> weights;

  static OutputHead init(PretrainTask task, std::size_t dim, Rng &rng);

  std::size_t output_dim() const;
  nd::Var apply(nd::Tape &tape, nd::Var h) const;

  std::vector<nd::Parameter *> parameters();
  void set_trainable(bool trainable);
};

// Symmetrized NT-Xent: anchor z1_i scores every z2_j by cosine / tau and
// must pick j = i; the same with the views swapped. Rows are batch items.
nd::Var ntxent_loss(nd::Var z1, nd::Var z2, double tau);

// Masks max(1, floor(ratio |V|)) atoms chosen by seed, encodes, and returns
// the mean cross-entropy of the head's element prediction on them.
nd::Var attrmask_task(nd::Tape &tape, const MolGraph &g, double mask_ratio,
                      std::uint64_t seed, const EncoderParams &params,
                      const OutputHead &head);

// Batched form of attrmask_task: mean over all masked atoms of the batch.
nd::Var attrmask_loss(nd::Tape &tape, std::span<const MolGraph *const> graphs,
                      double mask_ratio, std::uint64_t seed,
                      const EncoderParams &params, const OutputHead &head);

// Fraction of masked atoms whose element the head predicts correctly.
double attrmask_accuracy(std::span<const MolGraph> graphs, double mask_ratio,
                         std::uint64_t seed, const EncoderParams &params,
                         const OutputHead &head);

struct PretrainConfig {
  PretrainTask task = PretrainTask::kContrastive;
  EncoderConfig encoder;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double tau = 0.1;
  double mask_ratio = 0.15;
  AugmentKind augment = AugmentKind::kNodeDrop;
  double augment_ratio = 0.2;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  EncoderParams encoder;
  OutputHead head;
  // Mean batch loss per epoch.
  std::vector<double> epoch_losses;
};

using EpochLogger = std::function<void(std::size_t epoch, double loss)>;

// Trains a freshly initialized encoder and head with Adam.
PretrainResult pretrain_run(std::span<const MolGraph> corpus,
                            const PretrainConfig &config,
                            const EpochLogger &log = {});

// Continues training the given parameters in place.
std::vector<double> pretrain_epochs(std::span<const MolGraph> corpus,
                                    const PretrainConfig &config,
                                    EncoderParams &encoder, OutputHead &head,
                                    const EpochLogger &log = {});

}  // namespace molcpt

#endif  // MOLCPT_PRETRAIN_H_
