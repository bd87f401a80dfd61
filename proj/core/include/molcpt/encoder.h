//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_ENCODER_H_
#define MOLCPT_ENCODER_H_

#include <cstddef>
#include <span>
#include <vector>

#include "molcpt/fragment.h"
#include "molcpt/ndiff.h"
#include "molcpt/smiles.h"

namespace molcpt {

class Rng;

// Element classes are indexed by atomic number (row 0 unused), so the
// attribute-masking head predicts one of kElementClasses classes.
inline constexpr std::size_t kElementClasses = kMaxElement + 1;
inline constexpr std::size_t kMaskRow = kElementClasses;

struct EncoderConfig {
  std::size_t layers = 5;
  std::size_t dim = 64;
};

// GIN encoder weights. Layer k maps m -> relu(m W1[k]) W2[k] with W1: d x 2d
// and W2: 2d x d. No biases, so the encoder is positively homogeneous in its
// embedding tables.
struct EncoderParams {
  EncoderConfig config;
  nd::Parameter element;   // (kElementClasses + 1) x d, last row is MASK
  nd::Parameter aromatic;  // 2 x d
  nd::Parameter bond;      // kBondOrderCount x d
  std::vector<nd::Parameter> w1;
  std::vector<nd::Parameter> w2;

  static EncoderParams init(const EncoderConfig &config, Rng &rng);

  std::vector<nd::Parameter *> parameters();
  std::vector<const nd::Parameter *> parameters() const;
  void set_trainable(bool trainable);
};

// Disjoint union of graphs with the index arrays message passing needs.
struct GraphBatch {
  std::size_t num_atoms = 0;
  std::size_t num_graphs = 0;
  std::vector<std::size_t> element_rows;
  // 0/1 aromatic row, or 2 (a zero row) for masked atoms.
  std::vector<std::size_t> aromatic_rows;
  // Directed message edges (both directions of every bond).
  std::vector<std::size_t> message_src;
  std::vector<std::size_t> message_dst;
  // atoms x kBondOrderCount incident bond-order counts.
  nd::Tensor bond_counts;
  std::vector<std::size_t> graph_of;
  std::vector<std::size_t> graph_sizes;
  // First atom of each graph in the union.
  std::vector<std::size_t> offsets;

  static GraphBatch of(std::span<const MolGraph *const> graphs);
  static GraphBatch of(const MolGraph &g);
};

struct Encoded {
  nd::Var graphs;  // num_graphs x d, mean readout
  nd::Var nodes;   // num_atoms x d, final layer
};

// x_v = element[z_v] + aromatic[a_v]; masked atoms use only the MASK row.
nd::Var init_features(nd::Tape &tape, const GraphBatch &batch,
                      const EncoderParams &p);

// m_v = x_v + sum_{u in N(v)} (x_u + bond[order(u, v)]); out = MLP_k(m).
nd::Var gin_layer(nd::Tape &tape, nd::Var x, const GraphBatch &batch,
                  std::size_t k, const EncoderParams &p);

// Mean of node rows per graph.
nd::Var mean_readout(nd::Var nodes, const GraphBatch &batch);

// Runs `layers` GIN layers (all of them by default) then the mean readout.
Encoded encode(nd::Tape &tape, const GraphBatch &batch, const EncoderParams &p,
               std::size_t layers = static_cast<std::size_t>(-1));
Encoded encode_graph(nd::Tape &tape, const MolGraph &g, const EncoderParams &p);

// Embedding of a standalone motif; the empty motif is rejected.
nd::Var encode_motif(nd::Tape &tape, const Motif &m, const EncoderParams &p);

// Gradient-free h_G for one graph.
nd::Tensor embed_graph(const MolGraph &g, const EncoderParams &p);
// Gradient-free h_G rows for many graphs.
nd::Tensor embed_graphs(std::span<const MolGraph *const> graphs,
                        const EncoderParams &p);

}  // namespace molcpt

#endif  // MOLCPT_ENCODER_H_
