//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/encoder.h"

#include <algorithm>
#include <string>

#include "molcpt/error.h"
#include "molcpt/rng.h"

namespace molcpt {

using nd::Parameter;
using nd::Tape;
using nd::Tensor;
using nd::Var;

EncoderParams EncoderParams::init(const EncoderConfig &config, Rng &rng) {
  if (config.dim == 0)
    throw Error(ErrorCategory::kUsage, "encoder dim must be positive");
  const std::size_t d = config.dim;
  EncoderParams p;
  p.config = config;
  p.element = { "encoder.element", nd::xavier_uniform(kElementClasses + 1, d, rng) };
  p.aromatic = { "encoder.aromatic", nd::xavier_uniform(2, d, rng) };
  p.bond = { "encoder.bond", nd::xavier_uniform(kBondOrderCount, d, rng) };
  for (std::size_t k = 0; k < config.layers; ++k) {
    p.w1.push_back({ "encoder.w1." + std::to_string(k),
                     nd::xavier_uniform(d, 2 * d, rng) });
    // Halving W2 offsets the growth of sum aggregation over ~3 neighbors so
    // embeddings stay O(1) through the default depth.
    Tensor w2 = nd::xavier_uniform(2 * d, d, rng);
    for (double &x: w2.values())
      x *= 0.5;
    p.w2.push_back({ "encoder.w2." + std::to_string(k), std::move(w2) });
  }
  return p;
}

std::vector<Parameter *> EncoderParams::parameters() {
  std::vector<Parameter *> out { &element, &aromatic, &bond };
  for (std::size_t k = 0; k < w1.size(); ++k) {
    out.push_back(&w1[k]);
    out.push_back(&w2[k]);
  }
  return out;
}

std::vector<const Parameter *> EncoderParams::parameters() const {
  std::vector<const Parameter *> out { &element, &aromatic, &bond };
  for (std::size_t k = 0; k < w1.size(); ++k) {
    out.push_back(&w1[k]);
    out.push_back(&w2[k]);
  }
  return out;
}

void EncoderParams::set_trainable(bool trainable) {
  for (Parameter *q: parameters())
    q->requires_grad = trainable;
}

GraphBatch GraphBatch::of(std::span<const MolGraph *const> graphs) {
  GraphBatch b;
  b.num_graphs = graphs.size();
  for (const MolGraph *g: graphs)
    b.num_atoms += g->num_atoms();
  b.bond_counts = Tensor({ b.num_atoms, kBondOrderCount });
  b.element_rows.reserve(b.num_atoms);
  b.aromatic_rows.reserve(b.num_atoms);
  b.graph_of.reserve(b.num_atoms);

  std::size_t offset = 0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const MolGraph &g = *graphs[gi];
    if (g.empty())
      throw Error(ErrorCategory::kData, "cannot encode an empty graph");
    b.offsets.push_back(offset);
    b.graph_sizes.push_back(g.num_atoms());
    for (const Atom &a: g.atoms()) {
      if (a.element < 1 || a.element > kMaxElement)
        throw Error(ErrorCategory::kData,
                    "unknown element " + std::to_string(a.element));
      b.element_rows.push_back(a.masked ? kMaskRow
                                        : static_cast<std::size_t>(a.element));
      b.aromatic_rows.push_back(a.masked ? 2 : (a.aromatic ? 1 : 0));
      b.graph_of.push_back(gi);
    }
    for (const Bond &bond: g.bonds()) {
      const std::size_t u = offset + bond.a, v = offset + bond.b;
      b.message_src.push_back(u);
      b.message_dst.push_back(v);
      b.message_src.push_back(v);
      b.message_dst.push_back(u);
      const std::size_t o = bond_order_index(bond.order);
      b.bond_counts(u, o) += 1.0;
      b.bond_counts(v, o) += 1.0;
    }
    offset += g.num_atoms();
  }
  return b;
}

GraphBatch GraphBatch::of(const MolGraph &g) {
  const MolGraph *one[] { &g };
  return of(one);
}

Var init_features(Tape &tape, const GraphBatch &batch, const EncoderParams &p) {
  const std::size_t d = p.config.dim;
  Var element = nd::gather_rows(tape.param(p.element), batch.element_rows);
  Var rows[] { tape.param(p.aromatic), tape.constant(Tensor({ 1, d })) };
  Var aromatic = nd::gather_rows(nd::concat(rows, 0), batch.aromatic_rows);
  return nd::add(element, aromatic);
}

Var gin_layer(Tape &tape, Var x, const GraphBatch &batch, std::size_t k,
              const EncoderParams &p) {
  if (k >= p.w1.size())
    throw Error(ErrorCategory::kShape, "gin_layer: layer index out of range");
  if (x.shape() != nd::Shape { batch.num_atoms, p.config.dim })
    throw Error(ErrorCategory::kShape,
                "gin_layer: expected " + std::to_string(batch.num_atoms) + "x"
                    + std::to_string(p.config.dim) + " node matrix, got "
                    + nd::shape_str(x.shape()));
  Var neighbors = nd::scatter_add_rows(nd::gather_rows(x, batch.message_src),
                                       batch.message_dst, batch.num_atoms);
  Var bonds = nd::matmul(tape.constant(batch.bond_counts), tape.param(p.bond));
  Var terms[] { x, neighbors, bonds };
  Var m = nd::add_n(terms);
  Var hidden = nd::relu(nd::matmul(m, tape.param(p.w1[k])));
  return nd::matmul(hidden, tape.param(p.w2[k]));
}

Var mean_readout(Var nodes, const GraphBatch &batch) {
  Tape &tape = *nodes.tape();
  const std::size_t d = nodes.value().cols();
  Tensor inv({ batch.num_graphs, d });
  for (std::size_t g = 0; g < batch.num_graphs; ++g)
    std::fill_n(&inv.values()[g * d], d,
                1.0 / static_cast<double>(batch.graph_sizes[g]));
  Var sums = nd::scatter_add_rows(nodes, batch.graph_of, batch.num_graphs);
  return nd::mul(sums, tape.constant(std::move(inv)));
}

Encoded encode(Tape &tape, const GraphBatch &batch, const EncoderParams &p,
               std::size_t layers) {
  const std::size_t depth = std::min(layers, p.w1.size());
  Var x = init_features(tape, batch, p);
  for (std::size_t k = 0; k < depth; ++k)
    x = gin_layer(tape, x, batch, k, p);
  return { mean_readout(x, batch), x };
}

Encoded encode_graph(Tape &tape, const MolGraph &g, const EncoderParams &p) {
  return encode(tape, GraphBatch::of(g), p);
}

Var encode_motif(Tape &tape, const Motif &m, const EncoderParams &p) {
  if (m.subgraph.empty())
    throw Error(ErrorCategory::kData, "cannot encode the empty motif");
  return nd::reshape(encode_graph(tape, m.subgraph, p).graphs, { p.config.dim });
}

Tensor embed_graph(const MolGraph &g, const EncoderParams &p) {
  Tape tape({ .grad_enabled = false });
  Tensor out = encode_graph(tape, g, p).graphs.value();
  return Tensor({ p.config.dim }, std::move(out.values()));
}

Tensor embed_graphs(std::span<const MolGraph *const> graphs,
                    const EncoderParams &p) {
  if (graphs.empty())
    return Tensor({ 0, p.config.dim });
  Tape tape({ .grad_enabled = false });
  return encode(tape, GraphBatch::of(graphs), p).graphs.value();
}

}  // namespace molcpt
