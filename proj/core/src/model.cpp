//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/model.h"

#include <charconv>
#include <cstdio>
#include <string>

#include "molcpt/error.h"

namespace molcpt {

using nd::Parameter;
using nd::Tensor;

ProbeHead ProbeHead::zeros(std::size_t dim, std::size_t task) {
  const std::string t = std::to_string(task);
  return { { "probe.weight." + t, Tensor({ dim, 2 }) },
           { "probe.bias." + t, Tensor({ 2 }) } };
}

nd::Var ProbeHead::logits(nd::Tape &tape, nd::Var h) const {
  return nd::add(nd::matmul(h, tape.param(weight)), tape.param(bias));
}

std::vector<Parameter *> PromptModel::parameters() {
  std::vector<Parameter *> out = encoder.parameters();
  for (Parameter *p: head.parameters())
    out.push_back(p);
  if (has_prompt) {
    out.push_back(&table.rows);
    for (Parameter *p: attention.parameters())
      out.push_back(p);
  }
  for (AnswerBank &b: banks)
    out.push_back(&b.rows);
  for (ProbeHead &p: probes) {
    out.push_back(&p.weight);
    out.push_back(&p.bias);
  }
  return out;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string real(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::size_t as_size(const Checkpoint &c, std::string_view key) {
  const std::string &v = c.get(key);
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw Error(ErrorCategory::kCheckpoint, "malformed '" + std::string(key) + "' entry");
  return out;
}

double as_real(const Checkpoint &c, std::string_view key) {
  const std::string &v = c.get(key);
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw Error(ErrorCategory::kCheckpoint, "malformed '" + std::string(key) + "' entry");
  return out;
}

Parameter restore(const Checkpoint &c, const std::string &name,
                  const nd::Shape &shape) {
  const Tensor &t = c.tensor(name);
  if (t.shape() != shape)
    throw Error(ErrorCategory::kCheckpoint,
                "tensor '" + name + "' has shape " + nd::shape_str(t.shape())
                    + ", expected " + nd::shape_str(shape));
  return { name, t };
}

}  // namespace

Checkpoint to_checkpoint(const PromptModel &m) {
  Checkpoint c;
  c.set("layers", std::to_string(m.encoder.config.layers));
  c.set("dim", std::to_string(m.encoder.config.dim));
  c.set("classes", std::to_string(kElementClasses));
  c.set("task", std::string(pretrain_task_name(m.head.task)));
  c.set("rules", std::string(rule_set_name(m.rules)));
  c.set("seed", std::to_string(m.seed));
  c.set("vocab_hash", hex64(m.vocab_hash));
  for (const Parameter *p: m.encoder.parameters())
    c.add(p->name, p->value);
  for (const Parameter &p: m.head.weights)
    c.add(p.name, p.value);
  if (m.has_prompt) {
    c.set("heads", std::to_string(m.attention.heads));
    c.set("feedforward", m.prompt.feedforward ? "1" : "0");
    c.set("include_empty", m.prompt.include_empty ? "1" : "0");
    c.set("freeze_empty", m.prompt.freeze_empty ? "1" : "0");
    c.set("vocab_size", std::to_string(m.table.size()));
    c.add(m.table.rows.name, m.table.rows.value);
    for (const Parameter *p: m.attention.parameters())
      c.add(p->name, p->value);
  }
  c.set("tasks", std::to_string(m.banks.size()));
  if (!m.banks.empty()) {
    c.set("ensemble", std::to_string(m.banks[0].ensemble));
    c.set("orth", real(m.banks[0].orth));
    c.set("answer_tau", real(m.banks[0].tau));
  }
  for (std::size_t t = 0; t < m.banks.size(); ++t)
    c.add("answer.rows." + std::to_string(t), m.banks[t].rows.value);
  c.set("probes", std::to_string(m.probes.size()));
  for (const ProbeHead &p: m.probes) {
    c.add(p.weight.name, p.weight.value);
    c.add(p.bias.name, p.bias.value);
  }
  return c;
}

PromptModel from_checkpoint(const Checkpoint &c) {
  PromptModel m;
  const std::size_t d = as_size(c, "dim");
  const std::size_t layers = as_size(c, "layers");
  if (d == 0)
    throw Error(ErrorCategory::kCheckpoint, "checkpoint has zero dimension");
  if (as_size(c, "classes") != kElementClasses)
    throw Error(ErrorCategory::kCheckpoint, "checkpoint element class count differs");
  m.encoder.config = { layers, d };
  m.encoder.element = restore(c, "encoder.element", { kElementClasses + 1, d });
  m.encoder.aromatic = restore(c, "encoder.aromatic", { 2, d });
  m.encoder.bond = restore(c, "encoder.bond", { kBondOrderCount, d });
  for (std::size_t k = 0; k < layers; ++k) {
    m.encoder.w1.push_back(restore(c, "encoder.w1." + std::to_string(k), { d, 2 * d }));
    m.encoder.w2.push_back(restore(c, "encoder.w2." + std::to_string(k), { 2 * d, d }));
  }
  m.head.task = parse_pretrain_task(c.get("task"));
  if (m.head.task == PretrainTask::kContrastive) {
    m.head.weights.push_back(restore(c, "head.w1", { d, d }));
    m.head.weights.push_back(restore(c, "head.w2", { d, d }));
  } else {
    m.head.weights.push_back(restore(c, "head.w", { d, kElementClasses }));
  }
  m.rules = parse_rule_set(c.get("rules"));
  m.seed = as_size(c, "seed");
  m.vocab_hash = c.vocab_hash();

  if (auto heads = c.get_optional("heads")) {
    m.has_prompt = true;
    m.prompt.heads = as_size(c, "heads");
    m.prompt.feedforward = c.get("feedforward") == "1";
    m.prompt.include_empty = c.get("include_empty") == "1";
    m.prompt.freeze_empty = c.get("freeze_empty") == "1";
    if (m.prompt.heads == 0 || d % m.prompt.heads != 0)
      throw Error(ErrorCategory::kCheckpoint, "invalid head count");
    const std::size_t dh = d / m.prompt.heads;
    m.table.rows = restore(c, "prompt.motifs", { as_size(c, "vocab_size"), d });
    m.attention.heads = m.prompt.heads;
    for (std::size_t h = 0; h < m.prompt.heads; ++h) {
      const std::string s = std::to_string(h);
      m.attention.wq.push_back(restore(c, "prompt.wq." + s, { d, dh }));
      m.attention.wk.push_back(restore(c, "prompt.wk." + s, { d, dh }));
      m.attention.wv.push_back(restore(c, "prompt.wv." + s, { d, dh }));
    }
    m.attention.wo = restore(c, "prompt.wo", { d, d });
    if (m.prompt.feedforward) {
      m.attention.ffn.push_back(restore(c, "prompt.ffn.0", { d, d }));
      m.attention.ffn.push_back(restore(c, "prompt.ffn.1", { d, d }));
    }
  }

  const std::size_t tasks = as_size(c, "tasks");
  for (std::size_t t = 0; t < tasks; ++t) {
    AnswerBank b;
    b.ensemble = as_size(c, "ensemble");
    b.orth = as_real(c, "orth");
    b.tau = as_real(c, "answer_tau");
    const Tensor &rows = c.tensor("answer.rows." + std::to_string(t));
    if (rows.rank() != 2 || b.ensemble == 0 || rows.rows() % b.ensemble != 0)
      throw Error(ErrorCategory::kCheckpoint, "malformed answer bank");
    b.labels = rows.rows() / b.ensemble;
    b.rows = { "answer.rows." + std::to_string(t), rows };
    m.banks.push_back(std::move(b));
  }
  const std::size_t probes = as_size(c, "probes");
  for (std::size_t t = 0; t < probes; ++t) {
    const std::string s = std::to_string(t);
    m.probes.push_back({ restore(c, "probe.weight." + s, { d, 2 }),
                         restore(c, "probe.bias." + s, { 2 }) });
  }
  return m;
}

}  // namespace molcpt
