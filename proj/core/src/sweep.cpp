//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/sweep.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "molcpt/error.h"
#include "molcpt/rng.h"
#include "molcpt/split.h"

namespace molcpt {

namespace {

[[noreturn]] void bad_grid(const std::string &msg) {
  throw Error(ErrorCategory::kUsage, "sweep grid: " + msg);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(std::string_view s) {
  const std::string t = trim(s);
  double v = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size() || !std::isfinite(v))
    bad_grid("'" + t + "' is not a number");
  return v;
}

std::vector<double> parse_values(std::string_view spec) {
  std::vector<std::string> parts;
  std::stringstream in { std::string(spec) };
  std::string part;
  if (spec.find(':') != std::string_view::npos) {
    while (std::getline(in, part, ':'))
      parts.push_back(part);
    if (parts.size() != 3)
      bad_grid("range '" + std::string(spec) + "' must be lo:hi:step");
    const double lo = parse_number(parts[0]);
    const double hi = parse_number(parts[1]);
    const double step = parse_number(parts[2]);
    if (!(step > 0.0) || hi < lo)
      bad_grid("range '" + std::string(spec) + "' is empty");
    // Index-based so that float steps do not accumulate error.
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i)
      out.push_back(lo + static_cast<double>(i) * step);
    return out;
  }
  std::vector<double> out;
  while (std::getline(in, part, ','))
    out.push_back(parse_number(part));
  if (out.empty())
    bad_grid("no values given");
  return out;
}

std::vector<std::size_t> as_counts(const std::vector<double> &v, const std::string &key) {
  std::vector<std::size_t> out;
  for (double x: v) {
    if (x < 0.0 || x != std::floor(x))
      bad_grid(key + " values must be non-negative integers");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

void check_grid(const SweepGrid &g) {
  if (g.thresholds.empty() || g.heads.empty() || g.ensembles.empty() || g.orth.empty())
    bad_grid("every hyperparameter needs at least one value");
  for (std::size_t h: g.heads)
    if (h == 0)
      bad_grid("heads must be positive");
  for (double o: g.orth)
    if (o < 0.0)
      bad_grid("orth must be non-negative");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

SweepGrid SweepGrid::default_ranges() {
  SweepGrid g;
  for (std::size_t t = 0; t <= 100; t += 10)
    g.thresholds.push_back(t);
  g.heads = { 2, 4, 8 };
  for (std::size_t e = 0; e <= 100; e += 2)
    g.ensembles.push_back(e);
  for (std::size_t i = 0; i <= 20; ++i)
    g.orth.push_back(static_cast<double>(i) * 5e-6);
  return g;
}

std::size_t SweepGrid::size() const {
  return thresholds.size() * heads.size() * ensembles.size() * orth.size();
}

SweepGrid parse_sweep_grid(std::string_view text, const RunConfig &base,
                           std::size_t base_threshold) {
  SweepGrid g;
  g.thresholds = { base_threshold };
  g.heads = { base.prompt.heads };
  g.ensembles = { base.ensemble };
  g.orth = { base.orth };

  std::vector<std::pair<std::string, std::string>> items;
  const bool lines = text.find('\t') != std::string_view::npos;
  std::stringstream in { std::string(text) };
  std::string item;
  while (std::getline(in, item, lines ? '\n' : ';')) {
    item = trim(item);
    if (item.empty() || item[0] == '#')
      continue;
    const std::size_t sep = item.find(lines ? '\t' : '=');
    if (sep == std::string::npos)
      bad_grid("item '" + item + "' has no value");
    items.emplace_back(trim(item.substr(0, sep)), trim(item.substr(sep + 1)));
  }
  for (const auto &[key, spec]: items) {
    const std::vector<double> values = parse_values(spec);
    if (key == "t")
      g.thresholds = as_counts(values, key);
    else if (key == "heads")
      g.heads = as_counts(values, key);
    else if (key == "ensemble")
      g.ensembles = as_counts(values, key);
    else if (key == "orth")
      g.orth = values;
    else
      bad_grid("unknown key '" + key + "'");
  }
  check_grid(g);
  return g;
}

SweepPoint grid_point(const SweepGrid &grid, std::size_t index) {
  if (index >= grid.size())
    bad_grid("point index out of range");
  SweepPoint p;
  p.orth = grid.orth[index % grid.orth.size()];
  index /= grid.orth.size();
  p.ensemble = grid.ensembles[index % grid.ensembles.size()];
  index /= grid.ensembles.size();
  p.heads = grid.heads[index % grid.heads.size()];
  index /= grid.heads.size();
  p.threshold = grid.thresholds[index];
  return p;
}

std::vector<SweepPoint> sweep_points(const SweepGrid &grid, std::size_t budget,
                                     std::uint64_t seed) {
  check_grid(grid);
  if (budget == 0)
    bad_grid("budget must be positive");
  std::vector<SweepPoint> out;
  if (grid.size() <= budget) {
    for (std::size_t i = 0; i < grid.size(); ++i)
      out.push_back(grid_point(grid, i));
    return out;
  }
  Rng rng(mix_seed(seed, 0x73776565));
  for (std::size_t i: rng.sample(grid.size(), budget))
    out.push_back(grid_point(grid, i));
  return out;
}

std::vector<SweepRow> sweep(const TaskDataset &input, const PromptModel &pretrained,
                            const SweepGrid &grid, const SweepOptions &options,
                            const SweepLogger &log) {
  const std::vector<SweepPoint> points = sweep_points(grid, options.budget, options.seed);

  TaskDataset ds = input;
  if (ds.split.train.empty() && ds.split.valid.empty() && ds.split.test.empty())
    ds.split = scaffold_split(ds);
  std::vector<MolGraph> corpus;
  for (std::size_t i: ds.split.train)
    corpus.push_back(ds.records[i].graph);

  // Each point builds its own vocabulary, so no single hash is bound.
  PromptModel base_model = pretrained;
  base_model.vocab_hash = 0;

  std::map<std::size_t, MotifVocabulary> vocabularies;
  std::vector<SweepRow> rows;
  for (const SweepPoint &p: points) {
    auto it = vocabularies.find(p.threshold);
    if (it == vocabularies.end())
      it = vocabularies
               .emplace(p.threshold, build_vocabulary(corpus, options.rules, p.threshold))
               .first;
    RunConfig config = options.base;
    config.prompt.heads = p.heads;
    config.ensemble = p.ensemble;
    config.orth = p.orth;
    const RunResult r = finetune_run(ds, base_model, it->second, config);

    SweepRow row;
    row.point = p;
    row.vocab_size = it->second.size();
    bool any_valid = false, any_test = false;
    for (const SeedResult &s: r.seeds) {
      any_valid = any_valid || s.best_valid_auc.has_value();
      any_test = any_test || s.test_auc.has_value();
    }
    if (any_valid)
      row.valid_auc = r.valid.mean;
    if (any_test)
      row.test_auc = r.test.mean;
    row.test_std = r.test.std;
    rows.push_back(row);
    if (log)
      log(rows.size(), row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow &a, const SweepRow &b) {
    if (a.valid_auc.has_value() != b.valid_auc.has_value())
      return a.valid_auc.has_value();
    return a.valid_auc.has_value() && *a.valid_auc > *b.valid_auc;
  });
  return rows;
}

std::string format_sweep(const std::vector<SweepRow> &rows) {
  std::string out = "t\theads\tensemble\torth\tvocab_size\tvalid_auc\ttest_auc\ttest_std\n";
  for (const SweepRow &r: rows)
    out += std::to_string(r.point.threshold) + "\t" + std::to_string(r.point.heads) + "\t"
           + std::to_string(r.point.ensemble) + "\t" + format_double(r.point.orth) + "\t"
           + std::to_string(r.vocab_size) + "\t" + format_real(r.valid_auc) + "\t"
           + format_real(r.test_auc) + "\t" + format_real(r.test_std) + "\n";
  return out;
}

}  // namespace molcpt
