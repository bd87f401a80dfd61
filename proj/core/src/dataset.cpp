//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "molcpt/dataset.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "molcpt/error.h"

namespace molcpt {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

namespace {

std::string trim(std::string s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && ws(s.back()))
    s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && ws(s[i]))
    ++i;
  return s.substr(i);
}

int parse_label(const std::string &cell, std::size_t line, const std::string &task) {
  if (cell.empty())
    return kMissingLabel;
  if (cell == "0" || cell == "0.0")
    return 0;
  if (cell == "1" || cell == "1.0")
    return 1;
  throw Error(ErrorCategory::kData, "line " + std::to_string(line) + ": task '"
                                        + task + "' has non-binary value '"
                                        + cell + "'");
}

}  // namespace

TaskDataset parse_dataset(std::string_view csv, std::string name) {
  TaskDataset ds;
  ds.name = std::move(name);
  std::istringstream in { std::string(csv) };
  std::string line;
  std::size_t line_no = 0;
  std::size_t smiles_col = 0;
  std::vector<std::size_t> task_cols;
  bool header = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty())
      continue;
    std::vector<std::string> fields = split_csv_line(line);
    for (std::string &f: fields)
      f = trim(std::move(f));
    if (!header) {
      auto it = std::find(fields.begin(), fields.end(), "smiles");
      if (it == fields.end())
        throw Error(ErrorCategory::kData, "dataset has no 'smiles' column");
      smiles_col = static_cast<std::size_t>(it - fields.begin());
      for (std::size_t c = 0; c < fields.size(); ++c)
        if (c != smiles_col) {
          task_cols.push_back(c);
          ds.task_names.push_back(fields[c]);
        }
      header = true;
      continue;
    }
    if (fields.size() <= smiles_col) {
      ++ds.skipped;
      continue;
    }
    Record r;
    try {
      r.graph = parse_smiles(fields[smiles_col]);
    } catch (const ParseError &) {
      ++ds.skipped;
      continue;
    }
    for (std::size_t t = 0; t < task_cols.size(); ++t) {
      const std::size_t c = task_cols[t];
      r.labels.push_back(parse_label(c < fields.size() ? fields[c] : std::string(),
                                     line_no, ds.task_names[t]));
    }
    ds.records.push_back(std::move(r));
  }
  if (!header)
    throw Error(ErrorCategory::kData, "dataset has no header row");
  if (ds.records.empty())
    throw Error(ErrorCategory::kData, "dataset has no valid rows");
  return ds;
}

TaskDataset load_dataset(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCategory::kIo, "cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), path.stem().string());
}

std::string format_dataset(const TaskDataset &ds) {
  std::string out = "smiles";
  for (const std::string &t: ds.task_names)
    out += "," + t;
  out += '\n';
  for (const Record &r: ds.records) {
    out += r.graph.source_smiles();
    for (int l: r.labels)
      out += l == kMissingLabel ? std::string(",") : "," + std::to_string(l);
    out += '\n';
  }
  return out;
}

}  // namespace molcpt
