//
// MolCPT - Copyright 2026 The MolCPT Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLCPT_DATASET_H_
#define MOLCPT_DATASET_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "molcpt/smiles.h"

namespace molcpt {

inline constexpr int kMissingLabel = -1;

struct Record {
  MolGraph graph;
  // One entry per task: 0, 1, or kMissingLabel.
  std::vector<int> labels;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

struct TaskDataset {
  std::string name;
  std::vector<std::string> task_names;
  std::vector<Record> records;
  Split split;
  // Rows dropped because their SMILES did not parse.
  std::size_t skipped = 0;

  std::size_t task_count() const { return task_names.size(); }
  std::size_t size() const { return records.size(); }
};

// CSV with a header row: one column named "smiles", every other column a
// binary task with values 0, 1, or empty. Quoted fields are supported.
TaskDataset parse_dataset(std::string_view csv, std::string name = {});
TaskDataset load_dataset(const std::filesystem::path &path);

// Writes the CSV form read by parse_dataset (SMILES from source_smiles).
std::string format_dataset(const TaskDataset &ds);

// Splits one CSV line into fields.
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace molcpt

#endif  // MOLCPT_DATASET_H_
