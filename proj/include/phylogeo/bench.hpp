// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

// Extended-run harness: a key=value matrix file expands into a grid of
// training configurations, every cell runs per seed as an independent child
// process of the main binary, and marginal-likelihood results append to a
// provenance-stamped CSV that is never overwritten.

namespace phylogeo {

// One grid axis in file order: a flag name and the values it sweeps.
using BenchAxis = std::pair<std::string, std::vector<std::string>>;

// One instantiated cell: flag name -> single value, axis order preserved.
using BenchCell = std::vector<std::pair<std::string, std::string>>;

// Parses lines of the form `key = value[, value...]`; '#' starts a comment.
// Keys must be infer flags from the allowlist; `data` is required. Throws
// DataError on malformed lines, duplicate or unknown keys.
std::vector<BenchAxis> ParseRunMatrix(const std::string& text);

// Cross product over the axes, the last axis varying fastest.
std::vector<BenchCell> ExpandGrid(const std::vector<BenchAxis>& axes);

// Canonical `key=value;` concatenation of a cell, the hash preimage.
std::string CellSettings(const BenchCell& cell);

// 64-bit FNV-1a of the settings string, 16 hex digits.
std::string ConfigHash(const std::string& settings);

struct BenchReport {
  int attempted = 0;  // cell-seed runs considered
  int completed = 0;  // rows appended from successful runs
  int skipped = 0;    // missing data or failed child processes
};

// Runs every cell of the matrix through `exe_path infer`, one process per
// (cell, seed), keeping run artifacts under work_dir/<hash>/seed<seed>.
// Appends one CSV row per seed plus one pooled row per cell.
BenchReport RunMatrix(const std::string& matrix_path,
                      const std::string& csv_path,
                      const std::string& exe_path,
                      const std::string& work_dir);

}  // namespace phylogeo
