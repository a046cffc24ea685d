// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "phylogeo/bench.hpp"

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "phylogeo/common.hpp"

namespace phylogeo {

namespace {

namespace fs = std::filesystem;

const std::set<std::string>& AllowedKeys() {
  static const std::set<std::string> keys = {
      "data",          "space",          "cov",
      "dim",           "estimator",      "K",
      "link",          "lr",             "lr-decay",
      "lr-decay-every", "anneal-samples", "beta-start",
      "nle-budget",    "seed",           "trace-every",
      "threads",       "mll-samples",    "mll-reps",
      "topology-samples", "lax-drop-entropy"};
  return keys;
}

std::string Trim(const std::string& text) {
  const size_t begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const size_t end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string> SplitValues(const std::string& text) {
  std::vector<std::string> values;
  std::istringstream in(text);
  std::string piece;
  while (std::getline(in, piece, ',')) {
    values.push_back(Trim(piece));
  }
  return values;
}

bool TruthyFlag(const std::string& value) {
  return value == "1" || value == "true" || value == "yes" || value == "on";
}

std::string Quoted(const std::string& text) { return "\"" + text + "\""; }

struct MllNumbers {
  double mean = 0.0;
  double std_dev = 0.0;
  int reps = 0;
  bool complete = false;
};

MllNumbers ParseMllReport(const std::string& path) {
  MllNumbers numbers;
  std::ifstream in(path);
  if (!in) return numbers;
  std::string line;
  bool have_mean = false, have_std = false, have_reps = false;
  while (std::getline(in, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "mll_mean") {
        numbers.mean = std::stod(value);
        have_mean = true;
      } else if (key == "mll_std") {
        numbers.std_dev = std::stod(value);
        have_std = true;
      } else if (key == "mll_reps") {
        numbers.reps = std::stoi(value);
        have_reps = true;
      }
    } catch (const std::exception&) {
      return numbers;
    }
  }
  numbers.complete = have_mean && have_std && have_reps;
  return numbers;
}

void AppendRows(const std::string& csv_path, const std::string& rows) {
  const bool fresh = !fs::exists(csv_path) || fs::file_size(csv_path) == 0;
  std::ofstream out(csv_path, std::ios::app);
  if (!out) {
    throw DataError("cannot open report file " + csv_path);
  }
  if (fresh) {
    out << "# phylogeo " << kVersion << "\n";
    out << "config,version,seed,mll_mean,mll_std,reps,settings\n";
  }
  out << rows;
  if (!out) {
    throw DataError("cannot write report file " + csv_path);
  }
}

std::string CsvNumber(double value) {
  char buffer[48];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

}  // namespace

std::vector<BenchAxis> ParseRunMatrix(const std::string& text) {
  std::vector<BenchAxis> axes;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("matrix line " + std::to_string(line_number) +
                      ": expected key = value[, value...]");
    }
    const std::string key = Trim(line.substr(0, eq));
    if (key.empty()) {
      throw DataError("matrix line " + std::to_string(line_number) +
                      ": empty key");
    }
    if (AllowedKeys().count(key) == 0) {
      throw DataError("matrix line " + std::to_string(line_number) +
                      ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw DataError("matrix line " + std::to_string(line_number) +
                      ": duplicate key '" + key + "'");
    }
    const std::vector<std::string> values = SplitValues(line.substr(eq + 1));
    for (const std::string& value : values) {
      if (value.empty()) {
        throw DataError("matrix line " + std::to_string(line_number) +
                        ": empty value for '" + key + "'");
      }
    }
    if (values.empty()) {
      throw DataError("matrix line " + std::to_string(line_number) +
                      ": no values for '" + key + "'");
    }
    axes.emplace_back(key, values);
  }
  if (seen.count("data") == 0) {
    throw DataError("matrix file must set 'data'");
  }
  return axes;
}

std::vector<BenchCell> ExpandGrid(const std::vector<BenchAxis>& axes) {
  std::vector<BenchCell> cells = {BenchCell{}};
  for (const BenchAxis& axis : axes) {
    std::vector<BenchCell> expanded;
    expanded.reserve(cells.size() * axis.second.size());
    for (const BenchCell& cell : cells) {
      for (const std::string& value : axis.second) {
        BenchCell next = cell;
        next.emplace_back(axis.first, value);
        expanded.push_back(std::move(next));
      }
    }
    cells = std::move(expanded);
  }
  return cells;
}

std::string CellSettings(const BenchCell& cell) {
  std::string settings;
  for (const auto& [key, value] : cell) {
    settings += key + "=" + value + ";";
  }
  return settings;
}

std::string ConfigHash(const std::string& settings) {
  uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : settings) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

BenchReport RunMatrix(const std::string& matrix_path,
                      const std::string& csv_path,
                      const std::string& exe_path,
                      const std::string& work_dir) {
  std::ifstream in(matrix_path);
  if (!in) {
    throw DataError("cannot open matrix file " + matrix_path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::vector<BenchAxis> axes = ParseRunMatrix(buffer.str());

  // Seeds sweep within a cell; everything else identifies the cell.
  std::vector<BenchAxis> cell_axes;
  std::vector<std::string> seeds = {"0"};
  for (const BenchAxis& axis : axes) {
    if (axis.first == "seed") {
      seeds = axis.second;
    } else {
      cell_axes.push_back(axis);
    }
  }

  BenchReport report;
  for (const BenchCell& cell : ExpandGrid(cell_axes)) {
    const std::string settings = CellSettings(cell);
    const std::string hash = ConfigHash(settings);
    std::string data_path;
    for (const auto& [key, value] : cell) {
      if (key == "data") data_path = value;
    }
    if (!fs::exists(data_path)) {
      std::cerr << "bench: dataset " << data_path << " missing, cell " << hash
                << " skipped\n";
      report.attempted += static_cast<int>(seeds.size());
      report.skipped += static_cast<int>(seeds.size());
      continue;
    }

    std::string rows;
    std::vector<double> seed_means;
    for (const std::string& seed : seeds) {
      ++report.attempted;
      const fs::path run_dir = fs::path(work_dir) / hash / ("seed" + seed);
      std::error_code ec;
      fs::create_directories(run_dir, ec);
      if (ec) {
        throw DataError("cannot create run directory " + run_dir.string());
      }
      std::string command = Quoted(exe_path) + " infer";
      for (const auto& [key, value] : cell) {
        if (key == "lax-drop-entropy") {
          if (TruthyFlag(value)) command += " --lax-drop-entropy";
        } else {
          command += " --" + key + " " + Quoted(value);
        }
      }
      command += " --seed " + Quoted(seed);
      command += " --out " + Quoted(run_dir.string());
      command += " > " + Quoted((run_dir / "stdout.log").string());
      command += " 2> " + Quoted((run_dir / "stderr.log").string());

      const int status = std::system(command.c_str());
      const int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
      if (exit_code != 0) {
        std::cerr << "bench: cell " << hash << " seed " << seed
                  << " exited with code " << exit_code << ", row skipped\n";
        ++report.skipped;
        continue;
      }
      const MllNumbers numbers =
          ParseMllReport((run_dir / "mll.txt").string());
      if (!numbers.complete) {
        std::cerr << "bench: cell " << hash << " seed " << seed
                  << " produced no readable mll report, row skipped\n";
        ++report.skipped;
        continue;
      }
      rows += hash + "," + kVersion + "," + seed + "," +
              CsvNumber(numbers.mean) + "," + CsvNumber(numbers.std_dev) +
              "," + std::to_string(numbers.reps) + "," + settings + "\n";
      seed_means.push_back(numbers.mean);
      ++report.completed;
    }

    // Pooled row: mean of per-seed means, std across seeds.
    if (!seed_means.empty()) {
      double sum = 0.0;
      for (double mean : seed_means) sum += mean;
      const double pooled_mean = sum / static_cast<double>(seed_means.size());
      double sq_sum = 0.0;
      for (double mean : seed_means) {
        sq_sum += (mean - pooled_mean) * (mean - pooled_mean);
      }
      const double pooled_std =
          seed_means.size() > 1
              ? std::sqrt(sq_sum / static_cast<double>(seed_means.size() - 1))
              : 0.0;
      rows += hash + "," + kVersion + ",pooled," + CsvNumber(pooled_mean) +
              "," + CsvNumber(pooled_std) + "," +
              std::to_string(seed_means.size()) + "," + settings + "\n";
    }
    if (!rows.empty()) {
      AppendRows(csv_path, rows);
    }
  }
  return report;
}

}  // namespace phylogeo
