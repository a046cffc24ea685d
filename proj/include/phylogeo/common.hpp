// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace phylogeo {

inline constexpr const char* kVersion = "0.1.0";

// Thrown on contract violations (bad arguments, malformed input, broken
// invariants). The CLI maps subclasses to distinct exit codes.
class PhylogeoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (alignments, tree files, checkpoints).
class DataError : public PhylogeoError {
 public:
  using PhylogeoError::PhylogeoError;
};

// Training aborted (e.g. persistent non-finite gradients).
class TrainingError : public PhylogeoError {
 public:
  using PhylogeoError::PhylogeoError;
};

[[noreturn]] inline void Failwith(const std::string& message) {
  throw PhylogeoError(message);
}

inline void Assert(bool to_evaluate, const std::string& message) {
  if (!to_evaluate) {
    Failwith(message);
  }
}

}  // namespace phylogeo
