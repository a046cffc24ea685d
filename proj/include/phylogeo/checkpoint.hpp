// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phylogeo/decoder.hpp"
#include "phylogeo/surrogate.hpp"
#include "phylogeo/variational.hpp"

// Versioned JSON checkpoints holding the full variational state: the tip
// coordinate family, theta/psi parameter vectors, the split-indexed branch
// model as (bitset-hex, m, log sigma) triples, and the surrogate when one
// was trained. Taxa travel with the state so later commands can validate
// that a checkpoint matches their data.

namespace phylogeo {

// Everything the variational posterior consists of. The surrogate is present
// only for runs trained with a LAX-family estimator.
struct VariationalState {
  TipDistSpec spec;
  std::vector<std::string> taxa;
  LinkMethod link;
  TipDistributionSet q_theta;
  SplitBranchModel q_phi;
  TipDistributionSet r_psi;
  std::optional<Surrogate> surrogate;

  VariationalState(const TipDistSpec& spec_in,
                   std::vector<std::string> taxa_in, LinkMethod link_in,
                   double default_m = kDefaultBranchM,
                   double default_log_sigma = kDefaultBranchLogSigma);

  int TipCount() const { return static_cast<int>(taxa.size()); }
  void AddSurrogate(int hidden_multiplier, uint64_t seed);
};

// Run bookkeeping carried alongside the state, informational on reload.
struct TrainingMeta {
  uint64_t step = 0;
  int64_t nle_count = 0;
  double beta = 1.0;
  double lr = 0.0;
  std::string estimator = "loo";
  int sample_count = 1;
  uint64_t seed = 0;
};

struct Checkpoint {
  VariationalState state;
  TrainingMeta meta;
};

std::string SerializeCheckpoint(const VariationalState& state,
                                const TrainingMeta& meta);
// Throws DataError on malformed or inconsistent input.
Checkpoint DeserializeCheckpoint(const std::string& text);

void WriteCheckpointFile(const std::string& path,
                         const VariationalState& state,
                         const TrainingMeta& meta);
Checkpoint ReadCheckpointFile(const std::string& path);

// Flag and checkpoint spellings of the enum configuration axes.
Space ParseSpace(const std::string& name);
std::string SpaceName(Space space);
CovType ParseCovType(const std::string& name);
std::string CovTypeName(CovType cov);
LinkMethod ParseLinkMethod(const std::string& name);
std::string LinkMethodName(LinkMethod link);

}  // namespace phylogeo
