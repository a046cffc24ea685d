// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace phylogeo {

// Aligned DNA sequences. Taxon order is the file order and defines tip
// indices everywhere downstream.
struct Alignment {
  std::vector<std::string> taxa;
  std::vector<std::string> rows;

  size_t TaxonCount() const { return taxa.size(); }
  size_t SiteCount() const { return rows.empty() ? 0 : rows[0].size(); }
};

// Site-pattern compression of an alignment: `codes[p]` is the N-vector of
// 4-bit base encodings for distinct column p, `weights[p]` its multiplicity.
struct PatternAlignment {
  size_t tip_count = 0;
  size_t site_count = 0;
  std::vector<std::vector<uint8_t>> codes;
  std::vector<double> weights;

  size_t PatternCount() const { return codes.size(); }
};

using DistanceMatrix = Eigen::MatrixXd;

// 4-bit base encoding: one bit per nucleotide (A=1, C=2, G=4, T=8), IUPAC
// ambiguity codes map to their bit subsets, and gap/'?'/'N' to all four bits.
// Throws DataError on characters outside the alphabet.
uint8_t EncodeBase(char c);

// True when the code has a single bit set, i.e. an unambiguous base.
bool IsUnambiguous(uint8_t code);

Alignment ParseFasta(const std::string& text);
Alignment ParseNexusMatrix(const std::string& text);

// Reads a file and dispatches on content: NEXUS when the file starts with
// "#NEXUS" (case-insensitive), FASTA otherwise.
Alignment ReadAlignmentFile(const std::string& path);

PatternAlignment CompressSitePatterns(const Alignment& alignment);

// Proportion of mismatching sites among sites where both characters are
// unambiguous bases. Throws DataError if some pair has no comparable site.
DistanceMatrix HammingDistanceMatrix(const Alignment& alignment);

}  // namespace phylogeo
