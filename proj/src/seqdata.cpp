// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "phylogeo/seqdata.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "phylogeo/common.hpp"

namespace phylogeo {

uint8_t EncodeBase(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'A': return 0x1;
    case 'C': return 0x2;
    case 'G': return 0x4;
    case 'T': return 0x8;
    case 'M': return 0x3;   // A/C
    case 'R': return 0x5;   // A/G
    case 'W': return 0x9;   // A/T
    case 'S': return 0x6;   // C/G
    case 'Y': return 0xA;   // C/T
    case 'K': return 0xC;   // G/T
    case 'V': return 0x7;   // A/C/G
    case 'H': return 0xB;   // A/C/T
    case 'D': return 0xD;   // A/G/T
    case 'B': return 0xE;   // C/G/T
    case 'N':
    case '?':
    case '-': return 0xF;
    default:
      throw DataError(std::string("character '") + c +
                      "' is not a DNA base, IUPAC code, gap, or '?'");
  }
}

bool IsUnambiguous(uint8_t code) {
  return code != 0 && (code & (code - 1)) == 0;
}

namespace {

std::string Trim(const std::string& s) {
  size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

void ValidateRow(const std::string& row, size_t line_number) {
  for (char c : row) {
    try {
      EncodeBase(c);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_number) + ": " + e.what());
    }
  }
}

void FinalizeAlignment(Alignment& alignment) {
  Assert(alignment.taxa.size() >= 3,
         "alignment needs at least 3 taxa, got " +
             std::to_string(alignment.taxa.size()));
  const size_t length = alignment.rows[0].size();
  Assert(length >= 1, "alignment has zero sites");
  std::set<std::string> seen;
  for (size_t i = 0; i < alignment.taxa.size(); ++i) {
    if (alignment.rows[i].size() != length) {
      throw DataError("sequence length mismatch: '" + alignment.taxa[i] +
                      "' has " + std::to_string(alignment.rows[i].size()) +
                      " sites, expected " + std::to_string(length));
    }
    if (!seen.insert(alignment.taxa[i]).second) {
      throw DataError("duplicate taxon name '" + alignment.taxa[i] + "'");
    }
  }
}

}  // namespace

Alignment ParseFasta(const std::string& text) {
  Alignment alignment;
  std::istringstream in(text);
  std::string line;
  size_t line_number = 0;
  size_t current = 0;
  bool have_taxon = false;
  while (std::getline(in, line)) {
    ++line_number;
    line = Trim(line);
    if (line.empty()) continue;
    // Classic FASTA comment lines.
    if (line[0] == ';') continue;
    if (line[0] == '>') {
      std::string name = Trim(line.substr(1));
      if (name.empty()) {
        throw DataError("line " + std::to_string(line_number) +
                        ": empty taxon name");
      }
      alignment.taxa.push_back(name);
      alignment.rows.emplace_back();
      current = alignment.taxa.size() - 1;
      have_taxon = true;
    } else {
      if (!have_taxon) {
        throw DataError("line " + std::to_string(line_number) +
                        ": sequence data before any '>' header");
      }
      ValidateRow(line, line_number);
      std::string upper = line;
      std::transform(upper.begin(), upper.end(), upper.begin(),
                     [](unsigned char c) { return std::toupper(c); });
      alignment.rows[current] += upper;
    }
  }
  if (alignment.taxa.empty()) {
    throw DataError("empty FASTA input");
  }
  FinalizeAlignment(alignment);
  return alignment;
}

namespace {

// Tokenizes NEXUS text outside [] comments into whitespace-separated words,
// keeping ';' and '=' as their own tokens.
std::vector<std::string> NexusTokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  int comment_depth = 0;
  auto flush = [&]() {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (char c : text) {
    if (c == '[') {
      ++comment_depth;
      continue;
    }
    if (c == ']') {
      if (comment_depth > 0) --comment_depth;
      continue;
    }
    if (comment_depth > 0) continue;
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == ';' || c == '=') {
      flush();
      tokens.push_back(std::string(1, c));
    } else {
      current += c;
    }
  }
  flush();
  return tokens;
}

std::string Lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

Alignment ParseNexusMatrix(const std::string& text) {
  const std::vector<std::string> tokens = NexusTokens(text);
  Assert(!tokens.empty() && Lower(tokens[0]) == "#nexus",
         "not a NEXUS file (missing #NEXUS header)");

  size_t declared_ntax = 0;
  size_t declared_nchar = 0;
  size_t matrix_start = 0;
  bool in_data_block = false;
  bool found_matrix = false;
  for (size_t i = 0; i + 1 < tokens.size(); ++i) {
    const std::string word = Lower(tokens[i]);
    if (word == "begin") {
      const std::string block = Lower(tokens[i + 1]);
      in_data_block = (block == "data" || block == "characters");
    } else if (in_data_block && word == "ntax" && tokens[i + 1] == "=") {
      declared_ntax = std::stoul(tokens[i + 2]);
    } else if (in_data_block && word == "nchar" && tokens[i + 1] == "=") {
      declared_nchar = std::stoul(tokens[i + 2]);
    } else if (in_data_block && word == "matrix") {
      matrix_start = i + 1;
      found_matrix = true;
      break;
    }
  }
  if (!found_matrix) {
    throw DataError("NEXUS file has no MATRIX section in a DATA/CHARACTERS block");
  }

  // Interleaved matrices repeat taxon names; chunks are concatenated per
  // taxon in order of first appearance.
  Alignment alignment;
  std::map<std::string, size_t> index_of;
  size_t i = matrix_start;
  while (i < tokens.size() && tokens[i] != ";") {
    const std::string name = tokens[i++];
    std::string chunk;
    while (i < tokens.size() && tokens[i] != ";") {
      bool looks_like_sequence = true;
      for (char c : tokens[i]) {
        try {
          EncodeBase(c);
        } catch (const DataError&) {
          looks_like_sequence = false;
          break;
        }
      }
      // A token that cannot be sequence data starts the next taxon row.
      if (!looks_like_sequence) break;
      // Known taxon name: in interleaved files the next row begins here.
      if (index_of.count(tokens[i]) > 0 && tokens[i] != name) break;
      chunk += tokens[i++];
      // Rows of equal declared length: stop once nchar would be exceeded by
      // treating the next token as more data for this taxon.
      if (declared_nchar > 0) {
        auto it = index_of.find(name);
        const size_t have = it == index_of.end()
                                ? chunk.size()
                                : alignment.rows[it->second].size() + chunk.size();
        if (have >= declared_nchar) break;
      }
    }
    if (chunk.empty()) {
      throw DataError("NEXUS matrix row for '" + name + "' has no sequence data");
    }
    auto [it, inserted] = index_of.try_emplace(name, alignment.taxa.size());
    if (inserted) {
      alignment.taxa.push_back(name);
      alignment.rows.emplace_back();
    }
    std::transform(chunk.begin(), chunk.end(), chunk.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    alignment.rows[it->second] += chunk;
  }

  if (declared_ntax > 0 && alignment.taxa.size() != declared_ntax) {
    throw DataError("NEXUS ntax=" + std::to_string(declared_ntax) + " but " +
                    std::to_string(alignment.taxa.size()) + " taxa parsed");
  }
  for (size_t t = 0; t < alignment.taxa.size(); ++t) {
    if (declared_nchar > 0 && alignment.rows[t].size() != declared_nchar) {
      throw DataError("NEXUS nchar=" + std::to_string(declared_nchar) +
                      " but taxon '" + alignment.taxa[t] + "' has " +
                      std::to_string(alignment.rows[t].size()) + " characters");
    }
  }
  FinalizeAlignment(alignment);
  return alignment;
}

Alignment ReadAlignmentFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open alignment file '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const std::string head = Lower(Trim(text.substr(0, 16)));
  if (head.rfind("#nexus", 0) == 0) {
    return ParseNexusMatrix(text);
  }
  return ParseFasta(text);
}

PatternAlignment CompressSitePatterns(const Alignment& alignment) {
  const size_t tip_count = alignment.TaxonCount();
  const size_t site_count = alignment.SiteCount();
  PatternAlignment result;
  result.tip_count = tip_count;
  result.site_count = site_count;
  std::map<std::vector<uint8_t>, size_t> pattern_index;
  for (size_t m = 0; m < site_count; ++m) {
    std::vector<uint8_t> column(tip_count);
    for (size_t t = 0; t < tip_count; ++t) {
      column[t] = EncodeBase(alignment.rows[t][m]);
    }
    auto [it, inserted] = pattern_index.try_emplace(column, result.codes.size());
    if (inserted) {
      result.codes.push_back(std::move(column));
      result.weights.push_back(0.0);
    }
    result.weights[it->second] += 1.0;
  }
  return result;
}

DistanceMatrix HammingDistanceMatrix(const Alignment& alignment) {
  const size_t n = alignment.TaxonCount();
  const size_t m = alignment.SiteCount();
  DistanceMatrix distances = DistanceMatrix::Zero(n, n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      size_t comparable = 0;
      size_t mismatches = 0;
      for (size_t s = 0; s < m; ++s) {
        const uint8_t a = EncodeBase(alignment.rows[i][s]);
        const uint8_t b = EncodeBase(alignment.rows[j][s]);
        if (!IsUnambiguous(a) || !IsUnambiguous(b)) continue;
        ++comparable;
        if (a != b) ++mismatches;
      }
      if (comparable == 0) {
        throw DataError("taxa '" + alignment.taxa[i] + "' and '" +
                        alignment.taxa[j] + "' share no unambiguous sites");
      }
      distances(i, j) = distances(j, i) =
          static_cast<double>(mismatches) / static_cast<double>(comparable);
    }
  }
  return distances;
}

}  // namespace phylogeo
