// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "phylogeo/tree.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <deque>
#include <map>
#include <sstream>

#include "phylogeo/common.hpp"

namespace phylogeo {

Split::Split(size_t tip_count)
    : tip_count_(tip_count), words_((tip_count + 63) / 64, 0) {
  Assert(tip_count >= 1, "Split needs at least one tip");
}

void Split::Set(size_t tip) {
  Assert(tip < tip_count_, "Split::Set tip out of range");
  words_[tip / 64] |= (uint64_t{1} << (tip % 64));
}

bool Split::Test(size_t tip) const {
  Assert(tip < tip_count_, "Split::Test tip out of range");
  return (words_[tip / 64] >> (tip % 64)) & 1;
}

size_t Split::Count() const {
  size_t count = 0;
  for (uint64_t word : words_) count += std::popcount(word);
  return count;
}

void Split::Canonicalize() {
  if (!Test(0)) return;
  for (auto& word : words_) word = ~word;
  // Clear padding bits above tip_count_.
  const size_t tail = tip_count_ % 64;
  if (tail != 0) words_.back() &= (uint64_t{1} << tail) - 1;
}

bool Split::ContainsAll(const Split& other) const {
  for (size_t w = 0; w < words_.size(); ++w) {
    if ((other.words_[w] & ~words_[w]) != 0) return false;
  }
  return true;
}

bool Split::DisjointFrom(const Split& other) const {
  for (size_t w = 0; w < words_.size(); ++w) {
    if ((words_[w] & other.words_[w]) != 0) return false;
  }
  return true;
}

bool Split::CompatibleWith(const Split& other) const {
  // Both sides exclude tip 0, so the fourth intersection (both complements)
  // is always nonempty and nesting or disjointness is the whole test.
  return DisjointFrom(other) || ContainsAll(other) || other.ContainsAll(*this);
}

void Split::UnionWith(const Split& other) {
  Assert(tip_count_ == other.tip_count_, "Split::UnionWith tip count mismatch");
  for (size_t w = 0; w < words_.size(); ++w) words_[w] |= other.words_[w];
}

size_t Split::LowestSetTip() const {
  for (size_t w = 0; w < words_.size(); ++w) {
    if (words_[w] != 0) return 64 * w + std::countr_zero(words_[w]);
  }
  Failwith("LowestSetTip on empty split");
}

std::string Split::ToHex() const {
  const size_t digits = (tip_count_ + 3) / 4;
  std::string out(digits, '0');
  for (size_t d = 0; d < digits; ++d) {
    const size_t bit = 4 * d;
    const uint64_t nibble = (words_[bit / 64] >> (bit % 64)) & 0xF;
    out[digits - 1 - d] = "0123456789abcdef"[nibble];
  }
  return out;
}

Split Split::FromHex(const std::string& hex, size_t tip_count) {
  Split split(tip_count);
  Assert(hex.size() == (tip_count + 3) / 4,
         "split hex string has wrong length for tip count");
  for (size_t d = 0; d < hex.size(); ++d) {
    const char c = hex[hex.size() - 1 - d];
    uint64_t nibble = 0;
    if (c >= '0' && c <= '9') nibble = c - '0';
    else if (c >= 'a' && c <= 'f') nibble = 10 + (c - 'a');
    else if (c >= 'A' && c <= 'F') nibble = 10 + (c - 'A');
    else Failwith("invalid hex digit in split string");
    split.words_[(4 * d) / 64] |= nibble << ((4 * d) % 64);
  }
  return split;
}

bool Split::operator<(const Split& other) const {
  Assert(tip_count_ == other.tip_count_, "Split comparison tip count mismatch");
  for (size_t w = words_.size(); w-- > 0;) {
    if (words_[w] != other.words_[w]) return words_[w] < other.words_[w];
  }
  return false;
}

Topology::Topology(size_t tip_count, std::vector<std::pair<int, int>> edges)
    : tip_count_(tip_count), edges_(std::move(edges)) {
  Assert(tip_count_ >= 3, "topology needs at least 3 tips");
  const size_t node_count = NodeCount();
  Assert(edges_.size() == 2 * tip_count_ - 3,
         "unrooted binary tree on " + std::to_string(tip_count_) +
             " tips needs " + std::to_string(2 * tip_count_ - 3) + " edges, got " +
             std::to_string(edges_.size()));
  adjacency_.assign(node_count, {});
  for (size_t e = 0; e < edges_.size(); ++e) {
    const auto [u, v] = edges_[e];
    Assert(u >= 0 && v >= 0 && static_cast<size_t>(u) < node_count &&
               static_cast<size_t>(v) < node_count && u != v,
           "edge endpoints out of range");
    adjacency_[u].emplace_back(v, static_cast<int>(e));
    adjacency_[v].emplace_back(u, static_cast<int>(e));
  }
  for (size_t node = 0; node < node_count; ++node) {
    const size_t expected = node < tip_count_ ? 1 : 3;
    if (adjacency_[node].size() != expected) {
      Failwith("node " + std::to_string(node) + " has degree " +
               std::to_string(adjacency_[node].size()) + ", expected " +
               std::to_string(expected) + " (non-binary or disconnected tree)");
    }
  }
  // Connectivity: with correct degrees and edge count, reaching every node
  // from node 0 is the remaining acyclicity check.
  std::vector<bool> seen(node_count, false);
  std::deque<int> queue = {0};
  seen[0] = true;
  size_t reached = 1;
  while (!queue.empty()) {
    const int node = queue.front();
    queue.pop_front();
    for (const auto& [neighbor, edge] : adjacency_[node]) {
      if (!seen[neighbor]) {
        seen[neighbor] = true;
        ++reached;
        queue.push_back(neighbor);
      }
    }
  }
  Assert(reached == node_count, "tree is disconnected");
}

std::vector<Split> Topology::EdgeSplits() const {
  // Root at tip 0: each edge's canonical side is the subtree away from it.
  const size_t node_count = NodeCount();
  std::vector<int> parent_edge(node_count, -1);
  std::vector<int> order;
  order.reserve(node_count);
  std::vector<bool> seen(node_count, false);
  std::deque<int> queue = {0};
  seen[0] = true;
  while (!queue.empty()) {
    const int node = queue.front();
    queue.pop_front();
    order.push_back(node);
    for (const auto& [neighbor, edge] : adjacency_[node]) {
      if (!seen[neighbor]) {
        seen[neighbor] = true;
        parent_edge[neighbor] = edge;
        queue.push_back(neighbor);
      }
    }
  }
  std::vector<Split> below(node_count, Split(tip_count_));
  for (size_t t = 0; t < tip_count_; ++t) below[t].Set(t);
  std::vector<Split> result(EdgeCount(), Split(tip_count_));
  for (size_t i = order.size(); i-- > 1;) {
    const int node = order[i];
    const int edge = parent_edge[node];
    result[edge] = below[node];
    const auto [u, v] = edges_[edge];
    const int parent = (u == node) ? v : u;
    below[parent].UnionWith(below[node]);
  }
  return result;
}

std::vector<Split> Topology::NontrivialSplits() const {
  std::vector<Split> result;
  for (const Split& split : EdgeSplits()) {
    if (!split.IsTrivial()) result.push_back(split);
  }
  std::sort(result.begin(), result.end());
  return result;
}

bool Topology::operator==(const Topology& other) const {
  return tip_count_ == other.tip_count_ &&
         NontrivialSplits() == other.NontrivialSplits();
}

std::vector<Split> NontrivialSplits(const Topology& topology) {
  return topology.NontrivialSplits();
}

namespace {

struct ParserNode {
  std::string label;
  std::vector<size_t> children;
  double length = 0.0;
  bool has_length = false;
};

class NewickParser {
 public:
  explicit NewickParser(const std::string& text) : text_(text) {}

  size_t ParseTree() {
    const size_t root = ParseClade();
    SkipSpace();
    if (pos_ >= text_.size() || text_[pos_] != ';') {
      Fail("expected ';' at end of tree");
    }
    ++pos_;
    SkipSpace();
    if (pos_ != text_.size()) {
      Fail("trailing text after ';'");
    }
    return root;
  }

  std::vector<ParserNode> nodes;

 private:
  void SkipSpace() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  [[noreturn]] void Fail(const std::string& message) {
    throw DataError("Newick parse error at position " + std::to_string(pos_) +
                    ": " + message);
  }

  size_t ParseClade() {
    SkipSpace();
    const size_t index = nodes.size();
    nodes.emplace_back();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      while (true) {
        const size_t child = ParseClade();
        nodes[index].children.push_back(child);
        SkipSpace();
        if (pos_ >= text_.size()) Fail("unterminated '('");
        if (text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        Fail("expected ',' or ')'");
      }
      if (nodes[index].children.size() < 2) {
        Fail("clade with a single child");
      }
    }
    SkipSpace();
    // Optional label (internal labels are parsed and ignored for topology).
    std::string label;
    while (pos_ < text_.size() &&
           text_.find_first_of("(),:;", pos_) != pos_ &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      label += text_[pos_++];
    }
    nodes[index].label = label;
    SkipSpace();
    if (pos_ < text_.size() && text_[pos_] == ':') {
      ++pos_;
      SkipSpace();
      size_t consumed = 0;
      try {
        nodes[index].length = std::stod(text_.substr(pos_), &consumed);
      } catch (const std::exception&) {
        Fail("malformed branch length");
      }
      nodes[index].has_length = true;
      pos_ += consumed;
    }
    if (nodes[index].children.empty() && nodes[index].label.empty()) {
      Fail("leaf with empty label");
    }
    return index;
  }

  const std::string& text_;
  size_t pos_ = 0;
};

NewickTree BuildFromParse(std::vector<ParserNode>& nodes, size_t root,
                          const std::vector<std::string>* reference_taxa) {
  // Collect leaves in text order and assign tip indices.
  std::vector<size_t> leaf_parse_order;
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].children.empty()) leaf_parse_order.push_back(i);
  }
  const size_t tip_count = leaf_parse_order.size();
  Assert(tip_count >= 3, "tree needs at least 3 tips");

  std::vector<std::string> taxa;
  std::map<std::string, int> tip_index;
  if (reference_taxa != nullptr) {
    taxa = *reference_taxa;
    for (size_t i = 0; i < taxa.size(); ++i) {
      tip_index[taxa[i]] = static_cast<int>(i);
    }
    if (tip_count != taxa.size()) {
      throw DataError("tree has " + std::to_string(tip_count) +
                      " tips but reference has " + std::to_string(taxa.size()));
    }
  } else {
    for (size_t leaf : leaf_parse_order) {
      const auto [it, inserted] =
          tip_index.try_emplace(nodes[leaf].label, static_cast<int>(taxa.size()));
      if (inserted) taxa.push_back(nodes[leaf].label);
    }
  }

  std::vector<int> node_id(nodes.size(), -1);
  std::vector<bool> leaf_seen(tip_count, false);
  for (size_t leaf : leaf_parse_order) {
    const auto it = tip_index.find(nodes[leaf].label);
    if (it == tip_index.end()) {
      throw DataError("unknown taxon label '" + nodes[leaf].label + "'");
    }
    if (leaf_seen[it->second]) {
      throw DataError("duplicate taxon label '" + nodes[leaf].label + "'");
    }
    leaf_seen[it->second] = true;
    node_id[leaf] = it->second;
  }

  // Suppress a degree-2 root by joining its two children; the merged edge
  // carries the sum of lengths when both halves have one.
  struct RawEdge {
    size_t a, b;  // parse-node indices
    double length;
    bool has_length;
  };
  std::vector<RawEdge> raw_edges;
  std::deque<size_t> stack = {root};
  while (!stack.empty()) {
    const size_t node = stack.front();
    stack.pop_front();
    for (size_t child : nodes[node].children) {
      if (!(node == root && nodes[root].children.size() == 2)) {
        raw_edges.push_back(
            {node, child, nodes[child].length, nodes[child].has_length});
      }
      stack.push_back(child);
    }
  }
  if (nodes[root].children.size() == 2) {
    const size_t c1 = nodes[root].children[0];
    const size_t c2 = nodes[root].children[1];
    const bool both = nodes[c1].has_length && nodes[c2].has_length;
    raw_edges.push_back({c1, c2, nodes[c1].length + nodes[c2].length, both});
  }
  // Lengths must be positive wherever they appear; a length on the root
  // node itself is not an edge and is ignored.
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (i != root && nodes[i].has_length && !(nodes[i].length > 0.0)) {
      throw DataError("non-positive branch length in Newick input");
    }
  }

  // Number internal parse nodes (skipping a suppressed root) after the tips.
  int next_internal = static_cast<int>(tip_count);
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].children.empty()) continue;
    if (i == root && nodes[root].children.size() == 2) continue;
    node_id[i] = next_internal++;
  }

  std::vector<std::pair<int, int>> edges;
  BranchLengths lengths;
  bool all_lengths = true;
  for (const RawEdge& edge : raw_edges) {
    edges.emplace_back(node_id[edge.a], node_id[edge.b]);
    lengths.push_back(edge.length);
    all_lengths = all_lengths && edge.has_length;
  }

  std::optional<Topology> topology;
  try {
    topology.emplace(tip_count, std::move(edges));
  } catch (const PhylogeoError& e) {
    throw DataError(std::string("invalid Newick tree: ") + e.what());
  }
  NewickTree result{std::move(*topology), std::nullopt, std::move(taxa)};
  if (all_lengths && !raw_edges.empty()) {
    result.lengths = std::move(lengths);
  }
  return result;
}

}  // namespace

NewickTree ParseNewick(const std::string& text) {
  NewickParser parser(text);
  const size_t root = parser.ParseTree();
  return BuildFromParse(parser.nodes, root, nullptr);
}

NewickTree ParseNewick(const std::string& text,
                       const std::vector<std::string>& reference_taxa) {
  NewickParser parser(text);
  const size_t root = parser.ParseTree();
  return BuildFromParse(parser.nodes, root, &reference_taxa);
}

namespace {

SplitTree SplitsFromParse(std::vector<ParserNode>& nodes, size_t root,
                          const std::vector<std::string>* reference_taxa) {
  std::vector<size_t> leaf_parse_order;
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].children.empty()) leaf_parse_order.push_back(i);
  }
  const size_t tip_count = leaf_parse_order.size();
  if (tip_count < 3) {
    throw DataError("tree needs at least 3 tips");
  }

  std::vector<std::string> taxa;
  std::map<std::string, int> tip_index;
  if (reference_taxa != nullptr) {
    taxa = *reference_taxa;
    for (size_t i = 0; i < taxa.size(); ++i) {
      tip_index[taxa[i]] = static_cast<int>(i);
    }
    if (tip_count != taxa.size()) {
      throw DataError("tree has " + std::to_string(tip_count) +
                      " tips but reference has " + std::to_string(taxa.size()));
    }
  } else {
    for (size_t leaf : leaf_parse_order) {
      const auto [it, inserted] = tip_index.try_emplace(
          nodes[leaf].label, static_cast<int>(taxa.size()));
      if (inserted) taxa.push_back(nodes[leaf].label);
    }
  }

  std::vector<bool> leaf_seen(tip_count, false);
  std::vector<Split> below(nodes.size(), Split(tip_count));
  for (size_t leaf : leaf_parse_order) {
    const auto it = tip_index.find(nodes[leaf].label);
    if (it == tip_index.end()) {
      throw DataError("unknown taxon label '" + nodes[leaf].label + "'");
    }
    if (leaf_seen[it->second]) {
      throw DataError("duplicate taxon label '" + nodes[leaf].label + "'");
    }
    leaf_seen[it->second] = true;
    below[leaf].Set(static_cast<size_t>(it->second));
  }
  // Children carry larger parse indices than their parent, so one reverse
  // sweep accumulates every clade's tip set.
  for (size_t i = nodes.size(); i-- > 0;) {
    for (size_t child : nodes[i].children) {
      below[i].UnionWith(below[child]);
    }
  }

  std::vector<Split> splits;
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (i == root || nodes[i].children.empty()) continue;
    Split split = below[i];
    split.Canonicalize();
    if (!split.IsTrivial()) splits.push_back(split);
  }
  // A suppressed degree-2 root contributes the same split from both sides.
  std::sort(splits.begin(), splits.end());
  splits.erase(std::unique(splits.begin(), splits.end()), splits.end());
  return SplitTree{tip_count, std::move(splits), std::move(taxa)};
}

}  // namespace

SplitTree ParseNewickSplits(const std::string& text) {
  NewickParser parser(text);
  const size_t root = parser.ParseTree();
  return SplitsFromParse(parser.nodes, root, nullptr);
}

SplitTree ParseNewickSplits(const std::string& text,
                            const std::vector<std::string>& reference_taxa) {
  NewickParser parser(text);
  const size_t root = parser.ParseTree();
  return SplitsFromParse(parser.nodes, root, &reference_taxa);
}

namespace {

std::string FormatLength(double length) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.12f", length);
  return buffer;
}

struct RenderResult {
  std::string text;
  size_t smallest_tip;
};

RenderResult RenderSubtree(const Topology& topology,
                           const std::vector<std::string>& taxa,
                           const BranchLengths* lengths, int node, int parent) {
  if (static_cast<size_t>(node) < topology.TipCount()) {
    return {taxa[node], static_cast<size_t>(node)};
  }
  std::vector<std::pair<RenderResult, int>> children;
  for (const auto& [neighbor, edge] : topology.Adjacency()[node]) {
    if (neighbor == parent) continue;
    RenderResult sub = RenderSubtree(topology, taxa, lengths, neighbor, node);
    if (lengths != nullptr) {
      sub.text += ":" + FormatLength((*lengths)[edge]);
    }
    children.emplace_back(std::move(sub), edge);
  }
  std::sort(children.begin(), children.end(),
            [](const auto& a, const auto& b) {
              return a.first.smallest_tip < b.first.smallest_tip;
            });
  std::string text = "(";
  size_t smallest = topology.TipCount();
  for (size_t i = 0; i < children.size(); ++i) {
    if (i > 0) text += ",";
    text += children[i].first.text;
    smallest = std::min(smallest, children[i].first.smallest_tip);
  }
  text += ")";
  return {text, smallest};
}

}  // namespace

std::string WriteNewick(const Topology& topology,
                        const std::vector<std::string>& taxa,
                        const BranchLengths* lengths) {
  Assert(taxa.size() == topology.TipCount(),
         "taxa list does not match tip count");
  if (lengths != nullptr) {
    Assert(lengths->size() == topology.EdgeCount(),
           "branch lengths do not cover the edges");
  }
  // Render from the internal node adjacent to tip 0, so tip 0 leads.
  const int root = topology.Adjacency()[0][0].first;
  return RenderSubtree(topology, taxa, lengths, root, -1).text + ";";
}

std::vector<NewickTree> ParseNewickLines(const std::string& text) {
  std::vector<NewickTree> trees;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    if (trees.empty()) {
      trees.push_back(ParseNewick(line));
    } else {
      trees.push_back(ParseNewick(line, trees[0].taxa));
    }
  }
  Assert(!trees.empty(), "no trees in input");
  return trees;
}

size_t RfDistance(const std::vector<Split>& s1, const std::vector<Split>& s2) {
  // Both inputs sorted; count the symmetric difference with a merge walk.
  size_t difference = 0;
  size_t i = 0, j = 0;
  while (i < s1.size() && j < s2.size()) {
    if (s1[i] == s2[j]) {
      ++i;
      ++j;
    } else if (s1[i] < s2[j]) {
      ++difference;
      ++i;
    } else {
      ++difference;
      ++j;
    }
  }
  return difference + (s1.size() - i) + (s2.size() - j);
}

size_t RfDistance(const Topology& t1, const Topology& t2) {
  Assert(t1.TipCount() == t2.TipCount(), "RF distance needs a common taxon set");
  return RfDistance(t1.NontrivialSplits(), t2.NontrivialSplits());
}

ConsensusTree MajorityConsensus(const std::vector<Topology>& samples) {
  Assert(!samples.empty(), "consensus of zero samples");
  const size_t tip_count = samples[0].TipCount();
  std::map<Split, size_t> counts;
  for (const Topology& sample : samples) {
    Assert(sample.TipCount() == tip_count, "consensus taxon set mismatch");
    for (const Split& split : sample.NontrivialSplits()) {
      ++counts[split];
    }
  }
  ConsensusTree consensus;
  consensus.tip_count = tip_count;
  for (const auto& [split, count] : counts) {
    if (2 * count > samples.size()) {
      consensus.splits.push_back(split);
      consensus.frequencies.push_back(static_cast<double>(count) /
                                      static_cast<double>(samples.size()));
    }
  }
  return consensus;
}

std::string ConsensusTree::ToNewick(const std::vector<std::string>& taxa) const {
  Assert(taxa.size() == tip_count, "taxa list does not match tip count");
  // Order splits by size so each split's parent (smallest strict superset)
  // appears later; index -1 is the root cluster of all tips.
  std::vector<int> by_size(splits.size());
  for (size_t i = 0; i < splits.size(); ++i) by_size[i] = static_cast<int>(i);
  std::sort(by_size.begin(), by_size.end(), [&](int a, int b) {
    return splits[a].Count() < splits[b].Count();
  });
  std::vector<int> parent(splits.size(), -1);
  for (size_t a = 0; a < by_size.size(); ++a) {
    for (size_t b = a + 1; b < by_size.size(); ++b) {
      if (splits[by_size[b]].ContainsAll(splits[by_size[a]]) &&
          splits[by_size[b]].Count() > splits[by_size[a]].Count()) {
        parent[by_size[a]] = by_size[b];
        break;
      }
    }
  }
  // +1 shifts the root cluster to slot 0.
  std::vector<std::vector<int>> split_children(splits.size() + 1);
  for (size_t i = 0; i < splits.size(); ++i) {
    split_children[parent[i] + 1].push_back(static_cast<int>(i));
  }
  std::vector<std::vector<size_t>> split_tips(splits.size() + 1);
  for (size_t tip = 0; tip < tip_count; ++tip) {
    int owner = -1;
    size_t owner_size = tip_count + 1;
    for (size_t i = 0; i < splits.size(); ++i) {
      if (splits[i].Test(tip) && splits[i].Count() < owner_size) {
        owner = static_cast<int>(i);
        owner_size = splits[i].Count();
      }
    }
    split_tips[owner + 1].push_back(tip);
  }
  // Recursive render over cluster slots, where slot s > 0 is split s-1.
  struct Rendered {
    std::string text;
    size_t smallest_tip;
  };
  auto render = [&](auto&& self, int slot) -> Rendered {
    std::vector<Rendered> parts;
    for (int child : split_children[slot]) {
      parts.push_back(self(self, child + 1));
    }
    for (size_t tip : split_tips[slot]) {
      parts.push_back({taxa[tip], tip});
    }
    Assert(!parts.empty(), "empty cluster in consensus rendering");
    std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) {
      return a.smallest_tip < b.smallest_tip;
    });
    std::string text = "(";
    for (size_t i = 0; i < parts.size(); ++i) {
      if (i > 0) text += ",";
      text += parts[i].text;
    }
    text += ")";
    return {text, parts.front().smallest_tip};
  };
  return render(render, 0).text + ";";
}

std::vector<std::pair<Split, double>> BipartitionFrequencies(
    const std::vector<Topology>& samples) {
  Assert(!samples.empty(), "bipartition frequencies of zero samples");
  std::map<Split, size_t> counts;
  for (const Topology& sample : samples) {
    for (const Split& split : sample.NontrivialSplits()) {
      ++counts[split];
    }
  }
  std::vector<std::pair<Split, double>> result;
  result.reserve(counts.size());
  for (const auto& [split, count] : counts) {
    result.emplace_back(split, static_cast<double>(count) /
                                   static_cast<double>(samples.size()));
  }
  std::sort(result.begin(), result.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return result;
}

double SimpsonDiversity(const std::vector<Topology>& samples) {
  Assert(!samples.empty(), "Simpson diversity of zero samples");
  std::map<std::vector<Split>, size_t> counts;
  for (const Topology& sample : samples) {
    ++counts[sample.NontrivialSplits()];
  }
  double sum_squared = 0.0;
  const double total = static_cast<double>(samples.size());
  for (const auto& [identity, count] : counts) {
    const double p = static_cast<double>(count) / total;
    sum_squared += p * p;
  }
  return 1.0 - sum_squared;
}

}  // namespace phylogeo
