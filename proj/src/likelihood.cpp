// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "phylogeo/likelihood.hpp"

#include <cmath>

#include "phylogeo/common.hpp"
#include "phylogeo/rng.hpp"

namespace phylogeo {

namespace {

constexpr double kScaleThreshold = 1e-280;

// JC69 is two-valued; carry the pair instead of the full matrix internally.
struct Jc69Pair {
  double diag;
  double off;
};

Jc69Pair Jc69Values(double t) {
  Assert(t >= 0.0, "negative branch length in transition matrix");
  const double decay = std::exp(-4.0 * t / 3.0);
  return {0.25 + 0.75 * decay, 0.25 - 0.25 * decay};
}

Jc69Pair Jc69Derivative(double t) {
  const double decay = std::exp(-4.0 * t / 3.0);
  return {-decay, decay / 3.0};
}

// y = P x columnwise for the two-valued matrix: P x = off * sum(x) + (diag - off) * x.
void ApplyTwoValued(const Jc69Pair& p, const Eigen::MatrixXd& x,
                    Eigen::MatrixXd& y) {
  const Eigen::RowVectorXd column_sums = x.colwise().sum();
  y = (p.diag - p.off) * x;
  y.rowwise() += p.off * column_sums;
}

}  // namespace

Eigen::Matrix4d Jc69Transition(double t) {
  const Jc69Pair p = Jc69Values(t);
  Eigen::Matrix4d m = Eigen::Matrix4d::Constant(p.off);
  m.diagonal().setConstant(p.diag);
  return m;
}

double LogOddDoubleFactorial(int n) {
  Assert(n % 2 == 1 && n >= 1, "odd double factorial needs odd n >= 1");
  double total = 0.0;
  for (int k = 3; k <= n; k += 2) total += std::log(static_cast<double>(k));
  return total;
}

double LogPrior(const Topology& topology, const BranchLengths& lengths) {
  Assert(lengths.size() == topology.EdgeCount(),
         "branch length count does not match edge count");
  const int tips = static_cast<int>(topology.TipCount());
  double log_prob = -LogOddDoubleFactorial(2 * tips - 5);
  for (const double b : lengths) {
    log_prob += std::log(10.0) - 10.0 * b;
  }
  return log_prob;
}

Alignment SimulateAlignment(const Topology& topology,
                            const BranchLengths& lengths,
                            const std::vector<std::string>& taxa,
                            size_t site_count, uint64_t seed) {
  const size_t tips = topology.TipCount();
  Assert(taxa.size() == tips, "taxon list does not match tip count");
  Assert(lengths.size() == topology.EdgeCount(), "branch lengths incomplete");
  Assert(site_count >= 1, "need at least one site");

  // Direct the tree away from the internal node next to tip 0.
  const auto& adjacency = topology.Adjacency();
  const int root = adjacency[0][0].first;
  const size_t nodes = topology.NodeCount();
  std::vector<int> order, parent(nodes, -1), parent_edge(nodes, -1);
  order.reserve(nodes);
  order.push_back(root);
  for (size_t head = 0; head < order.size(); ++head) {
    const int at = order[head];
    for (const auto& [neighbor, edge] : adjacency[at]) {
      if (neighbor == parent[at]) continue;
      parent[neighbor] = at;
      parent_edge[neighbor] = edge;
      order.push_back(neighbor);
    }
  }
  parent[root] = root;

  static const char kBases[4] = {'A', 'C', 'G', 'T'};
  Alignment alignment;
  alignment.taxa = taxa;
  alignment.rows.assign(tips, std::string(site_count, 'A'));
  std::vector<int> state(nodes, 0);
  for (size_t site = 0; site < site_count; ++site) {
    for (const int node : order) {
      CounterRng rng(seed, site, static_cast<uint64_t>(node),
                     RngStream::kSimulate);
      const double u = rng.NextUnit();
      if (node == root) {
        state[node] = std::min(3, static_cast<int>(u * 4.0));
      } else {
        const Jc69Pair p = Jc69Values(lengths[parent_edge[node]]);
        const int from = state[parent[node]];
        // Inverse-CDF over the row (from -> {A,C,G,T}).
        double cumulative = 0.0;
        int drawn = 3;
        for (int to = 0; to < 4; ++to) {
          cumulative += (to == from) ? p.diag : p.off;
          if (u <= cumulative) {
            drawn = to;
            break;
          }
        }
        state[node] = drawn;
      }
      if (static_cast<size_t>(node) < tips) {
        alignment.rows[node][site] = kBases[state[node]];
      }
    }
  }
  return alignment;
}

// Directed traversal state shared by the two passes.
struct PruningEngine::Traversal {
  int root = -1;
  std::vector<int> order;        // breadth-first from the root
  std::vector<int> parent;       // -1 convention replaced by root itself
  std::vector<int> parent_edge;  // edge to the parent, -1 at the root
  std::vector<std::vector<int>> children;
  // Downward partials, per node 4xP, with per-pattern log scale factors.
  std::vector<Eigen::MatrixXd> partial;
  std::vector<Eigen::VectorXd> partial_scale;
  // Cached child messages P(b_e) * partial, keyed by the child node.
  std::vector<Eigen::MatrixXd> message;
};

PruningEngine::PruningEngine(PatternAlignment patterns)
    : patterns_(std::move(patterns)) {
  Assert(patterns_.tip_count >= 3, "need at least 3 sequences");
  const int p = static_cast<int>(patterns_.PatternCount());
  tip_partials_.reserve(patterns_.tip_count);
  for (size_t tip = 0; tip < patterns_.tip_count; ++tip) {
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(4, p);
    for (int pattern = 0; pattern < p; ++pattern) {
      const uint8_t code = patterns_.codes[pattern][tip];
      for (int base = 0; base < 4; ++base) {
        if (code & (1 << base)) block(base, pattern) = 1.0;
      }
    }
    tip_partials_.push_back(std::move(block));
  }
}

void PruningEngine::DownwardPass(const Topology& topology,
                                 const BranchLengths& lengths,
                                 Traversal& traversal,
                                 int root_override) const {
  Assert(topology.TipCount() == patterns_.tip_count,
         "alignment and topology tip counts differ");
  Assert(lengths.size() == topology.EdgeCount(), "branch lengths incomplete");
  const size_t nodes = topology.NodeCount();
  const size_t tips = topology.TipCount();
  const int p = static_cast<int>(patterns_.PatternCount());
  const auto& adjacency = topology.Adjacency();

  if (root_override >= 0) {
    Assert(static_cast<size_t>(root_override) >= tips &&
               static_cast<size_t>(root_override) < nodes,
           "virtual root must be an internal node");
    traversal.root = root_override;
  } else {
    traversal.root = adjacency[0][0].first;
  }
  traversal.order.clear();
  traversal.order.reserve(nodes);
  traversal.parent.assign(nodes, -1);
  traversal.parent_edge.assign(nodes, -1);
  traversal.children.assign(nodes, {});
  traversal.order.push_back(traversal.root);
  for (size_t head = 0; head < traversal.order.size(); ++head) {
    const int at = traversal.order[head];
    for (const auto& [neighbor, edge] : adjacency[at]) {
      if (neighbor == traversal.parent[at]) continue;
      traversal.parent[neighbor] = at;
      traversal.parent_edge[neighbor] = edge;
      traversal.children[at].push_back(neighbor);
      traversal.order.push_back(neighbor);
    }
  }
  traversal.parent[traversal.root] = traversal.root;

  traversal.partial.assign(nodes, Eigen::MatrixXd());
  traversal.partial_scale.assign(nodes, Eigen::VectorXd());
  traversal.message.assign(nodes, Eigen::MatrixXd());

  // Post-order: children appear after their parent in breadth-first order.
  for (auto it = traversal.order.rbegin(); it != traversal.order.rend(); ++it) {
    const int node = *it;
    if (static_cast<size_t>(node) < tips) {
      traversal.partial[node] = tip_partials_[node];
      traversal.partial_scale[node] = Eigen::VectorXd::Zero(p);
      continue;
    }
    Eigen::MatrixXd combined = Eigen::MatrixXd::Ones(4, p);
    Eigen::VectorXd scale = Eigen::VectorXd::Zero(p);
    for (const int child : traversal.children[node]) {
      const Jc69Pair transition =
          Jc69Values(lengths[traversal.parent_edge[child]]);
      ApplyTwoValued(transition, traversal.partial[child],
                     traversal.message[child]);
      combined.array() *= traversal.message[child].array();
      scale += traversal.partial_scale[child];
    }
    for (int pattern = 0; pattern < p; ++pattern) {
      const double top = combined.col(pattern).maxCoeff();
      if (top > 0.0 && top < kScaleThreshold) {
        combined.col(pattern) /= top;
        scale(pattern) += std::log(top);
      }
    }
    traversal.partial[node] = std::move(combined);
    traversal.partial_scale[node] = std::move(scale);
  }
}

double PruningEngine::LogLikelihood(const Topology& topology,
                                    const BranchLengths& lengths,
                                    int root_override) const {
  Traversal traversal;
  DownwardPass(topology, lengths, traversal, root_override);
  evaluations_.fetch_add(1);

  const int p = static_cast<int>(patterns_.PatternCount());
  const auto& root_partial = traversal.partial[traversal.root];
  const auto& root_scale = traversal.partial_scale[traversal.root];
  double total = 0.0;
  for (int pattern = 0; pattern < p; ++pattern) {
    const double site = 0.25 * root_partial.col(pattern).sum();
    total += patterns_.weights[pattern] * (std::log(site) + root_scale(pattern));
  }
  return total;
}

std::pair<double, BranchLengths> PruningEngine::LogLikelihoodWithGradients(
    const Topology& topology, const BranchLengths& lengths) const {
  Traversal traversal;
  DownwardPass(topology, lengths, traversal, -1);
  evaluations_.fetch_add(1);

  const int p = static_cast<int>(patterns_.PatternCount());
  const int root = traversal.root;
  const auto& root_partial = traversal.partial[root];
  const auto& root_scale = traversal.partial_scale[root];

  Eigen::VectorXd site_likelihood(p);
  double total = 0.0;
  for (int pattern = 0; pattern < p; ++pattern) {
    site_likelihood(pattern) = 0.25 * root_partial.col(pattern).sum();
    total += patterns_.weights[pattern] *
             (std::log(site_likelihood(pattern)) + root_scale(pattern));
  }

  // Upward pass: outer[v] is the partial of everything outside v's subtree,
  // seen from v's parent, with its own per-pattern log scale.
  const size_t nodes = topology.NodeCount();
  std::vector<Eigen::MatrixXd> outer(nodes);
  std::vector<Eigen::VectorXd> outer_scale(nodes);
  outer[root] = Eigen::MatrixXd::Ones(4, p);
  outer_scale[root] = Eigen::VectorXd::Zero(p);

  BranchLengths gradient(lengths.size(), 0.0);
  Eigen::MatrixXd derivative_message(4, p);
  for (const int node : traversal.order) {
    for (const int child : traversal.children[node]) {
      Eigen::MatrixXd block = outer[node];
      Eigen::VectorXd scale = outer_scale[node];
      for (const int sibling : traversal.children[node]) {
        if (sibling == child) continue;
        block.array() *= traversal.message[sibling].array();
        scale += traversal.partial_scale[sibling];
      }
      for (int pattern = 0; pattern < p; ++pattern) {
        const double top = block.col(pattern).maxCoeff();
        if (top > 0.0 && top < kScaleThreshold) {
          block.col(pattern) /= top;
          scale(pattern) += std::log(top);
        }
      }

      const int edge = traversal.parent_edge[child];
      const Jc69Pair slope = Jc69Derivative(lengths[edge]);
      ApplyTwoValued(slope, traversal.partial[child], derivative_message);
      double edge_grad = 0.0;
      for (int pattern = 0; pattern < p; ++pattern) {
        const double numerator =
            0.25 * (block.col(pattern).array() *
                    derivative_message.col(pattern).array())
                       .sum();
        const double rescale =
            std::exp(scale(pattern) + traversal.partial_scale[child](pattern) -
                     root_scale(pattern));
        edge_grad += patterns_.weights[pattern] * rescale * numerator /
                     site_likelihood(pattern);
      }
      gradient[edge] = edge_grad;

      // Descend across the child's own edge; JC69 is symmetric so the
      // transpose contraction reuses the forward application.
      const Jc69Pair transition = Jc69Values(lengths[edge]);
      ApplyTwoValued(transition, block, outer[child]);
      outer_scale[child] = std::move(scale);
    }
  }
  return {total, std::move(gradient)};
}

}  // namespace phylogeo
