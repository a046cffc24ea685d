// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "phylogeo/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <utility>

#include "json.hpp"
#include "phylogeo/common.hpp"

namespace phylogeo {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json VectorToJson(const Eigen::VectorXd& values) {
  json out = json::array();
  for (int i = 0; i < values.size(); ++i) {
    out.push_back(values[i]);
  }
  return out;
}

Eigen::VectorXd VectorFromJson(const json& values, int expected_size,
                               const std::string& what) {
  if (!values.is_array() ||
      static_cast<int>(values.size()) != expected_size) {
    throw DataError("checkpoint field '" + what + "' must hold " +
                    std::to_string(expected_size) + " numbers");
  }
  Eigen::VectorXd out(expected_size);
  for (int i = 0; i < expected_size; ++i) {
    if (!values[i].is_number()) {
      throw DataError("checkpoint field '" + what + "' holds a non-number");
    }
    out[i] = values[i].get<double>();
  }
  return out;
}

const json& Require(const json& node, const std::string& key) {
  if (!node.is_object() || !node.contains(key)) {
    throw DataError("checkpoint is missing field '" + key + "'");
  }
  return node.at(key);
}

double RequireNumber(const json& node, const std::string& key) {
  const json& value = Require(node, key);
  if (!value.is_number()) {
    throw DataError("checkpoint field '" + key + "' must be a number");
  }
  return value.get<double>();
}

std::string RequireString(const json& node, const std::string& key) {
  const json& value = Require(node, key);
  if (!value.is_string()) {
    throw DataError("checkpoint field '" + key + "' must be a string");
  }
  return value.get<std::string>();
}

}  // namespace

VariationalState::VariationalState(const TipDistSpec& spec_in,
                                   std::vector<std::string> taxa_in,
                                   LinkMethod link_in, double default_m,
                                   double default_log_sigma)
    : spec(spec_in),
      taxa(std::move(taxa_in)),
      link(link_in),
      q_theta(spec_in, static_cast<int>(taxa.size())),
      q_phi(taxa.size(), default_m, default_log_sigma),
      r_psi(spec_in, static_cast<int>(taxa.size())),
      surrogate(std::nullopt) {
  Assert(taxa.size() >= 3, "a variational state needs at least three taxa");
}

void VariationalState::AddSurrogate(int hidden_multiplier, uint64_t seed) {
  const int input_dim = TipCount() * spec.dim;
  surrogate.emplace(input_dim, hidden_multiplier * input_dim);
  surrogate->InitializeHidden(seed);
}

std::string SerializeCheckpoint(const VariationalState& state,
                                const TrainingMeta& meta) {
  json root;
  root["format"] = "phylogeo-checkpoint";
  root["format_version"] = kFormatVersion;
  root["version"] = kVersion;

  json model;
  model["space"] = SpaceName(state.spec.space);
  model["cov"] = CovTypeName(state.spec.cov);
  model["dim"] = state.spec.dim;
  model["link"] = LinkMethodName(state.link);
  model["taxa"] = state.taxa;
  root["model"] = std::move(model);

  root["theta"] = VectorToJson(state.q_theta.Params());
  root["psi"] = VectorToJson(state.r_psi.Params());

  json phi;
  json pendant = json::array();
  const std::vector<double>& branch_params = state.q_phi.Params();
  for (int tip = 0; tip < state.TipCount(); ++tip) {
    pendant.push_back(
        json::array({branch_params[2 * tip], branch_params[2 * tip + 1]}));
  }
  phi["pendant"] = std::move(pendant);
  json internal = json::array();
  for (const auto& [split, slot] : state.q_phi.InternalSlots()) {
    internal.push_back(json::array({split.ToHex(), branch_params[2 * slot],
                                    branch_params[2 * slot + 1]}));
  }
  phi["internal"] = std::move(internal);
  root["phi"] = std::move(phi);

  if (state.surrogate.has_value()) {
    json chi;
    chi["input_dim"] = state.surrogate->InputDim();
    chi["hidden_width"] = state.surrogate->HiddenWidth();
    chi["params"] = VectorToJson(state.surrogate->Params());
    root["chi"] = std::move(chi);
  }

  json training;
  training["step"] = meta.step;
  training["nle_count"] = meta.nle_count;
  training["beta"] = meta.beta;
  training["lr"] = meta.lr;
  training["estimator"] = meta.estimator;
  training["K"] = meta.sample_count;
  training["seed"] = meta.seed;
  root["training"] = std::move(training);

  return root.dump(2) + "\n";
}

Checkpoint DeserializeCheckpoint(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& error) {
    throw DataError(std::string("checkpoint is not valid JSON: ") +
                    error.what());
  }
  if (RequireString(root, "format") != "phylogeo-checkpoint") {
    throw DataError("not a phylogeo checkpoint file");
  }
  const int format_version =
      static_cast<int>(RequireNumber(root, "format_version"));
  if (format_version != kFormatVersion) {
    throw DataError("unsupported checkpoint format version " +
                    std::to_string(format_version));
  }

  const json& model = Require(root, "model");
  TipDistSpec spec;
  spec.space = ParseSpace(RequireString(model, "space"));
  spec.cov = ParseCovType(RequireString(model, "cov"));
  spec.dim = static_cast<int>(RequireNumber(model, "dim"));
  if (spec.dim < 1) {
    throw DataError("checkpoint dimension must be positive");
  }
  const json& taxa_json = Require(model, "taxa");
  if (!taxa_json.is_array() || taxa_json.size() < 3) {
    throw DataError("checkpoint must list at least three taxa");
  }
  std::vector<std::string> taxa;
  for (const json& name : taxa_json) {
    if (!name.is_string()) {
      throw DataError("checkpoint taxa must be strings");
    }
    taxa.push_back(name.get<std::string>());
  }
  const LinkMethod link = ParseLinkMethod(RequireString(model, "link"));
  const size_t tip_count = taxa.size();

  VariationalState state(spec, std::move(taxa), link);
  state.q_theta.Params() =
      VectorFromJson(Require(root, "theta"), state.q_theta.ParamCount(),
                     "theta");
  state.r_psi.Params() =
      VectorFromJson(Require(root, "psi"), state.r_psi.ParamCount(), "psi");

  const json& phi = Require(root, "phi");
  const json& pendant = Require(phi, "pendant");
  if (!pendant.is_array() || pendant.size() != tip_count) {
    throw DataError("checkpoint pendant table must have one row per taxon");
  }
  for (size_t tip = 0; tip < tip_count; ++tip) {
    const json& row = pendant[tip];
    if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
        !row[1].is_number()) {
      throw DataError("checkpoint pendant rows must be [m, log_sigma]");
    }
    state.q_phi.Params()[2 * tip] = row[0].get<double>();
    state.q_phi.Params()[2 * tip + 1] = row[1].get<double>();
  }
  const json& internal = Require(phi, "internal");
  if (!internal.is_array()) {
    throw DataError("checkpoint internal split table must be an array");
  }
  for (const json& row : internal) {
    if (!row.is_array() || row.size() != 3 || !row[0].is_string() ||
        !row[1].is_number() || !row[2].is_number()) {
      throw DataError(
          "checkpoint internal rows must be [split_hex, m, log_sigma]");
    }
    Split split(tip_count);
    try {
      split = Split::FromHex(row[0].get<std::string>(), tip_count);
    } catch (const PhylogeoError& error) {
      throw DataError(std::string("bad split in checkpoint: ") +
                      error.what());
    }
    if (split.IsTrivial()) {
      throw DataError("checkpoint lists a trivial split as internal");
    }
    state.q_phi.RestoreInternalSplit(split, row[1].get<double>(),
                                     row[2].get<double>());
  }

  if (root.contains("chi") && !root.at("chi").is_null()) {
    const json& chi = root.at("chi");
    const int input_dim = static_cast<int>(RequireNumber(chi, "input_dim"));
    const int hidden_width =
        static_cast<int>(RequireNumber(chi, "hidden_width"));
    if (input_dim != state.TipCount() * spec.dim || hidden_width < 1) {
      throw DataError("checkpoint surrogate shape does not match the model");
    }
    state.surrogate.emplace(input_dim, hidden_width);
    state.surrogate->Params() = VectorFromJson(
        Require(chi, "params"), state.surrogate->ParamCount(), "chi.params");
  }

  TrainingMeta meta;
  if (root.contains("training")) {
    const json& training = root.at("training");
    meta.step = static_cast<uint64_t>(RequireNumber(training, "step"));
    meta.nle_count =
        static_cast<int64_t>(RequireNumber(training, "nle_count"));
    meta.beta = RequireNumber(training, "beta");
    meta.lr = RequireNumber(training, "lr");
    meta.estimator = RequireString(training, "estimator");
    meta.sample_count = static_cast<int>(RequireNumber(training, "K"));
    meta.seed = static_cast<uint64_t>(RequireNumber(training, "seed"));
  }
  return Checkpoint{std::move(state), std::move(meta)};
}

void WriteCheckpointFile(const std::string& path,
                         const VariationalState& state,
                         const TrainingMeta& meta) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot open checkpoint file for writing: " + path);
  }
  out << SerializeCheckpoint(state, meta);
  if (!out) {
    throw DataError("failed writing checkpoint file: " + path);
  }
}

Checkpoint ReadCheckpointFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open checkpoint file: " + path);
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return DeserializeCheckpoint(text);
}

Space ParseSpace(const std::string& name) {
  if (name == "euclidean") {
    return Space::kEuclidean;
  }
  if (name == "hyperbolic") {
    return Space::kHyperbolic;
  }
  throw DataError("unknown space: " + name);
}

std::string SpaceName(Space space) {
  return space == Space::kEuclidean ? "euclidean" : "hyperbolic";
}

CovType ParseCovType(const std::string& name) {
  if (name == "diag") {
    return CovType::kDiag;
  }
  if (name == "full") {
    return CovType::kFull;
  }
  throw DataError("unknown covariance type: " + name);
}

std::string CovTypeName(CovType cov) {
  return cov == CovType::kDiag ? "diag" : "full";
}

LinkMethod ParseLinkMethod(const std::string& name) {
  if (name == "nj") {
    return LinkMethod::kNeighborJoining;
  }
  if (name == "upgma") {
    return LinkMethod::kUpgma;
  }
  throw DataError("unknown link method: " + name);
}

std::string LinkMethodName(LinkMethod link) {
  return link == LinkMethod::kNeighborJoining ? "nj" : "upgma";
}

}  // namespace phylogeo
