// Copyright 2026 The wzlearn Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wz/models.hpp"

#include <cmath>

#include "json.hpp"

#include "wz/byte_io.hpp"
#include "wz/errors.hpp"

namespace wz {

namespace {

constexpr char kCheckpointMagic[] = "WZCK";

Matrix leaky(const Matrix& m, double slope) {
  return m.cwiseMax(slope * m);
}

Matrix uniform_init(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = limit * (2.0 * rng.uniform() - 1.0);
  }
  return w;
}

}  // namespace

Mlp::Mlp(std::vector<int> dims, double slope, Rng& rng, const std::string& name)
    : dims_(std::move(dims)), slope_(slope) {
  if (dims_.size() < 2) throw ConfigError("mlp needs at least input and output dims");
  for (int d : dims_) {
    if (d < 1) throw ConfigError("mlp dims must be positive");
  }
  if (!(slope_ > 0.0 && slope_ < 1.0)) throw ConfigError("leaky slope must lie in (0, 1)");
  for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
    const std::string layer = name + ".l" + std::to_string(i);
    weights.emplace_back(layer + ".w", uniform_init(dims_[i + 1], dims_[i], rng));
    biases.emplace_back(layer + ".b", Matrix::Zero(1, dims_[i + 1]));
  }
}

Matrix Mlp::forward(const Matrix& input) const {
  if (input.cols() != dims_.front()) throw ConfigError("mlp: input width mismatch");
  Matrix h = input;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    Matrix next = h * weights[i].value.transpose();
    next.rowwise() += biases[i].value.row(0);
    h = (i + 1 < weights.size()) ? leaky(next, slope_) : std::move(next);
  }
  return h;
}

Var Mlp::forward(Graph& g, Var input) {
  Var h = input;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    h = g.dense(h, g.parameter(weights[i]), g.parameter(biases[i]));
    if (i + 1 < weights.size()) h = g.leaky_relu(h, slope_);
  }
  return h;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(&weights[i]);
    out.push_back(&biases[i]);
  }
  return out;
}

std::vector<const Parameter*> Mlp::parameters() const {
  std::vector<const Parameter*> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(&weights[i]);
    out.push_back(&biases[i]);
  }
  return out;
}

std::string to_string(PriorKind kind) {
  return kind == PriorKind::kMarginal ? "marginal" : "conditional";
}

PriorKind prior_kind_from_string(const std::string& s) {
  if (s == "marginal") return PriorKind::kMarginal;
  if (s == "conditional") return PriorKind::kConditional;
  throw ConfigError("unknown prior kind '" + s + "' (expected marginal or conditional)");
}

void SystemConfig::validate() const {
  if (k < 1) throw ConfigError("K must be >= 1");
  if (k > 65535) throw ConfigError("K must fit in 16 bits");
  if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
  if (hidden_layers < 0) throw ConfigError("hidden_layers must be >= 0");
  if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("leaky slope must lie in (0, 1)");
}

std::vector<int> SystemConfig::dims(int input, int output) const {
  std::vector<int> d{input};
  for (int i = 0; i < hidden_layers; ++i) d.push_back(hidden_units);
  d.push_back(output);
  return d;
}

WzSystem::WzSystem(const SystemConfig& config, std::uint64_t init_seed) : config_(config) {
  config_.validate();
  Rng rng(init_seed);
  encoder = Mlp(config_.dims(1, config_.k), config_.slope, rng, "encoder");
  decoder = Mlp(config_.dims(config_.k + 1, 1), config_.slope, rng, "decoder");
  if (config_.prior_kind == PriorKind::kMarginal) {
    marginal_logits = Parameter("prior.logits", Matrix::Zero(1, config_.k));
  } else {
    conditional_prior = Mlp(config_.dims(1, config_.k), config_.slope, rng, "prior");
  }
  meta.seed = init_seed;
}

Matrix WzSystem::encoder_logits(const Matrix& x) const { return encoder.forward(x); }

std::vector<double> WzSystem::encoder_logits(double x) const {
  const Matrix out = encoder.forward(Matrix::Constant(1, 1, x));
  return {out.data(), out.data() + out.size()};
}

Matrix WzSystem::prior_log_probs(const std::optional<Matrix>& y, Eigen::Index rows) const {
  Matrix logits;
  if (config_.prior_kind == PriorKind::kMarginal) {
    if (y) throw UsageError("marginal prior takes no side information");
    logits = marginal_logits.value.replicate(rows, 1);
  } else {
    if (!y) throw UsageError("conditional prior requires side information y");
    logits = conditional_prior.forward(*y);
  }
  if (!logits.allFinite()) throw NumericError("prior: non-finite logits");
  const Eigen::VectorXd m = logits.rowwise().maxCoeff();
  Matrix shifted = logits.colwise() - m;
  const Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log().matrix();
  return shifted.colwise() - lse;
}

std::vector<double> WzSystem::prior_log_probs(std::optional<double> y) const {
  std::optional<Matrix> ym;
  if (y) ym = Matrix::Constant(1, 1, *y);
  const Matrix out = prior_log_probs(ym, 1);
  return {out.data(), out.data() + out.size()};
}

Matrix WzSystem::decode(const Matrix& u, const Matrix& y) const {
  if (u.cols() != config_.k || y.cols() != 1 || u.rows() != y.rows()) {
    throw ConfigError("decode: expected (B x K) u and (B x 1) y");
  }
  Matrix input(u.rows(), u.cols() + 1);
  input << u, y;
  return decoder.forward(input);
}

double WzSystem::decode(std::span<const double> u, double y) const {
  Matrix um(1, static_cast<Eigen::Index>(u.size()));
  for (std::size_t k = 0; k < u.size(); ++k) um(0, static_cast<Eigen::Index>(k)) = u[k];
  return decode(um, Matrix::Constant(1, 1, y))(0, 0);
}

Var WzSystem::encoder_logits(Graph& g, Var x) { return encoder.forward(g, x); }

Var WzSystem::prior_logits(Graph& g, std::optional<Var> y, Eigen::Index rows) {
  if (config_.prior_kind == PriorKind::kMarginal) {
    if (y) throw UsageError("marginal prior takes no side information");
    return g.broadcast_rows(g.parameter(marginal_logits), rows);
  }
  if (!y) throw UsageError("conditional prior requires side information y");
  return conditional_prior.forward(g, *y);
}

Var WzSystem::decode(Graph& g, Var u, Var y) { return decoder.forward(g, g.concat_cols(u, y)); }

std::vector<Parameter*> WzSystem::parameters() {
  std::vector<Parameter*> out = encoder.parameters();
  for (Parameter* p : decoder.parameters()) out.push_back(p);
  if (config_.prior_kind == PriorKind::kMarginal) {
    out.push_back(&marginal_logits);
  } else {
    for (Parameter* p : conditional_prior.parameters()) out.push_back(p);
  }
  return out;
}

std::vector<const Parameter*> WzSystem::parameters() const {
  std::vector<const Parameter*> out;
  for (Parameter* p : const_cast<WzSystem*>(this)->parameters()) out.push_back(p);
  return out;
}

std::size_t WzSystem::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

// Checkpoints ---------------------------------------------------------------

std::vector<std::uint8_t> serialize_checkpoint(const WzSystem& system) {
  const SystemConfig& cfg = system.config();
  nlohmann::ordered_json header;
  header["k"] = cfg.k;
  header["prior_kind"] = to_string(cfg.prior_kind);
  header["hidden_units"] = cfg.hidden_units;
  header["hidden_layers"] = cfg.hidden_layers;
  header["slope"] = cfg.slope;
  header["lambda"] = system.meta.lambda;
  header["seed"] = system.meta.seed;
  header["steps"] = system.meta.steps;
  header["source"] = {{"direction", to_string(system.meta.source.direction)},
                      {"base_variance", system.meta.source.base_variance},
                      {"noise_variance", system.meta.source.noise_variance}};
  auto& params = header["parameters"] = nlohmann::ordered_json::array();
  for (const Parameter* p : system.parameters()) {
    params.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  }
  const std::string text = header.dump();

  ByteWriter w;
  w.put_bytes(std::string_view(kCheckpointMagic, 4));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(text.size());
  w.put_bytes(text);
  for (const Parameter* p : system.parameters()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) w.put_f64(p->value.data()[i]);
  }
  Fnv1a64 hash;
  hash.update(w.bytes());
  w.put<std::uint64_t>(hash.digest());
  return std::move(w.bytes());
}

WzSystem deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 4 + 8 + 8) throw FormatError("checkpoint: file too short");
  ByteReader r(bytes);
  const auto magic = r.take(4);
  if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic bytes");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  // Verify the trailing checksum before trusting any length field.
  Fnv1a64 hash;
  hash.update(bytes.first(bytes.size() - 8));
  ByteReader tail(bytes.last(8));
  if (tail.get<std::uint64_t>() != hash.digest()) {
    throw FormatError("checkpoint: checksum mismatch (truncated or corrupt file)");
  }

  const auto header_len = r.get<std::uint64_t>();
  if (header_len > r.remaining()) throw FormatError("checkpoint: header length out of range");
  const auto header_bytes = r.take(static_cast<std::size_t>(header_len));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_bytes.begin(), header_bytes.end());
    SystemConfig cfg;
    cfg.k = header.at("k").get<int>();
    cfg.prior_kind = prior_kind_from_string(header.at("prior_kind").get<std::string>());
    cfg.hidden_units = header.at("hidden_units").get<int>();
    cfg.hidden_layers = header.at("hidden_layers").get<int>();
    cfg.slope = header.at("slope").get<double>();

    WzSystem system(cfg, 0);
    system.meta.lambda = header.at("lambda").get<double>();
    system.meta.seed = header.at("seed").get<std::uint64_t>();
    system.meta.steps = header.at("steps").get<std::int64_t>();
    const auto& src = header.at("source");
    system.meta.source.direction = direction_from_string(src.at("direction").get<std::string>());
    system.meta.source.base_variance = src.at("base_variance").get<double>();
    system.meta.source.noise_variance = src.at("noise_variance").get<double>();

    const auto& listed = header.at("parameters");
    auto params = system.parameters();
    if (listed.size() != params.size()) throw FormatError("checkpoint: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      Parameter& p = *params[i];
      if (listed[i].at("name").get<std::string>() != p.name ||
          listed[i].at("rows").get<Eigen::Index>() != p.value.rows() ||
          listed[i].at("cols").get<Eigen::Index>() != p.value.cols()) {
        throw FormatError("checkpoint: parameter layout mismatch at " + p.name);
      }
      for (Eigen::Index j = 0; j < p.value.size(); ++j) p.value.data()[j] = r.get_f64();
    }
    if (r.remaining() != 8) throw FormatError("checkpoint: trailing bytes after weights");
    return system;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: invalid config: ") + e.what());
  }
}

void save_checkpoint(const WzSystem& system, const std::string& path) {
  write_file_bytes(path, serialize_checkpoint(system));
}

WzSystem load_checkpoint(const std::string& path) {
  return deserialize_checkpoint(read_file_bytes(path));
}

}  // namespace wz
