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

#include "wz/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wz/csv.hpp"
#include "wz/entropy_coding.hpp"
#include "wz/errors.hpp"
#include "wz/evaluation.hpp"
#include "wz/rng.hpp"
#include "wz/sources.hpp"

namespace wz::cli {

namespace {

using nlohmann::json;

json to_json(const RunConfig& c) {
  const TrainConfig& t = c.train;
  json j;
  j["prior"] = to_string(t.system.prior_kind);
  j["k"] = t.system.k;
  j["hidden_units"] = t.system.hidden_units;
  j["hidden_layers"] = t.system.hidden_layers;
  j["slope"] = t.system.slope;
  j["direction"] = to_string(t.source.direction);
  j["base_variance"] = t.source.base_variance;
  j["noise_variance"] = t.source.noise_variance;
  j["lambda"] = t.lambda;
  j["batch_size"] = t.batch_size;
  j["steps"] = t.total_steps;
  j["learning_rate"] = t.learning_rate;
  j["t_start"] = t.temperature.start;
  j["t_end"] = t.temperature.end;
  j["anneal_fraction"] = t.temperature.anneal_fraction;
  j["rate_estimator"] = to_string(t.rate_estimator);
  j["seed"] = t.seed;
  j["log_every"] = t.log_every;
  j["eval_samples"] = t.eval_samples;
  j["eval_threads"] = t.eval_threads;
  j["lambdas"] = c.lambdas;
  j["sweep_threads"] = c.sweep_threads;
  j["map_x_min"] = c.map_x_min;
  j["map_x_max"] = c.map_x_max;
  j["map_grid"] = c.map_grid;
  j["curve_y_min"] = c.curve_y_min;
  j["curve_y_max"] = c.curve_y_max;
  j["curve_points"] = c.curve_points;
  j["output_dir"] = c.output_dir;
  return j;
}

bool same_kind(const json& expected, const json& v) {
  if (expected.is_number_float()) return v.is_number();
  if (expected.is_number_integer()) return v.is_number_integer();
  if (expected.is_string()) return v.is_string();
  if (expected.is_array()) {
    if (!v.is_array()) return false;
    for (const auto& e : v) {
      if (!e.is_number()) return false;
    }
    return true;
  }
  return false;
}

// Types are checked against the defaults so a float key stays a float key
// whatever earlier sources assigned.
void assign(json& target, const json& defaults, const std::string& key, const json& value) {
  if (!defaults.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  const json& expected = defaults.at(key);
  if (!same_kind(expected, value)) {
    const std::string want = expected.is_number_float()     ? "real"
                             : expected.is_number_integer() ? "integer"
                             : expected.is_array()          ? "array of numbers"
                                                            : expected.type_name();
    throw ConfigError("config key '" + key + "' must be a " + want + ", got " + value.type_name());
  }
  target[key] = value;
}

template <typename T>
T non_negative(const json& j, const char* key) {
  const json& v = j.at(key);
  if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
  const auto i = v.get<std::int64_t>();
  if (i < 0) throw ConfigError(std::string("config key '") + key + "' must be >= 0");
  return static_cast<T>(i);
}

RunConfig from_json(const json& j) {
  RunConfig c;
  TrainConfig& t = c.train;
  t.system.prior_kind = prior_kind_from_string(j.at("prior").get<std::string>());
  t.system.k = j.at("k").get<int>();
  t.system.hidden_units = j.at("hidden_units").get<int>();
  t.system.hidden_layers = j.at("hidden_layers").get<int>();
  t.system.slope = j.at("slope").get<double>();
  t.source.direction = direction_from_string(j.at("direction").get<std::string>());
  t.source.base_variance = j.at("base_variance").get<double>();
  t.source.noise_variance = j.at("noise_variance").get<double>();
  t.lambda = j.at("lambda").get<double>();
  t.batch_size = j.at("batch_size").get<int>();
  t.total_steps = j.at("steps").get<std::int64_t>();
  t.learning_rate = j.at("learning_rate").get<double>();
  t.temperature.start = j.at("t_start").get<double>();
  t.temperature.end = j.at("t_end").get<double>();
  t.temperature.anneal_fraction = j.at("anneal_fraction").get<double>();
  t.rate_estimator = rate_estimator_from_string(j.at("rate_estimator").get<std::string>());
  t.seed = non_negative<std::uint64_t>(j, "seed");
  t.log_every = j.at("log_every").get<std::int64_t>();
  t.eval_samples = non_negative<std::size_t>(j, "eval_samples");
  t.eval_threads = non_negative<unsigned>(j, "eval_threads");
  c.lambdas = j.at("lambdas").get<std::vector<double>>();
  c.sweep_threads = non_negative<unsigned>(j, "sweep_threads");
  c.map_x_min = j.at("map_x_min").get<double>();
  c.map_x_max = j.at("map_x_max").get<double>();
  c.map_grid = non_negative<std::size_t>(j, "map_grid");
  c.curve_y_min = j.at("curve_y_min").get<double>();
  c.curve_y_max = j.at("curve_y_max").get<double>();
  c.curve_points = non_negative<std::size_t>(j, "curve_points");
  c.output_dir = j.at("output_dir").get<std::string>();
  c.validate();
  return c;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string rate_kind(PriorKind kind) {
  return kind == PriorKind::kMarginal ? "cross_entropy" : "ideal_sw_cross_entropy";
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void make_dirs(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

void write_point_csv(const RdPoint& p, std::int64_t steps, const std::string& path,
                     const std::string& prov) {
  CsvWriter csv(path, prov,
                {"lambda", "seed", "steps", "prior", "rate_kind", "rate_bits", "distortion_db", "mse",
                 "samples"});
  csv.cell(p.lambda).cell(static_cast<unsigned long long>(p.seed)).cell(static_cast<long long>(steps));
  csv.cell(to_string(p.prior_kind)).cell(rate_kind(p.prior_kind));
  csv.cell(p.rate_bits).cell(p.distortion_db).cell(p.mse).cell(p.sample_count).end_row();
  csv.close();
}

void print_point(std::ostream& out, const RdPoint& p) {
  out << "rate_bits " << format_double(p.rate_bits) << " (" << rate_kind(p.prior_kind) << ")\n"
      << "distortion_db " << format_double(p.distortion_db) << "\n";
}

std::uint64_t checkpoint_hash(const WzSystem& system) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : serialize_checkpoint(system)) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::pair<std::string, std::string>> split_overrides(const std::vector<std::string>& sets) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--set expects key=value, got '" + s + "'");
    }
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

// Flags shared by train and sweep.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> steps;
  std::optional<std::string> out;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "JSON config file (flat object)");
    app->add_option("--set", sets, "Override a config key: key=value (repeatable)");
    app->add_option("--lambda", lambda, "Override lambda");
    app->add_option("--seed", seed, "Override seed");
    app->add_option("--steps", steps, "Override the number of training steps");
    app->add_option("-o,--out", out, "Override the output directory");
  }

  RunConfig load() const {
    auto overrides = split_overrides(sets);
    if (lambda) overrides.emplace_back("lambda", json(*lambda).dump());
    if (seed) overrides.emplace_back("seed", std::to_string(*seed));
    if (steps) overrides.emplace_back("steps", std::to_string(*steps));
    if (out) overrides.emplace_back("output_dir", json(*out).dump());
    if (config_path.empty()) return parse_run_config("{}", overrides);
    return load_run_config(config_path, overrides);
  }
};

int cmd_train(const ConfigFlags& flags, std::ostream& out) {
  const RunConfig config = flags.load();
  const std::string prov = provenance("train", config_hash(config));
  make_dirs(config.output_dir);
  {
    std::ofstream f(path_in(config.output_dir, "config.json"));
    f << to_json_text(config) << "\n";
    if (!f) throw IoError("cannot write " + path_in(config.output_dir, "config.json"));
  }
  const std::string report_path = path_in(config.output_dir, "train_report.csv");
  TrainResult result;
  try {
    result = train(config.train);
  } catch (const TrainingDiverged& e) {
    write_report_csv(e.report, report_path, prov);
    throw;
  }
  const std::string ckpt = path_in(config.output_dir, "checkpoint.wzck");
  save_checkpoint(result.system, ckpt);
  write_report_csv(result.report, report_path, prov);
  write_point_csv(*result.report.final_point, config.train.total_steps,
                  path_in(config.output_dir, "rd_point.csv"), prov);
  print_point(out, *result.report.final_point);
  out << "checkpoint " << ckpt << "\n";
  return kExitOk;
}

int cmd_sweep(const ConfigFlags& flags, const std::vector<double>& lambdas, unsigned threads,
              std::ostream& out) {
  RunConfig config = flags.load();
  if (!lambdas.empty()) config.lambdas = lambdas;
  if (threads > 0) config.sweep_threads = threads;
  std::string prov = provenance("sweep", config_hash(config));
  if (config.train.system.prior_kind == PriorKind::kConditional) {
    prov += " rate=ideal_sw_cross_entropy";
  }
  make_dirs(config.output_dir);
  SweepOptions opts;
  opts.output_dir = config.output_dir;
  opts.threads = config.sweep_threads;
  opts.provenance = prov;
  const auto entries = sweep(config.train, config.lambdas, opts);
  std::size_t failed = 0;
  for (const auto& e : entries) {
    out << "lambda " << format_double(e.lambda) << ": ";
    if (e.point) {
      out << format_double(e.point->rate_bits) << " bits, " << format_double(e.point->distortion_db)
          << " dB\n";
    } else {
      out << "failed (" << e.error << ")\n";
      ++failed;
    }
  }
  out << "rd_curve " << path_in(config.output_dir, "rd_curve.csv") << "\n";
  return failed == entries.size() ? kExitDiverged : kExitOk;
}

struct EvalFlags {
  std::string checkpoint;
  std::size_t samples = std::size_t{1} << 20;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out_path;
};

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  const WzSystem system = load_checkpoint(f.checkpoint);
  EvalOptions opts;
  opts.samples = f.samples;
  opts.seed = f.seed.value_or(derive_seed(system.meta.seed, 4));
  opts.threads = f.threads;
  const RdPoint p = evaluate(system, system.meta.source, opts);
  if (!f.out_path.empty()) {
    write_point_csv(p, system.meta.steps, f.out_path, provenance("eval", checkpoint_hash(system)));
  }
  print_point(out, p);
  return kExitOk;
}

struct BaselineFlags {
  std::string direction = "x=y+n";
  double base_variance = 1.0;
  double noise_variance = 0.1;
  double rate_min = 0.0;
  double rate_max = 6.0;
  double rate_step = 0.05;
  std::string out_path = "baselines.csv";
};

int cmd_baseline(const BaselineFlags& f, std::ostream& out) {
  const SourceModel model{direction_from_string(f.direction), f.base_variance, f.noise_variance};
  model.validate();
  const auto rows = baseline_curves(model, f.rate_min, f.rate_max, f.rate_step);
  json key{{"direction", f.direction},
           {"base_variance", f.base_variance},
           {"noise_variance", f.noise_variance}};
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : key.dump()) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  CsvWriter csv(f.out_path, provenance("baseline", h),
                {"rate_bits", "wz_db", "wz_plus_offset_db", "p2p_db"});
  for (const auto& r : rows) {
    csv.cell(r.rate_bits).cell(r.wz_db).cell(r.wz_plus_offset_db).cell(r.p2p_db).end_row();
  }
  csv.close();
  out << rows.size() << " rows written to " << f.out_path << "\n";
  return kExitOk;
}

struct MapFlags {
  std::string checkpoint;
  double x_min = -3.5;
  double x_max = 3.5;
  std::size_t grid = 7000;
  double y_min = -3.5;
  double y_max = 3.5;
  std::size_t curve_points = 141;
  std::size_t samples = std::size_t{1} << 16;
  std::uint64_t seed = 0;
  std::size_t min_support = 10;
  double r2_threshold = 0.95;
  std::string prefix = "fig_";
};

int cmd_map(const MapFlags& f, std::ostream& out) {
  const WzSystem system = load_checkpoint(f.checkpoint);
  const QuantizerMap map = quantizer_map(system, f.x_min, f.x_max, f.grid);
  const BinningScore score = binning_score(map);
  const DecoderCurves curves = decoder_curves(system, map, f.y_min, f.y_max, f.curve_points);
  LinearityOptions lin;
  lin.samples = f.samples;
  lin.seed = f.seed;
  lin.min_support = f.min_support;
  const LinearityReport fits = decoder_linearity(system, map, system.meta.source, lin);

  std::size_t linear = 0;
  for (const auto& fit : fits.fits) {
    if (fit.degenerate || fit.r2 > f.r2_threshold) ++linear;
  }
  const double linear_fraction =
      fits.fits.empty() ? 0.0 : static_cast<double>(linear) / static_cast<double>(fits.fits.size());

  const std::string prov = provenance("map", checkpoint_hash(system));
  const auto parent = std::filesystem::path(f.prefix).parent_path();
  if (!parent.empty()) make_dirs(parent.string());
  export_figure_data(map, curves, fits, f.prefix, prov);
  {
    CsvWriter csv(f.prefix + "summary.csv", prov,
                  {"distinct_indices", "intervals", "discontiguous_bin_count", "reuse_factor",
                   "fits", "skipped", "linear_fraction"});
    std::size_t intervals = 0;
    for (const auto& iv : map.intervals) intervals += iv.size();
    csv.cell(map.indices.size()).cell(intervals).cell(score.discontiguous_bin_count);
    csv.cell(score.reuse_factor).cell(fits.fits.size()).cell(fits.skipped).cell(linear_fraction);
    csv.end_row();
    csv.close();
  }
  out << "distinct_indices " << map.indices.size() << "\n"
      << "discontiguous_bin_count " << score.discontiguous_bin_count << "\n"
      << "reuse_factor " << format_double(score.reuse_factor) << "\n"
      << "linear_fraction " << format_double(linear_fraction) << " (" << fits.fits.size()
      << " fits, " << fits.skipped << " skipped)\n";
  return kExitOk;
}

struct CodecFlags {
  std::string checkpoint;
  std::string x_path;
  std::string y_path;
  std::string in_path;
  std::string out_path;
  std::size_t count = 100000;
  std::uint64_t seed = 0;
};

void print_codec(std::ostream& out, const CodecStats& s) {
  out << "count " << s.count << "\n"
      << "payload_bits " << s.payload_bits << "\n"
      << "file_bytes " << s.file_bytes << "\n"
      << "bits_per_sample " << format_double(s.bits_per_sample) << "\n"
      << "ideal_bits_per_sample " << format_double(s.ideal_bits_per_sample) << "\n";
}

int cmd_codec_sample(const CodecFlags& f, std::ostream& out) {
  const WzSystem system = load_checkpoint(f.checkpoint);
  Rng rng(f.seed);
  const SampleBatch b = sample_pairs(system.meta.source, f.count, rng);
  write_samples(f.x_path, b.x);
  write_samples(f.y_path, b.y);
  out << b.size() << " pairs written to " << f.x_path << " and " << f.y_path << "\n";
  return kExitOk;
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  for (double l : lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("lambdas must all be > 0");
  }
  if (!(map_x_max > map_x_min)) throw ConfigError("map_x_max must exceed map_x_min");
  if (map_grid < 1) throw ConfigError("map_grid must be >= 1");
  if (!(curve_y_max > curve_y_min)) throw ConfigError("curve_y_max must exceed curve_y_min");
  if (curve_points < 2) throw ConfigError("curve_points must be >= 2");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

RunConfig parse_run_config(const std::string& json_text,
                           const std::vector<std::pair<std::string, std::string>>& overrides) {
  json file;
  try {
    file = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!file.is_object()) throw ConfigError("config must be a JSON object");
  const json defaults = to_json(RunConfig{});
  json merged = defaults;
  for (auto it = file.begin(); it != file.end(); ++it) assign(merged, defaults, it.key(), it.value());
  for (const auto& [key, text] : overrides) {
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;
    }
    assign(merged, defaults, key, value);
  }
  try {
    return from_json(merged);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config value out of range: ") + e.what());
  }
}

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), overrides);
}

std::string to_json_text(const RunConfig& config) { return to_json(config).dump(2); }

std::uint64_t config_hash(const RunConfig& config) {
  json j = to_json(config);
  for (const char* key : {"output_dir", "eval_threads", "sweep_threads"}) j.erase(key);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : j.dump()) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string provenance(const std::string& command, std::uint64_t hash) {
  return std::string(kToolVersion) + " command=" + command + " config_hash=" + hex(hash);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned one-shot Wyner-Ziv compressors for scalar Gaussian sources", "wzlearn"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  ConfigFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train one system, evaluate it and save a checkpoint");
  train_flags.attach(train_cmd);

  ConfigFlags sweep_flags;
  std::vector<double> sweep_lambdas;
  unsigned sweep_threads = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train one system per lambda and write rd_curve.csv");
  sweep_flags.attach(sweep_cmd);
  sweep_cmd->add_option("--lambdas", sweep_lambdas, "Lambda values (overrides the config)")
      ->delimiter(',');
  sweep_cmd->add_option("--threads", sweep_threads, "Parallel runs (overrides the config)");

  EvalFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "Deterministic-mode rate and distortion of a checkpoint");
  eval_cmd->add_option("checkpoint", eval_flags.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--samples", eval_flags.samples, "Number of evaluation samples");
  eval_cmd->add_option("--seed", eval_flags.seed, "Sample seed (default: the training run's)");
  eval_cmd->add_option("--threads", eval_flags.threads, "Worker threads");
  eval_cmd->add_option("-o,--out", eval_flags.out_path, "Write the point as CSV");

  BaselineFlags base_flags;
  auto* base_cmd = app.add_subcommand("baseline", "Wyner-Ziv and point-to-point reference curves");
  base_cmd->add_option("--direction", base_flags.direction, "x=y+n or y=x+n")->capture_default_str();
  base_cmd->add_option("--base-variance", base_flags.base_variance)->capture_default_str();
  base_cmd->add_option("--noise-variance", base_flags.noise_variance)->capture_default_str();
  base_cmd->add_option("--rate-min", base_flags.rate_min)->capture_default_str();
  base_cmd->add_option("--rate-max", base_flags.rate_max)->capture_default_str();
  base_cmd->add_option("--rate-step", base_flags.rate_step)->capture_default_str();
  base_cmd->add_option("-o,--out", base_flags.out_path)->capture_default_str();

  MapFlags map_flags;
  auto* map_cmd = app.add_subcommand("map", "Quantizer map, binning score and decoder fits");
  map_cmd->add_option("checkpoint", map_flags.checkpoint, "Checkpoint file")->required();
  map_cmd->add_option("--x-min", map_flags.x_min)->capture_default_str();
  map_cmd->add_option("--x-max", map_flags.x_max)->capture_default_str();
  map_cmd->add_option("--grid", map_flags.grid, "Grid cells over [x-min, x-max)")->capture_default_str();
  map_cmd->add_option("--y-min", map_flags.y_min)->capture_default_str();
  map_cmd->add_option("--y-max", map_flags.y_max)->capture_default_str();
  map_cmd->add_option("--curve-points", map_flags.curve_points)->capture_default_str();
  map_cmd->add_option("--samples", map_flags.samples, "Samples for the linearity fits")
      ->capture_default_str();
  map_cmd->add_option("--seed", map_flags.seed)->capture_default_str();
  map_cmd->add_option("--min-support", map_flags.min_support)->capture_default_str();
  map_cmd->add_option("--r2", map_flags.r2_threshold, "R^2 counted as linear")->capture_default_str();
  map_cmd->add_option("-o,--out-prefix", map_flags.prefix, "Prefix for the CSV files")
      ->capture_default_str();

  CodecFlags codec_flags;
  auto* codec_cmd = app.add_subcommand("codec", "Arithmetic-code indices of a marginal system");
  codec_cmd->require_subcommand(1);
  auto* enc_cmd = codec_cmd->add_subcommand("encode", "x samples -> compressed index file");
  enc_cmd->add_option("checkpoint", codec_flags.checkpoint)->required();
  enc_cmd->add_option("--x", codec_flags.x_path, "x samples, one per line")->required();
  enc_cmd->add_option("-o,--out", codec_flags.out_path, "Compressed file")->required();
  auto* dec_cmd = codec_cmd->add_subcommand("decode", "compressed file + y samples -> reconstructions");
  dec_cmd->add_option("checkpoint", codec_flags.checkpoint)->required();
  dec_cmd->add_option("--in", codec_flags.in_path, "Compressed file")->required();
  dec_cmd->add_option("--y", codec_flags.y_path, "y samples, one per line")->required();
  dec_cmd->add_option("-o,--out", codec_flags.out_path, "Reconstructions")->required();
  auto* sample_cmd = codec_cmd->add_subcommand("sample", "Draw (x, y) files from the checkpoint's source");
  sample_cmd->add_option("checkpoint", codec_flags.checkpoint)->required();
  sample_cmd->add_option("--count", codec_flags.count)->capture_default_str();
  sample_cmd->add_option("--seed", codec_flags.seed)->capture_default_str();
  sample_cmd->add_option("--x", codec_flags.x_path)->required();
  sample_cmd->add_option("--y", codec_flags.y_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o;
    std::ostringstream e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_flags, out);
    if (*sweep_cmd) return cmd_sweep(sweep_flags, sweep_lambdas, sweep_threads, out);
    if (*eval_cmd) return cmd_eval(eval_flags, out);
    if (*base_cmd) return cmd_baseline(base_flags, out);
    if (*map_cmd) return cmd_map(map_flags, out);
    if (*enc_cmd) {
      print_codec(out, codec_encode(load_checkpoint(codec_flags.checkpoint), codec_flags.x_path,
                                    codec_flags.out_path));
      return kExitOk;
    }
    if (*dec_cmd) {
      print_codec(out, codec_decode(load_checkpoint(codec_flags.checkpoint), codec_flags.in_path,
                                    codec_flags.y_path, codec_flags.out_path));
      return kExitOk;
    }
    if (*sample_cmd) return cmd_codec_sample(codec_flags, out);
  } catch (const ConfigError& e) {
    err << "wzlearn: config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "wzlearn: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "wzlearn: numeric error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const IoError& e) {
    err << "wzlearn: I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    err << "wzlearn: bad input file: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace wz::cli
