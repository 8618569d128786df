// Copyright 2026 The relax Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "relax/cli.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include "relax/baselines.h"
#include "relax/evalmetrics.h"
#include "relax/extractors.h"
#include "relax/netpbm.h"
#include "relax/relax_engine.h"
#include "relax/render.h"
#include "relax/synthdata.h"
#include "relax/tensor_io.h"

namespace relax {

namespace {

namespace fs = std::filesystem;

// A flag value that cannot be interpreted; reported with the usage exit code.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

// Runs `fn`, turning argument errors into usage errors.
template <typename Fn>
auto as_usage(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

constexpr const char* kConfigHelp = "key = value file; flags take precedence";

// Fills every option of `sub` that was not given on the command line from
// the `key = value` lines of its --config file. Keys are long option names
// without the leading dashes; `#` starts a comment line.
void apply_config_file(CLI::App& sub) {
  CLI::Option* config = sub.get_option_no_throw("--config");
  if (config == nullptr || config->count() == 0) return;
  const std::string path = config->as<std::string>();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr || opt == config) {
      throw UsageError(where + "unknown key '" + key + "'");
    }
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      throw UsageError(where + e.what());
    }
  }
}

// Required options may also come from the config file, so they are
// checked after it has been applied.
void check_required(const CLI::App& sub, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (sub.get_option(name)->count() == 0) {
      throw UsageError(std::string(name) + " is required");
    }
  }
}

struct ExtractorFlags {
  std::string name = "hog";
  int hog_cell = 8;
  int hog_block = 2;
  int hog_bins = 9;
  double hog_eps = 1e-6;
  int pool = 8;
  int proj_dim = 16;
  std::uint64_t proj_seed = 0;
  std::string external_cmd;
  std::size_t batch_size = 32;
  int timeout_ms = 60000;

  void add(CLI::App* app) {
    app->add_option("--extractor", name, "hog, downsample, projection or external")
        ->capture_default_str();
    app->add_option("--hog-cell", hog_cell, "HOG cell side in pixels")->capture_default_str();
    app->add_option("--hog-block", hog_block, "HOG block side in cells")->capture_default_str();
    app->add_option("--hog-bins", hog_bins, "HOG orientation bins")->capture_default_str();
    app->add_option("--hog-eps", hog_eps, "HOG block normalisation epsilon")
        ->capture_default_str();
    app->add_option("--pool", pool, "downsample grid side")->capture_default_str();
    app->add_option("--proj-dim", proj_dim, "projection output dimension")
        ->capture_default_str();
    app->add_option("--proj-seed", proj_seed, "projection matrix seed")->capture_default_str();
    app->add_option("--external-cmd", external_cmd,
                    "external extractor command line (split on whitespace)");
    app->add_option("--batch-size", batch_size, "images per external request")
        ->capture_default_str();
    app->add_option("--timeout-ms", timeout_ms, "external response timeout")
        ->capture_default_str();
  }

  std::unique_ptr<Extractor> make() const {
    ExtractorSpec spec;
    as_usage([&] {
      spec.variant = parse_extractor_variant(name);
      spec.hog.cell = hog_cell;
      spec.hog.block = hog_block;
      spec.hog.bins = hog_bins;
      spec.hog.norm_eps = hog_eps;
      spec.hog.validate();
      spec.pool_h = spec.pool_w = pool;
      spec.proj_dim = proj_dim;
      spec.proj_seed = proj_seed;
      if (spec.variant == ExtractorVariant::kExternal) {
        spec.external.command = split_words(external_cmd);
        if (spec.external.command.empty()) {
          throw InvalidArgument("--extractor external needs --external-cmd");
        }
        spec.external.batch_size = batch_size;
        spec.external.timeout = std::chrono::milliseconds(timeout_ms);
      }
      return 0;
    });
    return make_extractor(spec);
  }
};

struct MaskFlags {
  std::string masks = "n=3000,h=7,w=7,p=0.5";
  std::string strategy = "rise";
  std::string stats;
  std::string noise_sign = "subtract";
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--masks", masks, "mask parameters n=,h=,w=,p=,block=")
        ->capture_default_str();
    app->add_option("--strategy", strategy, "rise, pixel, block or noisefill")
        ->capture_default_str();
    app->add_option("--stats", stats, "corpus directory or manifest (noisefill)");
    app->add_option("--noise-sign", noise_sign, "noisefill combination: subtract or add")
        ->capture_default_str();
    app->add_option("--seed", seed, "random seed")->capture_default_str();
  }

  MaskBatchSpec make() const {
    MaskBatchSpec spec;
    as_usage([&] {
      parse_mask_option(masks, spec);
      spec.strategy.variant = parse_mask_variant(strategy);
      if (noise_sign == "subtract") {
        spec.strategy.noise_sign = NoiseSign::kSubtract;
      } else if (noise_sign == "add") {
        spec.strategy.noise_sign = NoiseSign::kAdd;
      } else {
        throw InvalidArgument("unknown noise sign '" + noise_sign +
                              "' (valid: subtract, add)");
      }
      if (spec.strategy.variant == MaskVariant::kRiseBilinearNoiseFill && stats.empty()) {
        throw InvalidArgument("--strategy noisefill needs --stats");
      }
      return 0;
    });
    if (!stats.empty()) {
      const Corpus corpus = load_corpus(stats);
      if (!corpus.mean || !corpus.stddev) {
        throw FormatError(stats + ": manifest has no statistics");
      }
      spec.strategy.fill_mean = corpus.mean;
      spec.strategy.fill_std = corpus.stddev;
    }
    spec.rng = {seed, 0};
    return spec;
  }
};

UncertaintyAggregation parse_aggregation(const std::string& name) {
  if (name == "mean") return UncertaintyAggregation::kMean;
  if (name == "median") return UncertaintyAggregation::kMedian;
  throw UsageError("unknown aggregation '" + name + "' (valid: mean, median)");
}

void write_render(const fs::path& path, const Grid& grid, const Image* overlay) {
  write_netpbm(path, render_heatmap(grid, overlay));
}

// --- explain ---------------------------------------------------------------

struct ExplainFlags {
  std::string image;
  std::string out_dir = ".";
  std::string estimator = "one-pass";
  bool per_mask = false;
  bool urelax = false;
  std::string aggregation = "median";
  double gamma = 1.0;
  bool render = false;
  bool overlay = false;
  std::size_t chunk = 32;
  ExtractorFlags extractor;
  MaskFlags masks;
};

int cmd_explain(const ExplainFlags& f, std::ostream& out) {
  UrelaxPolicy policy;
  if (f.urelax) {
    policy.aggregation = parse_aggregation(f.aggregation);
    policy.gamma = f.gamma;
    as_usage([&] { policy.validate(); return 0; });
  }
  if (f.estimator != "one-pass" && f.estimator != "two-pass") {
    throw UsageError("unknown estimator '" + f.estimator + "' (valid: one-pass, two-pass)");
  }
  const MaskBatchSpec spec = f.masks.make();
  // Inputs are validated before anything is written.
  const Image image = read_netpbm(f.image);
  as_usage([&] { spec.strategy.validate(image.height(), image.width()); return 0; });
  const auto extractor = f.extractor.make();

  RelaxOptions options;
  options.normalization = f.per_mask ? UncertaintyNormalization::kPerMask
                                : UncertaintyNormalization::kWeightedSample;
  options.chunk_size = f.chunk;
  const Explanation e = f.estimator == "one-pass"
                            ? relax_one_pass(image, *extractor, spec, options)
                            : relax_two_pass(image, *extractor, spec, options);

  const fs::path dir(f.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_tensor_file(dir / "importance.rlxt", grid_to_tensor(e.importance));
  write_tensor_file(dir / "uncertainty.rlxt", grid_to_tensor(e.uncertainty));
  write_tensor_file(dir / "weighted_importance.rlxt", grid_to_tensor(e.weighted_importance));
  write_tensor_file(dir / "mask_weight.rlxt", grid_to_tensor(e.mask_weight));
  const Image* overlay = f.overlay ? &image : nullptr;
  if (f.render) {
    write_render(dir / "importance.ppm", e.importance, overlay);
    write_render(dir / "uncertainty.ppm", e.uncertainty, overlay);
  }
  std::size_t kept = 0;
  if (f.urelax) {
    const UrelaxResult filtered = urelax_filter(e, policy);
    kept = filtered.kept;
    write_tensor_file(dir / "urelax.rlxt", grid_to_tensor(filtered.importance));
    if (f.render) write_render(dir / "urelax.ppm", filtered.importance, overlay);
  }
  out << "masks " << e.n_masks << " seed " << e.seed << " digest " << e.config_digest;
  if (e.zero_norm_count > 0) out << " zero_norm " << e.zero_norm_count;
  if (f.urelax) out << " kept " << kept;
  out << "\n";
  return kExitOk;
}

// --- filter ----------------------------------------------------------------

struct FilterFlags {
  std::string importance;
  std::string uncertainty;
  std::string out = "urelax.rlxt";
  std::string aggregation = "median";
  double gamma = 1.0;
};

int cmd_filter(const FilterFlags& f, std::ostream& out) {
  UrelaxPolicy policy;
  policy.aggregation = parse_aggregation(f.aggregation);
  policy.gamma = f.gamma;
  as_usage([&] { policy.validate(); return 0; });
  Explanation e;
  e.importance = tensor_to_grid(read_tensor_file(f.importance));
  e.uncertainty = tensor_to_grid(read_tensor_file(f.uncertainty));
  if (!e.importance.same_shape(e.uncertainty)) {
    throw InvalidArgument("importance and uncertainty differ in shape");
  }
  const UrelaxResult r = urelax_filter(e, policy);
  write_tensor_file(f.out, grid_to_tensor(r.importance));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", r.threshold);
  out << "threshold " << buf << " kept " << r.kept << " of " << e.importance.size() << "\n";
  return kExitOk;
}

// --- evaluate --------------------------------------------------------------

struct EvaluateFlags {
  std::string corpus;
  std::string methods = "relax,random";
  std::string metrics = "pointing,topk,rank";
  std::string out = "scores.csv";
  int repeats = 3;
  int limit = 0;
  std::size_t topk = 0;
  int bins = 10;
  std::string relax_map = "weighted";
  std::string aggregation = "median";
  double gamma = 1.0;
  std::string saliency_mode = "fd";
  double fd_step = 1e-3;
  int smoothgrad_samples = 25;
  double smoothgrad_sigma = 0.1;
  ExtractorFlags extractor;
  MaskFlags masks;
};

int cmd_evaluate(const EvaluateFlags& f, std::ostream& out) {
  EvalConfig config;
  as_usage([&] {
    config.methods.clear();
    for (const auto& m : split(f.methods, ',')) config.methods.push_back(parse_eval_method(m));
    config.metrics.clear();
    for (const auto& m : split(f.metrics, ',')) config.metrics.push_back(parse_eval_metric(m));
    config.repeats = f.repeats;
    config.topk = f.topk;
    config.bins = f.bins;
    if (f.relax_map == "importance") {
      config.relax_map = RelaxMap::kImportance;
    } else if (f.relax_map == "weighted") {
      config.relax_map = RelaxMap::kWeighted;
    } else {
      throw InvalidArgument("unknown relax map '" + f.relax_map +
                            "' (valid: importance, weighted)");
    }
    config.urelax.aggregation = parse_aggregation(f.aggregation);
    config.urelax.gamma = f.gamma;
    if (f.saliency_mode == "fd") {
      config.saliency.mode = GradientMode::kFiniteDifference;
    } else if (f.saliency_mode == "analytic") {
      config.saliency.mode = GradientMode::kAnalytic;
    } else {
      throw InvalidArgument("unknown saliency mode '" + f.saliency_mode +
                            "' (valid: fd, analytic)");
    }
    config.saliency.fd_step = f.fd_step;
    config.saliency.smoothgrad = SmoothGradParams{f.smoothgrad_samples, f.smoothgrad_sigma, {}};
    if (f.limit < 0) throw InvalidArgument("--limit must be non-negative");
    return 0;
  });
  const MaskBatchSpec spec = f.masks.make();
  config.n_masks = spec.n_masks;
  config.strategy = spec.strategy;
  config.seed = f.masks.seed;
  as_usage([&] { config.validate(); return 0; });

  const Corpus corpus = load_corpus(f.corpus);
  std::span<const LabeledImage> items = corpus.items;
  if (f.limit > 0 && static_cast<std::size_t>(f.limit) < items.size()) {
    items = items.first(static_cast<std::size_t>(f.limit));
  }
  const auto extractor = f.extractor.make();
  const ScoreTable table = evaluate_corpus(items, *extractor, config);
  write_score_table(f.out, table);
  out << format_score_table(table);
  return kExitOk;
}

// --- bound -----------------------------------------------------------------

struct BoundFlags {
  double delta = 0.01;
  double t = 0.03;
  std::string curve_image;
  std::string grid = "250,500,1000,3000";
  int repeats = 5;
  int reference_n = 10000;
  int reference_runs = 10;
  ExtractorFlags extractor;
  MaskFlags masks;
};

int cmd_bound(const BoundFlags& f, std::ostream& out) {
  const BoundQuery query{f.delta, f.t};
  const std::int64_t n = as_usage([&] { return mask_count_bound(query); });
  if (f.curve_image.empty()) {
    out << n << "\n";
    return kExitOk;
  }
  BoundRunConfig config;
  as_usage([&] {
    config.n_grid.clear();
    for (const auto& v : split(f.grid, ',')) {
      std::size_t used = 0;
      const int value = std::stoi(v, &used);
      if (used != v.size() || value < 1) throw InvalidArgument("bad grid entry '" + v + "'");
      config.n_grid.push_back(value);
    }
    return 0;
  });
  config.n_repeats = f.repeats;
  config.reference_n = f.reference_n;
  config.reference_runs = f.reference_runs;
  config.delta = f.delta;
  const MaskBatchSpec spec = f.masks.make();
  config.strategy = spec.strategy;
  config.reference_seed = f.masks.seed + 1;
  config.repeat_seed = f.masks.seed + 1000;
  const Image image = read_netpbm(f.curve_image);
  const auto extractor = f.extractor.make();
  const auto rows = bound_verification_run(image, *extractor, config);
  out << "n_masks,mean_error,max_error,bound_t\n";
  char buf[128];
  for (const auto& row : rows) {
    const double worst = *std::max_element(row.errors.begin(), row.errors.end());
    std::snprintf(buf, sizeof(buf), "%d,%.6g,%.6g,%.6g\n", row.n_masks, row.mean_error,
                  worst, row.bound_t);
    out << buf;
  }
  return kExitOk;
}

// --- corpus ----------------------------------------------------------------

struct CorpusFlags {
  std::string out;
  int n = 200;
  std::uint64_t seed = 0;
  int size = 64;
  int channels = 1;
  int objects = 1;
  std::string shape;
  std::string texture;
  double contrast = 0.3;
  int min_size = 14;
  int max_size = 30;
  double background_max = 0.0;
};

int cmd_corpus(const CorpusFlags& f, std::ostream& out) {
  SceneSpec spec;
  as_usage([&] {
    spec.height = spec.width = f.size;
    spec.channels = f.channels;
    spec.n_objects = f.objects;
    if (!f.shape.empty()) spec.shape = parse_shape(f.shape);
    if (!f.texture.empty()) spec.texture = parse_texture(f.texture);
    spec.contrast = f.contrast;
    spec.min_size = f.min_size;
    spec.max_size = f.max_size;
    spec.background_max = f.background_max;
    spec.rng = {f.seed, 0};
    spec.validate();
    if (f.n < 1) throw InvalidArgument("--n must be at least 1");
    return 0;
  });
  const Corpus corpus = generate_corpus(spec, f.n, f.out);
  out << "wrote " << corpus.entries.size() << " scenes to " << f.out << "\n";
  return kExitOk;
}

// --- render ----------------------------------------------------------------

struct RenderFlags {
  std::string grid;
  std::string out = "heatmap.ppm";
  std::string overlay;
};

int cmd_render(const RenderFlags& f, std::ostream&) {
  const Grid grid = tensor_to_grid(read_tensor_file(f.grid));
  for (double v : grid.values()) {
    if (!std::isfinite(v)) throw InvalidArgument("grid has non-finite values");
  }
  if (f.overlay.empty()) {
    write_render(f.out, grid, nullptr);
  } else {
    const Image base = read_netpbm(f.overlay);
    write_render(f.out, grid, &base);
  }
  return kExitOk;
}

}  // namespace

void parse_mask_option(const std::string& text, MaskBatchSpec& spec) {
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("mask option '" + item + "' is not key=value");
    }
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    std::size_t used = 0;
    try {
      if (key == "n") {
        spec.n_masks = std::stoi(value, &used);
      } else if (key == "h") {
        spec.strategy.grid_h = std::stoi(value, &used);
      } else if (key == "w") {
        spec.strategy.grid_w = std::stoi(value, &used);
      } else if (key == "p") {
        spec.strategy.p = std::stod(value, &used);
      } else if (key == "block") {
        spec.strategy.block = std::stoi(value, &used);
      } else {
        throw InvalidArgument("unknown mask option '" + key + "' (valid: n, h, w, p, block)");
      }
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != value.size() || value.empty()) {
      throw InvalidArgument("bad value for mask option '" + key + "': '" + value + "'");
    }
  }
  if (spec.n_masks < 2) throw InvalidArgument("mask count must be at least 2");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Representation explanations by masking", "relax");
  app.require_subcommand(1);

  ExplainFlags explain;
  auto* c_explain = app.add_subcommand("explain", "explain one image");
  c_explain->add_option("--config", kConfigHelp);
  c_explain->add_option("--image", explain.image, "PGM/PPM image");
  c_explain->add_option("--out", explain.out_dir, "output directory")->capture_default_str();
  c_explain->add_option("--estimator", explain.estimator, "one-pass or two-pass")
      ->capture_default_str();
  c_explain->add_flag("--per-mask-uncertainty", explain.per_mask,
                      "uncertainty as (1/N) sum M (s - R)^2");
  c_explain->add_flag("--urelax", explain.urelax, "also write the uncertainty-filtered map");
  c_explain->add_option("--aggregation", explain.aggregation, "mean or median")
      ->capture_default_str();
  c_explain->add_option("--gamma", explain.gamma, "threshold scale")->capture_default_str();
  c_explain->add_flag("--render", explain.render, "write PPM heatmaps");
  c_explain->add_flag("--overlay", explain.overlay, "blend heatmaps over the image");
  c_explain->add_option("--chunk", explain.chunk, "masks per extractor call")
      ->capture_default_str();
  explain.extractor.add(c_explain);
  explain.masks.add(c_explain);

  FilterFlags filter;
  auto* c_filter = app.add_subcommand("filter", "U-RELAX filter of saved grids");
  c_filter->add_option("--config", kConfigHelp);
  c_filter->add_option("--importance", filter.importance, "importance tensor");
  c_filter->add_option("--uncertainty", filter.uncertainty, "uncertainty tensor");
  c_filter->add_option("--out", filter.out, "output tensor")->capture_default_str();
  c_filter->add_option("--aggregation", filter.aggregation, "mean or median")
      ->capture_default_str();
  c_filter->add_option("--gamma", filter.gamma, "threshold scale")->capture_default_str();

  EvaluateFlags evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "score methods on a corpus");
  c_eval->add_option("--config", kConfigHelp);
  c_eval->add_option("--corpus", evaluate.corpus, "corpus directory or manifest");
  c_eval->add_option("--methods", evaluate.methods,
                     "comma list of relax, urelax, saliency, smoothgrad, random")
      ->capture_default_str();
  c_eval->add_option("--metrics", evaluate.metrics,
                     "comma list of pointing, topk, rank, monotonicity")
      ->capture_default_str();
  c_eval->add_option("--out", evaluate.out, "score table path")->capture_default_str();
  c_eval->add_option("--repeats", evaluate.repeats, "repeats")->capture_default_str();
  c_eval->add_option("--limit", evaluate.limit, "use the first N images (0 = all)")
      ->capture_default_str();
  c_eval->add_option("--topk", evaluate.topk, "k for top-k (0 = |GT|)")->capture_default_str();
  c_eval->add_option("--bins", evaluate.bins, "monotonicity bins")->capture_default_str();
  c_eval->add_option("--relax-map", evaluate.relax_map, "importance or weighted")
      ->capture_default_str();
  c_eval->add_option("--aggregation", evaluate.aggregation, "U-RELAX aggregation")
      ->capture_default_str();
  c_eval->add_option("--gamma", evaluate.gamma, "U-RELAX threshold scale")
      ->capture_default_str();
  c_eval->add_option("--saliency-mode", evaluate.saliency_mode, "fd or analytic")
      ->capture_default_str();
  c_eval->add_option("--fd-step", evaluate.fd_step, "finite-difference step")
      ->capture_default_str();
  c_eval->add_option("--smoothgrad-samples", evaluate.smoothgrad_samples, "SmoothGrad M")
      ->capture_default_str();
  c_eval->add_option("--smoothgrad-sigma", evaluate.smoothgrad_sigma, "SmoothGrad sigma")
      ->capture_default_str();
  evaluate.extractor.add(c_eval);
  evaluate.masks.add(c_eval);

  BoundFlags bound;
  auto* c_bound = app.add_subcommand("bound", "masks needed for tolerance t at confidence 1-delta");
  c_bound->add_option("--config", kConfigHelp);
  c_bound->add_option("--delta", bound.delta, "failure probability")->capture_default_str();
  c_bound->add_option("--t", bound.t, "tolerance")->capture_default_str();
  c_bound->add_option("--curve-image", bound.curve_image,
                      "also measure the error curve on this image");
  c_bound->add_option("--grid", bound.grid, "mask counts of the curve")->capture_default_str();
  c_bound->add_option("--repeats", bound.repeats, "repeats per count")->capture_default_str();
  c_bound->add_option("--reference-n", bound.reference_n, "masks per reference run")
      ->capture_default_str();
  c_bound->add_option("--reference-runs", bound.reference_runs, "reference runs averaged")
      ->capture_default_str();
  bound.extractor.add(c_bound);
  bound.masks.add(c_bound);

  CorpusFlags corpus;
  auto* c_corpus = app.add_subcommand("corpus", "generate a synthetic corpus");
  c_corpus->add_option("--config", kConfigHelp);
  c_corpus->add_option("--out", corpus.out, "output directory");
  c_corpus->add_option("--n", corpus.n, "number of scenes")->capture_default_str();
  c_corpus->add_option("--seed", corpus.seed, "random seed")->capture_default_str();
  c_corpus->add_option("--size", corpus.size, "image side")->capture_default_str();
  c_corpus->add_option("--channels", corpus.channels, "1 or 3")->capture_default_str();
  c_corpus->add_option("--objects", corpus.objects, "objects per scene")->capture_default_str();
  c_corpus->add_option("--shape", corpus.shape, "rectangle or ellipse (default: random)");
  c_corpus->add_option("--texture", corpus.texture, "checker, stripes or noise (default: random)");
  c_corpus->add_option("--contrast", corpus.contrast, "minimum contrast")->capture_default_str();
  c_corpus->add_option("--min-size", corpus.min_size, "smallest object side")
      ->capture_default_str();
  c_corpus->add_option("--max-size", corpus.max_size, "largest object side")
      ->capture_default_str();
  c_corpus->add_option("--background-max", corpus.background_max, "brightest background")
      ->capture_default_str();

  RenderFlags render;
  auto* c_render = app.add_subcommand("render", "render a grid as a PPM heatmap");
  c_render->add_option("--config", kConfigHelp);
  c_render->add_option("--grid", render.grid, "tensor file");
  c_render->add_option("--out", render.out, "output PPM")->capture_default_str();
  c_render->add_option("--overlay", render.overlay, "blend over this image");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Prints help to `out` and parse errors to `err`.
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (CLI::App* sub : app.get_subcommands()) apply_config_file(*sub);
    if (*c_explain) check_required(*c_explain, {"--image"});
    if (*c_filter) check_required(*c_filter, {"--importance", "--uncertainty"});
    if (*c_eval) check_required(*c_eval, {"--corpus"});
    if (*c_corpus) check_required(*c_corpus, {"--out"});
    if (*c_render) check_required(*c_render, {"--grid"});
    if (*c_explain) return cmd_explain(explain, out);
    if (*c_filter) return cmd_filter(filter, out);
    if (*c_eval) return cmd_evaluate(evaluate, out);
    if (*c_bound) return cmd_bound(bound, out);
    if (*c_corpus) return cmd_corpus(corpus, out);
    if (*c_render) return cmd_render(render, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace relax
