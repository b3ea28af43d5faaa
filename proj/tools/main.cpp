// ccus: command-line front end.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ccus/baseline.hpp"
#include "ccus/benchmark.hpp"
#include "ccus/io.hpp"
#include "ccus/metrics.hpp"
#include "ccus/pipeline.hpp"
#include "ccus/random.hpp"
#include "ccus/rfrp.hpp"
#include "ccus/synth.hpp"
#include "cli_config.hpp"

namespace fs = std::filesystem;
using namespace ccus;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out;
  std::string traces;
  std::string dict;
  std::string truth;
};

cli::CliConfig load_config(const Options& opt) {
  Json doc = Json::object();
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) fail_config("cannot open " + opt.config_path);
    try {
      doc = Json::parse(in);
    } catch (const Json::exception& e) {
      fail_config(opt.config_path + ": " + e.what());
    }
  }
  cli::CliConfig cfg = cli::parse_config(doc);
  if (opt.seed) cfg.seed = *opt.seed;
  if (cfg.synth.dictionary_mode == DictionaryMode::circulant_from_kernel)
    cfg.synth.kernel = calcium_kernel(cfg.synth.n, cfg.kernel_rise, cfg.kernel_decay);
  return cfg;
}

void emit_json(const Options& opt, const Json& j) {
  if (opt.out.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_json(opt.out, j);
}

fs::path out_dir(const Options& opt) {
  if (opt.out.empty()) fail_config("--out directory is required");
  std::error_code ec;
  fs::create_directories(opt.out, ec);
  if (ec) fail_data("cannot create " + opt.out + ": " + ec.message());
  return opt.out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail_data("cannot open " + path.string() + " for writing");
  out << text;
}

Json betas_json(const std::vector<Vector>& betas) {
  Json j = Json::array();
  for (const auto& b : betas) j.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  return j;
}

std::vector<Vector> betas_from_json(const Json& j) {
  if (!j.is_array()) fail_data("betas must be an array of coefficient arrays");
  std::vector<Vector> out;
  for (const auto& b : j) {
    if (!b.is_array()) fail_data("betas must be an array of coefficient arrays");
    Vector v(static_cast<Index>(b.size()));
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (!b[i].is_number()) fail_data("coefficients must be numbers");
      v(static_cast<Index>(i)) = b[i].get<double>();
    }
    out.push_back(std::move(v));
  }
  return out;
}

const Json& member(const Json& j, const char* key, const std::string& file) {
  if (!j.is_object() || !j.contains(key)) fail_data(file + " lacks \"" + key + "\"");
  return j.at(key);
}

struct Generated {
  SynthInstance inst;
  ChannelShuffle shuffle;
  MultiChannelSignal observed;
};

Generated generate(const cli::CliConfig& cfg) {
  SynthSpec spec = cfg.synth;
  spec.seed = cfg.seed;
  Generated g{synth_instance(spec), {}, {}};
  g.shuffle = random_shuffle(spec.n, spec.m,
                             {cfg.shuffle_fraction, derive_seed(cfg.seed, 1), cfg.shuffle_mode});
  g.observed = apply_shuffle(g.inst.x, g.shuffle);
  return g;
}

PipelineConfig seeded_pipeline(const cli::CliConfig& cfg) {
  PipelineConfig p = cfg.pipeline;
  p.seed = cfg.seed;
  p.stability.seed = cfg.seed;
  p.mm.seed = cfg.seed;
  return p;
}

void cmd_generate(const Options& opt) {
  const auto cfg = load_config(opt);
  const fs::path dir = out_dir(opt);
  const Generated g = generate(cfg);
  write_traces(dir / "traces.csv", g.observed);
  write_traces(dir / "dictionary.csv", MultiChannelSignal(g.inst.dict.matrix));
  Json truth{{"seed", cfg.seed},
             {"signal", to_json(g.inst.x)},
             {"clean", to_json(g.inst.clean)},
             {"betas", betas_json(g.inst.betas)},
             {"shuffle", to_json(g.shuffle)},
             {"config", cli::config_to_json(cfg)}};
  write_json(dir / "truth.json", truth);
}

void cmd_unshuffle(const Options& opt) {
  const auto cfg = load_config(opt);
  const MultiChannelSignal y = read_traces(opt.traces);
  const Matrix dict = read_traces(opt.dict).data();
  const RecoveryResult res = run_pipeline(y, dict, seeded_pipeline(cfg));
  Json out = to_json(res);
  if (!opt.truth.empty()) {
    const Json truth = read_json(opt.truth);
    const MultiChannelSignal x = signal_from_json(member(truth, "signal", opt.truth));
    const ChannelShuffle s =
        shuffle_from_json(member(truth, "shuffle", opt.truth), static_cast<int>(x.n_channels()));
    if (x.n_samples() != y.n_samples() || x.n_channels() != y.n_channels())
      fail_data(opt.truth + " does not match the traces in shape");
    out["evaluation"] = to_json(evaluate(x, s, res.reconstructed, res.estimated_shuffle));
  }
  emit_json(opt, out);
}

void cmd_benchmark(const Options& opt) {
  const auto cfg = load_config(opt);
  const fs::path dir = out_dir(opt);
  BenchmarkSpec spec;
  spec.fractions = cfg.benchmark_fractions;
  spec.replicates = cfg.benchmark_replicates;
  spec.synth = cfg.synth;
  spec.shuffle_mode = cfg.shuffle_mode;
  spec.pipeline = cfg.pipeline;
  spec.seed = cfg.seed;
  const BenchmarkResult res = run_benchmark(spec, opt.jobs);
  std::vector<BenchmarkRow> rows;
  for (const auto& r : res.records) rows.push_back(r.row);
  {
    std::ofstream out(dir / "benchmark.csv");
    if (!out) fail_data("cannot write " + (dir / "benchmark.csv").string());
    write_benchmark_csv(out, rows);
  }
  {
    std::ofstream out(dir / "summary.csv");
    if (!out) fail_data("cannot write " + (dir / "summary.csv").string());
    write_summary_csv(out, res.summary);
  }
  write_text(dir / "benchmark.svg", benchmark_svg(res.summary));
}

void cmd_verify_rfrp(const Options& opt) {
  const auto cfg = load_config(opt);
  Matrix dict;
  if (!opt.dict.empty()) {
    dict = read_traces(opt.dict).data();
  } else {
    SynthSpec spec = cfg.synth;
    spec.seed = cfg.seed;
    dict = synth_instance(spec).dict.matrix;
  }
  if (cfg.rfrp.mode == RfrpMode::exhaustive && cfg.rfrp.property != RfrpProperty::k_rfrp)
    fail_config("exhaustive mode is available for k_rfrp only");
  // a K-RFRP basis needs at least as many rows as columns
  const Index k_first = cfg.rfrp.property == RfrpProperty::k_rfrp ? dict.cols() : 1;
  if (cfg.rfrp.k_max < k_first)
    fail_config("rfrp.k_max must be at least " + std::to_string(k_first));
  Json reports = Json::array();
  bool passed = true;
  for (Index k = k_first; k <= cfg.rfrp.k_max; ++k) {
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
    RfrpReport r;
    switch (cfg.rfrp.property) {
      case RfrpProperty::k_rfrp:
        r = check_k_rfrp(dict, k, cfg.rfrp.mode, cfg.rfrp.budget, seed, opt.jobs);
        break;
      case RfrpProperty::kxk_square:
        r = check_kxk_rfrp(dict, k, cfg.rfrp.budget, seed, opt.jobs);
        break;
      case RfrpProperty::kxk_lower:
        r = check_kxk_lower_rfrp(dict, k, cfg.rfrp.budget, seed, opt.jobs);
        break;
    }
    passed = passed && r.passed;
    reports.push_back(to_json(r));
  }
  emit_json(opt, {{"passed", passed}, {"reports", reports}});
}

void cmd_oracle(const Options& opt) {
  const auto cfg = load_config(opt);
  MultiChannelSignal y;
  Matrix dict;
  std::vector<Vector> betas;
  if (!opt.traces.empty() || !opt.dict.empty() || !opt.truth.empty()) {
    if (opt.traces.empty() || opt.dict.empty() || opt.truth.empty())
      fail_config("a loaded instance needs --traces, --dict and --truth");
    y = read_traces(opt.traces);
    dict = read_traces(opt.dict).data();
    betas = betas_from_json(member(read_json(opt.truth), "betas", opt.truth));
  } else {
    Generated g = generate(cfg);
    y = std::move(g.observed);
    dict = std::move(g.inst.dict.matrix);
    betas = std::move(g.inst.betas);
  }
  if (static_cast<Index>(betas.size()) != y.n_channels())
    fail_data("need one coefficient vector per channel");
  std::vector<Matrix> subspaces;
  for (const auto& b : betas) {
    if (b.size() != dict.cols()) fail_data("coefficient vector length differs from the dictionary");
    std::vector<int> support;
    for (Index j = 0; j < b.size(); ++j)
      if (b(j) != 0.0) support.push_back(static_cast<int>(j));
    subspaces.push_back(select_columns(dict, support));
  }
  emit_json(opt, to_json(brute_force_oracle(y, subspaces)));
}

void cmd_baseline(const Options& opt) {
  const auto cfg = load_config(opt);
  const fs::path dir = out_dir(opt);
  const MultiChannelSignal y = read_traces(opt.traces);
  Matrix corrected(y.n_samples(), y.n_channels());
  Matrix baseline(y.n_samples(), y.n_channels());
  for (Index m = 0; m < y.n_channels(); ++m) {
    const AlsResult r = als_baseline(Vector(y.channel(m)), cfg.als);
    corrected.col(m) = r.corrected;
    baseline.col(m) = r.baseline;
  }
  write_traces(dir / "corrected.csv", MultiChannelSignal(std::move(corrected)));
  write_traces(dir / "baseline.csv", MultiChannelSignal(std::move(baseline)));
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::numerical: return 4;
  }
  return 4;
}

const char* kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::numerical: return "numerical";
  }
  return "numerical";
}

int report(ErrorKind kind, const std::string& message) {
  std::cerr << Json{{"error", kind_name(kind)}, {"message", message}}.dump() << '\n';
  return exit_code(kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recovery of multi-channel signals whose samples were shuffled across channels"};
  app.require_subcommand(1);
  Options opt;
  const std::string keys = cli::config_reference();

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "master seed (overrides the config)");
    sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->footer(keys);
  };

  auto* gen = app.add_subcommand("generate", "write shuffled synthetic traces, dictionary and ground truth");
  common(gen);
  gen->add_option("--out", opt.out, "output directory (traces.csv, dictionary.csv, truth.json)")->required();

  auto* uns = app.add_subcommand("unshuffle", "recover the signal from shuffled traces");
  common(uns);
  uns->add_option("--traces", opt.traces, "observed traces CSV")->required();
  uns->add_option("--dict", opt.dict, "dictionary CSV, one column per atom")->required();
  uns->add_option("--truth", opt.truth, "ground truth JSON; adds an evaluation");
  uns->add_option("--out", opt.out, "result JSON (stdout when omitted)");

  auto* bench = app.add_subcommand("benchmark", "Monte Carlo sweep over shuffle fractions");
  common(bench);
  bench->add_option("--out", opt.out, "output directory (benchmark.csv, summary.csv, benchmark.svg)")->required();

  auto* rfrp = app.add_subcommand("verify-rfrp", "check a rank property of a dictionary for K = 1..k_max");
  common(rfrp);
  rfrp->add_option("--dict", opt.dict, "dictionary CSV (default: the configured synthetic one)");
  rfrp->add_option("--out", opt.out, "report JSON (stdout when omitted)");

  auto* orc = app.add_subcommand("oracle", "enumerate every shuffle of a small instance");
  common(orc);
  orc->add_option("--traces", opt.traces, "observed traces CSV of a loaded instance");
  orc->add_option("--dict", opt.dict, "dictionary CSV of a loaded instance");
  orc->add_option("--truth", opt.truth, "truth JSON holding the coefficients (\"betas\")");
  orc->add_option("--out", opt.out, "result JSON (stdout when omitted)");

  auto* base = app.add_subcommand("baseline", "asymmetric least squares baseline correction");
  common(base);
  base->add_option("--traces", opt.traces, "traces CSV")->required();
  base->add_option("--out", opt.out, "output directory (corrected.csv, baseline.csv)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(ErrorKind::config, e.what());
  }

  try {
    if (gen->parsed()) cmd_generate(opt);
    else if (uns->parsed()) cmd_unshuffle(opt);
    else if (bench->parsed()) cmd_benchmark(opt);
    else if (rfrp->parsed()) cmd_verify_rfrp(opt);
    else if (orc->parsed()) cmd_oracle(opt);
    else if (base->parsed()) cmd_baseline(opt);
  } catch (const Error& e) {
    return report(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report(ErrorKind::data, e.what());
  }
  return 0;
}
