#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccus/baseline.hpp"
#include "ccus/benchmark.hpp"
#include "ccus/io.hpp"
#include "ccus/pipeline.hpp"
#include "ccus/rfrp.hpp"
#include "ccus/synth.hpp"

namespace ccus::cli {

struct RfrpRequest {
  RfrpProperty property = RfrpProperty::kxk_square;
  RfrpMode mode = RfrpMode::randomized;  ///< exhaustive applies to k_rfrp only
  Index k_max = 10;
  std::uint64_t budget = 1'000;
};

/// Everything a subcommand can be configured with. Seeds of the individual
/// stages are derived from `seed`.
struct CliConfig {
  std::uint64_t seed = 0;
  SynthSpec synth;
  double kernel_rise = 1.0;
  double kernel_decay = 10.0;
  double shuffle_fraction = 0.0;
  ShuffleMode shuffle_mode = ShuffleMode::pairwise_swap;
  PipelineConfig pipeline;
  AlsConfig als;
  RfrpRequest rfrp;
  std::vector<double> benchmark_fractions{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  int benchmark_replicates = 100;
};

/// Applies a JSON document on top of the defaults. Unknown sections or keys
/// and ill-typed values raise Error(config).
CliConfig parse_config(const Json& doc);

/// One line per key: "section.key  default  description".
std::string config_reference();

/// The effective configuration, in the layout parse_config accepts.
Json config_to_json(const CliConfig& cfg);

}  // namespace ccus::cli
