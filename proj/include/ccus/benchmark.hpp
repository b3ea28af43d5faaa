#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccus/io.hpp"
#include "ccus/pipeline.hpp"
#include "ccus/synth.hpp"

namespace ccus {

struct BenchmarkSpec {
  std::vector<double> fractions{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  int replicates = 100;
  SynthSpec synth;  ///< its seed is replaced per replicate
  ShuffleMode shuffle_mode = ShuffleMode::pairwise_swap;
  PipelineConfig pipeline;  ///< its seeds are replaced per replicate
  std::uint64_t seed = 0;
};

/// One pipeline run plus the two reference fits on the same instance.
struct BenchmarkRecord {
  BenchmarkRow row;
  double mm_only_r2 = 0.0;   ///< robust fit before any reassignment
  double ls_clean_r2 = 0.0;  ///< least squares on the unshuffled traces, same support
};

struct BenchmarkSummary {
  double fraction = 0.0;
  double median_r2 = 0.0;
  double median_wa = 0.0;
  double median_mm_only_r2 = 0.0;
  double median_ls_clean_r2 = 0.0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRecord> records;  ///< fraction-major, replicates in order
  std::vector<BenchmarkSummary> summary;
};

/// Replicate r draws its instance from seed derive_seed(spec.seed, r) and
/// keeps it across fractions; only the shuffle changes with the fraction.
/// Replicates run on up to `jobs` threads; the result does not depend on it.
BenchmarkResult run_benchmark(const BenchmarkSpec& spec, int jobs = 1);

/// Median of a nonempty sample (mean of the middle pair for even sizes).
double median(std::vector<double> v);

void write_summary_csv(std::ostream& out, const std::vector<BenchmarkSummary>& summary);

/// Two panels, median R^2 and median WA against the shuffle fraction, with
/// least squares on clean traces dashed and the robust fit alone dash-dotted.
std::string benchmark_svg(const std::vector<BenchmarkSummary>& summary);

}  // namespace ccus
