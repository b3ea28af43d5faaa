#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccus/metrics.hpp"
#include "ccus/pipeline.hpp"
#include "ccus/rfrp.hpp"
#include "ccus/signal_model.hpp"

namespace ccus {

using Json = nlohmann::json;

// Traces CSV: header "t,ch1,...,chM", then one row per sample holding the
// sample index followed by M values written with 17 significant digits.
// Dictionaries use the same layout with one column per atom.

void write_traces(std::ostream& out, const MultiChannelSignal& x);
void write_traces(const std::filesystem::path& path, const MultiChannelSignal& x);

/// Parses a traces CSV. Malformed rows, non-numeric or non-finite cells and
/// ragged rows raise Error(data) naming the offending line.
MultiChannelSignal read_traces(std::istream& in);
MultiChannelSignal read_traces(const std::filesystem::path& path);

/// Shortest-round-trip-safe text for a double (17 significant digits).
std::string format_double(double v);

struct BenchmarkRow {
  std::uint64_t seed = 0;
  double fraction = 0.0;
  double r2 = 0.0;
  double wa = 0.0;
  double rss = 0.0;
  int iters = 0;
  double wall_ms = 0.0;
};

/// Header "seed,fraction,r2,wa,rss,iters,wall_ms".
void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);

Json to_json(const MultiChannelSignal& x);  ///< channel-major nested arrays
Json to_json(const ChannelShuffle& s);      ///< one permutation per row
Json to_json(const RfrpReport& r);
Json to_json(const EvalReport& r);
Json to_json(const SupportEstimate& s);
Json to_json(const RecoveryResult& r);
Json to_json(const OracleResult& r);

MultiChannelSignal signal_from_json(const Json& j);
ChannelShuffle shuffle_from_json(const Json& j, int n_channels);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

}  // namespace ccus
