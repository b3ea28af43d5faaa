#include "ccus/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

namespace ccus {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) return cells;
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view cell, std::size_t line_no, std::size_t col) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
    fail_data("line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) +
              ": '" + std::string(cell) + "' is not a number");
  if (!std::isfinite(v))
    fail_data("line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) +
              ": non-finite value");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_traces(std::ostream& out, const MultiChannelSignal& x) {
  out << "t";
  for (Index m = 0; m < x.n_channels(); ++m) out << ",ch" << (m + 1);
  out << '\n';
  for (Index n = 0; n < x.n_samples(); ++n) {
    out << n;
    for (Index m = 0; m < x.n_channels(); ++m) out << ',' << format_double(x(n, m));
    out << '\n';
  }
}

void write_traces(const std::filesystem::path& path, const MultiChannelSignal& x) {
  std::ofstream out(path);
  if (!out) fail_data("cannot open " + path.string() + " for writing");
  write_traces(out, x);
  if (!out) fail_data("failed writing " + path.string());
}

MultiChannelSignal read_traces(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) fail_data("traces file is empty");
  {
    const auto header = split(line);
    if (trim(header.front()) != "t")
      fail_data("line " + std::to_string(line_no) + ": header must start with 't'");
    width = header.size();
    if (width < 2) fail_data("line " + std::to_string(line_no) + ": no channel columns");
  }
  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != width)
      fail_data("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                " columns, found " + std::to_string(cells.size()));
    parse_cell(cells[0], line_no, 0);
    for (std::size_t c = 1; c < width; ++c) values.push_back(parse_cell(cells[c], line_no, c));
    ++rows;
  }
  if (rows == 0) fail_data("traces file has a header but no samples");
  const auto cols = static_cast<Index>(width - 1);
  Matrix data(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      data(r, c) = values[static_cast<std::size_t>(r * cols + c)];
  return MultiChannelSignal(std::move(data));
}

MultiChannelSignal read_traces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open " + path.string());
  try {
    return read_traces(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  out << "seed,fraction,r2,wa,rss,iters,wall_ms\n";
  for (const auto& r : rows)
    out << r.seed << ',' << format_double(r.fraction) << ',' << format_double(r.r2) << ','
        << format_double(r.wa) << ',' << format_double(r.rss) << ',' << r.iters << ','
        << format_double(r.wall_ms) << '\n';
}

namespace {

Json vector_json(const Vector& v) {
  Json j = Json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

}  // namespace

Json to_json(const MultiChannelSignal& x) {
  Json j = Json::array();
  for (Index m = 0; m < x.n_channels(); ++m) j.push_back(vector_json(x.channel(m)));
  return j;
}

Json to_json(const ChannelShuffle& s) {
  Json j = Json::array();
  for (const auto& row : s.assignment()) j.push_back(row);
  return j;
}

Json to_json(const RfrpReport& r) {
  Json j{{"property", to_string(r.property)},
         {"K", r.K},
         {"mode", to_string(r.mode)},
         {"n_submatrices_checked", r.n_submatrices_checked},
         {"passed", r.passed},
         {"witness", nullptr}};
  if (r.witness)
    j["witness"] = {{"rows", r.witness->rows}, {"cols", r.witness->cols}, {"rank", r.witness->rank}};
  return j;
}

Json to_json(const EvalReport& r) {
  Json j{{"r_squared", r.r_squared},
         {"weighted_accuracy", nullptr},
         {"relabeling", r.relabeling},
         {"n_correct_rows", r.n_correct_rows}};
  if (r.weighted_accuracy) j["weighted_accuracy"] = *r.weighted_accuracy;
  return j;
}

Json to_json(const SupportEstimate& s) {
  return {{"indices", s.indices},
          {"selection_probabilities", vector_json(s.selection_probabilities)},
          {"truncated", s.truncated}};
}

Json to_json(const RecoveryResult& r) {
  Json coefs = Json::array();
  for (const auto& c : r.coefficients) coefs.push_back(vector_json(c));
  Json j{{"reconstructed", to_json(r.reconstructed)},
         {"reassigned", to_json(r.reassigned)},
         {"initial_fit", to_json(r.initial_fit)},
         {"estimated_shuffle", to_json(r.estimated_shuffle)},
         {"support", to_json(r.support)},
         {"coefficients", coefs},
         {"rss", r.rss},
         {"per_iteration_rss", r.per_iteration_rss},
         {"best_iteration", r.best_iteration},
         {"channel_relabeling", r.channel_relabeling},
         {"ambiguous_channels", r.ambiguous_channels},
         {"rfrp_gate", nullptr},
         {"warnings", r.warnings}};
  if (r.rfrp_gate) j["rfrp_gate"] = to_json(*r.rfrp_gate);
  return j;
}

Json to_json(const OracleResult& r) {
  Json sols = Json::array();
  for (const auto& s : r.solutions)
    sols.push_back({{"signal", to_json(s.signal)},
                    {"shuffle", to_json(s.shuffle)},
                    {"subspace_of", s.subspace_of}});
  return {{"solutions", sols},
          {"n_solutions", r.solutions.size()},
          {"unique_up_to_relabeling", r.unique_up_to_relabeling},
          {"n_distinct_signals", r.n_distinct_signals},
          {"n_candidates", r.n_candidates}};
}

MultiChannelSignal signal_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    fail_data("signal must be a nonempty array of channel arrays");
  const auto m = static_cast<Index>(j.size());
  const auto n = static_cast<Index>(j.front().size());
  Matrix data(n, m);
  for (Index c = 0; c < m; ++c) {
    const Json& ch = j[static_cast<std::size_t>(c)];
    if (!ch.is_array() || static_cast<Index>(ch.size()) != n)
      fail_data("signal channels differ in length");
    for (Index i = 0; i < n; ++i) {
      const Json& v = ch[static_cast<std::size_t>(i)];
      if (!v.is_number()) fail_data("signal entries must be numbers");
      data(i, c) = v.get<double>();
    }
  }
  return MultiChannelSignal(std::move(data));
}

ChannelShuffle shuffle_from_json(const Json& j, int n_channels) {
  if (!j.is_array()) fail_data("shuffle must be an array of permutations");
  std::vector<Permutation> rows;
  for (const auto& row : j) {
    if (!row.is_array()) fail_data("shuffle rows must be arrays");
    rows.push_back(row.get<Permutation>());
  }
  ChannelShuffle s(n_channels, std::move(rows));
  if (!validate_shuffle(s)) fail_data("shuffle rows are not permutations");
  return s;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) fail_data("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail_data(path.string() + ": " + e.what());
  }
}

}  // namespace ccus
