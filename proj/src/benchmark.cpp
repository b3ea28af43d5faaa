#include "ccus/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "ccus/metrics.hpp"
#include "ccus/parallel.hpp"
#include "ccus/random.hpp"

namespace ccus {

double median(std::vector<double> v) {
  if (v.empty()) fail_data("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

BenchmarkRecord run_one(const BenchmarkSpec& spec, const SynthInstance& inst,
                        std::uint64_t seed, std::size_t fraction_index) {
  const double fraction = spec.fractions[fraction_index];
  const auto start = std::chrono::steady_clock::now();
  const ChannelShuffle shuffle = random_shuffle(
      inst.x.n_samples(), inst.x.n_channels(),
      {fraction, derive_seed(seed, fraction_index + 1), spec.shuffle_mode});
  PipelineConfig cfg = spec.pipeline;
  cfg.seed = seed;
  cfg.stability.seed = seed;
  cfg.mm.seed = seed;
  const RecoveryResult res = run_pipeline(apply_shuffle(inst.x, shuffle), inst.dict.matrix, cfg);
  const auto stop = std::chrono::steady_clock::now();

  BenchmarkRecord rec;
  const EvalReport eval = evaluate(inst.x, shuffle, res.reconstructed, res.estimated_shuffle);
  rec.row.seed = seed;
  rec.row.fraction = fraction;
  rec.row.r2 = eval.r_squared;
  rec.row.wa = eval.weighted_accuracy.value_or(std::numeric_limits<double>::quiet_NaN());
  rec.row.rss = res.rss;
  rec.row.iters = res.best_iteration;
  rec.row.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  rec.mm_only_r2 = r_squared(inst.x, res.initial_fit);

  const Matrix& e_hat = res.support.sensing_matrix;
  const auto qr = e_hat.colPivHouseholderQr();
  Matrix ls(inst.x.n_samples(), inst.x.n_channels());
  for (Index m = 0; m < inst.x.n_channels(); ++m)
    ls.col(m) = e_hat * qr.solve(Vector(inst.x.channel(m)));
  rec.ls_clean_r2 = r_squared(inst.x, MultiChannelSignal(std::move(ls)));
  return rec;
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkSpec& spec, int jobs) {
  if (spec.replicates < 1) fail_config("benchmark needs at least one replicate");
  if (spec.fractions.empty()) fail_config("benchmark needs at least one shuffle fraction");
  const auto reps = static_cast<std::size_t>(spec.replicates);
  const std::size_t fracs = spec.fractions.size();
  std::vector<BenchmarkRecord> records(reps * fracs);
  parallel_for(reps, jobs, [&](std::size_t r) {
    SynthSpec synth = spec.synth;
    synth.seed = derive_seed(spec.seed, r);
    const SynthInstance inst = synth_instance(synth);
    for (std::size_t f = 0; f < fracs; ++f)
      records[f * reps + r] = run_one(spec, inst, synth.seed, f);
  });

  BenchmarkResult out;
  for (std::size_t f = 0; f < fracs; ++f) {
    std::vector<double> r2, wa, mm, ls;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& rec = records[f * reps + r];
      r2.push_back(rec.row.r2);
      wa.push_back(rec.row.wa);
      mm.push_back(rec.mm_only_r2);
      ls.push_back(rec.ls_clean_r2);
    }
    const bool have_wa = std::all_of(wa.begin(), wa.end(), [](double v) { return std::isfinite(v); });
    out.summary.push_back({spec.fractions[f], median(r2),
                           have_wa ? median(wa) : std::numeric_limits<double>::quiet_NaN(),
                           median(mm), median(ls)});
  }
  out.records = std::move(records);
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<BenchmarkSummary>& summary) {
  out << "fraction,median_r2,median_wa,median_mm_only_r2,median_ls_clean_r2\n";
  for (const auto& s : summary)
    out << format_double(s.fraction) << ',' << format_double(s.median_r2) << ','
        << format_double(s.median_wa) << ',' << format_double(s.median_mm_only_r2) << ','
        << format_double(s.median_ls_clean_r2) << '\n';
}

namespace {

struct Panel {
  double x0, y0, w, h;  // plot area in pixels
  double lo, hi;        // value range on the y axis
  double fmin, fmax;    // fraction range
};

double px(const Panel& p, double f) {
  return p.fmax > p.fmin ? p.x0 + (f - p.fmin) / (p.fmax - p.fmin) * p.w : p.x0 + 0.5 * p.w;
}

double py(const Panel& p, double v) {
  const double t = (std::clamp(v, p.lo, p.hi) - p.lo) / (p.hi - p.lo);
  return p.y0 + p.h - t * p.h;
}

void polyline(std::ostringstream& svg, const Panel& p, const std::vector<BenchmarkSummary>& s,
              double BenchmarkSummary::*field, const char* colour, const char* dash) {
  svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\"";
  if (*dash) svg << " stroke-dasharray=\"" << dash << "\"";
  svg << " points=\"";
  for (const auto& e : s) {
    const double v = e.*field;
    if (!std::isfinite(v)) continue;
    svg << px(p, e.fraction) << ',' << py(p, v) << ' ';
  }
  svg << "\"/>\n";
}

void axes(std::ostringstream& svg, const Panel& p, const char* label,
          const std::vector<BenchmarkSummary>& s) {
  svg << "<rect x=\"" << p.x0 << "\" y=\"" << p.y0 << "\" width=\"" << p.w << "\" height=\""
      << p.h << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = p.lo + (p.hi - p.lo) * i / 4.0;
    svg << "<text x=\"" << p.x0 - 6 << "\" y=\"" << py(p, v) + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << v << "</text>\n";
  }
  for (const auto& e : s)
    svg << "<text x=\"" << px(p, e.fraction) << "\" y=\"" << p.y0 + p.h + 16
        << "\" font-size=\"11\" text-anchor=\"middle\">" << e.fraction << "</text>\n";
  svg << "<text x=\"" << p.x0 + p.w / 2 << "\" y=\"" << p.y0 + p.h + 34
      << "\" font-size=\"12\" text-anchor=\"middle\">shuffled fraction</text>\n";
  svg << "<text x=\"" << p.x0 + p.w / 2 << "\" y=\"" << p.y0 - 8
      << "\" font-size=\"13\" text-anchor=\"middle\">" << label << "</text>\n";
}

}  // namespace

std::string benchmark_svg(const std::vector<BenchmarkSummary>& summary) {
  std::ostringstream svg;
  double fmin = 0.0, fmax = 0.0, lo = 0.0;
  if (!summary.empty()) {
    fmin = fmax = summary.front().fraction;
    for (const auto& s : summary) {
      fmin = std::min(fmin, s.fraction);
      fmax = std::max(fmax, s.fraction);
      for (double v : {s.median_r2, s.median_mm_only_r2, s.median_ls_clean_r2})
        if (std::isfinite(v)) lo = std::min(lo, std::floor(v * 4.0) / 4.0);
    }
  }
  const Panel r2{60, 40, 320, 240, lo, 1.0, fmin, fmax};
  const Panel wa{470, 40, 320, 240, 0.0, 1.0, fmin, fmax};
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"820\" height=\"340\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  axes(svg, r2, "median R^2", summary);
  axes(svg, wa, "median WA", summary);
  polyline(svg, r2, summary, &BenchmarkSummary::median_ls_clean_r2, "gray", "8,4");
  polyline(svg, r2, summary, &BenchmarkSummary::median_mm_only_r2, "gray", "8,3,2,3");
  polyline(svg, r2, summary, &BenchmarkSummary::median_r2, "steelblue", "");
  polyline(svg, wa, summary, &BenchmarkSummary::median_wa, "steelblue", "");
  svg << "<text x=\"70\" y=\"330\" font-size=\"11\">solid: pipeline, dashed: LS on clean "
         "traces, dash-dot: MM without reassignment</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace ccus
