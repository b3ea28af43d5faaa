#include "cli_config.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <type_traits>
#include <utility>

namespace ccus::cli {

namespace {

struct Field {
  std::string section;  // empty for top-level keys
  std::string key;
  std::string help;
  std::function<Json(const CliConfig&)> get;
  std::function<void(CliConfig&, const Json&)> set;
};

std::string path_of(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

template <class T>
T convert(const Json& j, const std::string& where) {
  if constexpr (std::is_same_v<T, double>) {
    if (!j.is_number()) fail_config(where + " must be a number");
    return j.get<double>();
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!j.is_number_unsigned()) fail_config(where + " must be a nonnegative integer");
    return j.get<T>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) fail_config(where + " must be an integer");
    const auto v = j.get<std::int64_t>();
    if (v < std::numeric_limits<T>::min() || v > std::numeric_limits<T>::max())
      fail_config(where + " is out of range");
    return static_cast<T>(v);
  } else {
    if (!j.is_array()) fail_config(where + " must be an array of numbers");
    T out;
    for (const auto& e : j) {
      if (!e.is_number()) fail_config(where + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
}

// Field bound to a member reached through `ref`.
template <class Ref>
Field value(std::string section, std::string key, std::string help, Ref ref) {
  using T = std::remove_reference_t<decltype(ref(std::declval<CliConfig&>()))>;
  const std::string where = path_of(section, key);
  return {std::move(section), std::move(key), std::move(help),
          [ref](const CliConfig& c) {
            CliConfig copy = c;
            return Json(ref(copy));
          },
          [ref, where](CliConfig& c, const Json& j) { ref(c) = convert<T>(j, where); }};
}

template <class E>
using Names = std::vector<std::pair<E, std::string>>;

template <class E, class Ref>
Field choice(std::string section, std::string key, std::string help, Names<E> names, Ref ref) {
  const std::string where = path_of(section, key);
  std::string options;
  for (const auto& [e, name] : names) options += (options.empty() ? "" : "|") + name;
  help += " (" + options + ")";
  return {std::move(section), std::move(key), std::move(help),
          [ref, names](const CliConfig& c) {
            CliConfig copy = c;
            for (const auto& [e, name] : names)
              if (e == ref(copy)) return Json(name);
            return Json();
          },
          [ref, names, where, options](CliConfig& c, const Json& j) {
            if (j.is_string())
              for (const auto& [e, name] : names)
                if (name == j.get<std::string>()) {
                  ref(c) = e;
                  return;
                }
            fail_config(where + " must be one of " + options);
          }};
}

const Names<SupportMode> kSupportModes{{SupportMode::shared, "shared"},
                                       {SupportMode::disjoint, "disjoint"},
                                       {SupportMode::overlapping, "overlapping"}};
const Names<DictionaryMode> kDictionaryModes{
    {DictionaryMode::gaussian, "gaussian"},
    {DictionaryMode::circulant_from_kernel, "circulant_from_kernel"}};
const Names<ShuffleMode> kShuffleModes{{ShuffleMode::pairwise_swap, "pairwise_swap"},
                                       {ShuffleMode::uniform_permutation, "uniform_permutation"}};
const Names<RefitMode> kRefitModes{{RefitMode::mm_each_iter, "mm_each_iter"},
                                   {RefitMode::ls_after_first, "ls_after_first"}};
const Names<RfrpGate> kGates{{RfrpGate::none, "none"},
                             {RfrpGate::kxk_square, "kxk_square"},
                             {RfrpGate::kxk_lower, "kxk_lower"}};
const Names<RfrpProperty> kProperties{{RfrpProperty::k_rfrp, "k_rfrp"},
                                      {RfrpProperty::kxk_square, "kxk_square"},
                                      {RfrpProperty::kxk_lower, "kxk_lower"}};
const Names<RfrpMode> kRfrpModes{{RfrpMode::exhaustive, "exhaustive"},
                                 {RfrpMode::randomized, "randomized"}};

// snr_db is a number or the string "inf".
Field snr_field() {
  return {"synth", "snr_db", "signal-to-noise ratio in dB, or \"inf\" for no noise",
          [](const CliConfig& c) {
            return std::isinf(c.synth.snr_db) ? Json("inf") : Json(c.synth.snr_db);
          },
          [](CliConfig& c, const Json& j) {
            if (j.is_string() && j.get<std::string>() == "inf")
              c.synth.snr_db = std::numeric_limits<double>::infinity();
            else
              c.synth.snr_db = convert<double>(j, "synth.snr_db");
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using C = CliConfig;
    std::vector<Field> f;
    f.push_back(value("", "seed", "master seed; every random stage derives from it",
                      [](C& c) -> auto& { return c.seed; }));

    f.push_back(value("synth", "n", "samples per channel", [](C& c) -> auto& { return c.synth.n; }));
    f.push_back(value("synth", "m", "channels", [](C& c) -> auto& { return c.synth.m; }));
    f.push_back(value("synth", "p", "dictionary atoms (gaussian mode only)",
                      [](C& c) -> auto& { return c.synth.p; }));
    f.push_back(value("synth", "k_per_channel", "nonzero coefficients per channel",
                      [](C& c) -> auto& { return c.synth.k_per_channel; }));
    f.push_back(choice("synth", "support_mode", "how channel supports relate", kSupportModes,
                       [](C& c) -> auto& { return c.synth.support_mode; }));
    f.push_back(value("synth", "shared_count", "common indices in overlapping mode",
                      [](C& c) -> auto& { return c.synth.shared_count; }));
    f.push_back(snr_field());
    f.push_back(choice("synth", "dictionary_mode", "dictionary family", kDictionaryModes,
                       [](C& c) -> auto& { return c.synth.dictionary_mode; }));
    f.push_back(value("synth", "kernel_rise", "rise time of the calcium kernel in samples",
                      [](C& c) -> auto& { return c.kernel_rise; }));
    f.push_back(value("synth", "kernel_decay", "decay time of the calcium kernel in samples",
                      [](C& c) -> auto& { return c.kernel_decay; }));

    f.push_back(value("shuffle", "fraction", "share of samples shuffled across channels",
                      [](C& c) -> auto& { return c.shuffle_fraction; }));
    f.push_back(choice("shuffle", "mode", "per-row permutation", kShuffleModes,
                       [](C& c) -> auto& { return c.shuffle_mode; }));

    f.push_back(value("pipeline", "n_outer_iter", "reassignment/refit rounds",
                      [](C& c) -> auto& { return c.pipeline.n_outer_iter; }));
    f.push_back(choice("pipeline", "refit_mode", "estimator used after each reassignment",
                       kRefitModes, [](C& c) -> auto& { return c.pipeline.refit_mode; }));
    f.push_back(value("pipeline", "refit_s_subsamples",
                      "S-stage subsets for refits; negative reuses mm.s_subsamples",
                      [](C& c) -> auto& { return c.pipeline.refit_s_subsamples; }));
    f.push_back(choice("pipeline", "rfrp_gate", "rank property sampled after support selection",
                       kGates, [](C& c) -> auto& { return c.pipeline.rfrp_gate; }));
    f.push_back(value("pipeline", "rfrp_budget", "submatrices drawn by the rank gate",
                      [](C& c) -> auto& { return c.pipeline.rfrp_budget; }));

    f.push_back(value("stability", "n_subsamples", "lasso subsamples",
                      [](C& c) -> auto& { return c.pipeline.stability.n_subsamples; }));
    f.push_back(value("stability", "subsample_fraction", "share of samples per subsample",
                      [](C& c) -> auto& { return c.pipeline.stability.subsample_fraction; }));
    f.push_back(value("stability", "lambda_grid",
                      "strictly decreasing penalties; empty means 50 log-spaced values "
                      "from lambda_max down to 1e-3 of it",
                      [](C& c) -> auto& { return c.pipeline.stability.lambda_grid; }));
    f.push_back(value("stability", "threshold", "selection probability needed to keep a column",
                      [](C& c) -> auto& { return c.pipeline.stability.threshold; }));
    f.push_back(value("stability", "lasso_tol_rel", "lasso KKT tolerance relative to lambda_max",
                      [](C& c) -> auto& { return c.pipeline.stability.lasso_tol_rel; }));
    f.push_back(value("stability", "lasso_max_iter", "coordinate descent sweeps per lasso",
                      [](C& c) -> auto& { return c.pipeline.stability.lasso_max_iter; }));

    f.push_back(value("mm", "s_subsamples", "random starting subsets of the S-stage",
                      [](C& c) -> auto& { return c.pipeline.mm.s_subsamples; }));
    f.push_back(value("mm", "s_refine_best", "S candidates refined to convergence",
                      [](C& c) -> auto& { return c.pipeline.mm.s_refine_best; }));
    f.push_back(value("mm", "s_concentration_steps", "IRLS steps applied to every S candidate",
                      [](C& c) -> auto& { return c.pipeline.mm.s_concentration_steps; }));
    f.push_back(value("mm", "bisquare_c_scale", "bisquare constant of the scale stage",
                      [](C& c) -> auto& { return c.pipeline.mm.bisquare_c_scale; }));
    f.push_back(value("mm", "bisquare_c_eff", "bisquare constant of the efficiency stage",
                      [](C& c) -> auto& { return c.pipeline.mm.bisquare_c_eff; }));
    f.push_back(value("mm", "max_irls_iter", "IRLS iteration cap",
                      [](C& c) -> auto& { return c.pipeline.mm.max_irls_iter; }));
    f.push_back(value("mm", "tol", "relative coefficient change that ends IRLS",
                      [](C& c) -> auto& { return c.pipeline.mm.tol; }));
    f.push_back(value("mm", "min_direction_share",
                      "least share of every direction's energy a fit may keep; 0 disables",
                      [](C& c) -> auto& { return c.pipeline.mm.min_direction_share; }));

    f.push_back(value("als", "smoothness_lambda", "second-difference penalty",
                      [](C& c) -> auto& { return c.als.smoothness_lambda; }));
    f.push_back(value("als", "asymmetry_p", "weight of samples above the baseline",
                      [](C& c) -> auto& { return c.als.asymmetry_p; }));
    f.push_back(value("als", "n_iter", "reweighting iterations",
                      [](C& c) -> auto& { return c.als.n_iter; }));

    f.push_back(choice("rfrp", "property", "rank property to check", kProperties,
                       [](C& c) -> auto& { return c.rfrp.property; }));
    f.push_back(choice("rfrp", "mode", "exhaustive is available for k_rfrp", kRfrpModes,
                       [](C& c) -> auto& { return c.rfrp.mode; }));
    f.push_back(value("rfrp", "k_max", "largest K checked; K runs from 1, or from the basis width for k_rfrp",
                      [](C& c) -> auto& { return c.rfrp.k_max; }));
    f.push_back(value("rfrp", "budget", "random draws per K",
                      [](C& c) -> auto& { return c.rfrp.budget; }));

    f.push_back(value("benchmark", "fractions", "shuffle fractions swept",
                      [](C& c) -> auto& { return c.benchmark_fractions; }));
    f.push_back(value("benchmark", "replicates", "instances per fraction",
                      [](C& c) -> auto& { return c.benchmark_replicates; }));
    return f;
  }();
  return table;
}

const Field* find(const std::string& section, const std::string& key) {
  for (const auto& f : fields())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

bool is_section(const std::string& name) {
  for (const auto& f : fields())
    if (f.section == name) return true;
  return false;
}

}  // namespace

CliConfig parse_config(const Json& doc) {
  if (!doc.is_object()) fail_config("configuration must be a JSON object");
  CliConfig cfg;
  for (const auto& [name, v] : doc.items()) {
    if (is_section(name)) {
      if (!v.is_object()) fail_config(name + " must be an object");
      for (const auto& [key, value] : v.items()) {
        const Field* f = find(name, key);
        if (!f) fail_config("unknown configuration key " + name + "." + key);
        f->set(cfg, value);
      }
    } else if (const Field* f = find("", name)) {
      f->set(cfg, v);
    } else {
      fail_config("unknown configuration key " + name);
    }
  }
  return cfg;
}

Json config_to_json(const CliConfig& cfg) {
  Json out = Json::object();
  for (const auto& f : fields()) {
    if (f.section.empty())
      out[f.key] = f.get(cfg);
    else
      out[f.section][f.key] = f.get(cfg);
  }
  return out;
}

std::string config_reference() {
  const CliConfig defaults;
  std::ostringstream out;
  out << "Configuration keys (JSON; every key optional, unknown keys rejected):\n";
  for (const auto& f : fields())
    out << "  " << path_of(f.section, f.key) << " = " << f.get(defaults).dump() << "\n      "
        << f.help << "\n";
  return out.str();
}

}  // namespace ccus::cli
