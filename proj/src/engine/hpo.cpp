#include "newsrec/engine/hpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>

#include "newsrec/common/error.hpp"
#include "newsrec/common/hash.hpp"

namespace newsrec::engine {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

// Splits on commas outside quotes and brackets.
std::vector<std::string> split_args(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_str && c == '\\' && i + 1 < s.size()) {
      cur += c;
      cur += s[++i];
      continue;
    }
    if (c == '"') in_str = !in_str;
    if (!in_str) {
      if (c == '[') ++depth;
      if (c == ']') --depth;
      if (c == ',' && depth == 0) {
        out.push_back(trim(cur));
        cur.clear();
        continue;
      }
    }
    cur += c;
  }
  out.push_back(trim(cur));
  return out;
}

json parse_arg(const std::string& text, const std::string& origin) {
  try {
    return parse_config_value(text, origin);
  } catch (const ConfigError&) {
    return text;  // bare word
  }
}

double as_double(const json& v, const std::string& origin) {
  if (!v.is_number()) throw ConfigError(origin + ": expected a number, got " + v.dump());
  return v.get<double>();
}

std::string assignment(const std::string& path, const json& v) {
  return path + "=" + format_config_value(v);
}

}  // namespace

SearchDim parse_search_dim(const std::string& path, const std::string& spec) {
  const std::string origin = "hpo.space '" + path + "'";
  const auto open = spec.find('(');
  if (open == std::string::npos || spec.back() != ')') {
    throw ConfigError(origin + ": expected choice(...), range(...) or interval(...), got '" +
                      spec + "'");
  }
  const std::string fn = trim(spec.substr(0, open));
  const auto args = split_args(spec.substr(open + 1, spec.size() - open - 2));
  SearchDim d;
  d.path = path;
  if (fn == "choice") {
    d.kind = SearchDim::Kind::kChoice;
    for (const auto& a : args) {
      if (a.empty()) throw ConfigError(origin + ": empty choice");
      d.values.push_back(parse_arg(a, origin));
    }
  } else if (fn == "range") {
    d.kind = SearchDim::Kind::kRange;
    if (args.size() < 2 || args.size() > 3) throw ConfigError(origin + ": range takes 2 or 3 arguments");
    const json lo = parse_arg(args[0], origin), hi = parse_arg(args[1], origin);
    const json step = args.size() == 3 ? parse_arg(args[2], origin) : json(1);
    const bool ints = lo.is_number_integer() && hi.is_number_integer() && step.is_number_integer();
    const double l = as_double(lo, origin), h = as_double(hi, origin), s = as_double(step, origin);
    if (!(s > 0.0)) throw ConfigError(origin + ": range step must be > 0");
    for (std::size_t i = 0;; ++i) {
      const double v = l + static_cast<double>(i) * s;
      if (v >= h - 1e-12 * std::max(1.0, std::abs(h))) break;
      d.values.push_back(ints ? json(static_cast<std::int64_t>(std::llround(v))) : json(v));
    }
  } else if (fn == "interval") {
    d.kind = SearchDim::Kind::kInterval;
    if (args.size() != 2) throw ConfigError(origin + ": interval takes 2 arguments");
    const json lo = parse_arg(args[0], origin), hi = parse_arg(args[1], origin);
    d.lo = as_double(lo, origin);
    d.hi = as_double(hi, origin);
    d.integer = lo.is_number_integer() && hi.is_number_integer();
    if (!(d.lo < d.hi)) throw ConfigError(origin + ": interval needs lo < hi");
  } else {
    throw ConfigError(origin + ": unknown search function '" + fn + "'");
  }
  if (d.kind != SearchDim::Kind::kInterval && d.values.empty()) {
    throw ConfigError(origin + ": no values");
  }
  return d;
}

std::vector<std::vector<std::string>> sample_trials(const std::vector<SearchDim>& space,
                                                    const std::string& sampler, int n_trials,
                                                    std::uint64_t seed) {
  if (n_trials < 1) throw ConfigError("hpo.n_trials must be >= 1");
  std::vector<std::vector<std::string>> trials;
  if (sampler == "grid") {
    std::size_t total = 1;
    for (const auto& d : space) {
      if (d.kind == SearchDim::Kind::kInterval) {
        throw ConfigError("grid search needs finite choices; '" + d.path + "' is an interval");
      }
      total *= d.values.size();
    }
    const std::size_t n = std::min<std::size_t>(total, static_cast<std::size_t>(n_trials));
    for (std::size_t t = 0; t < n; ++t) {
      std::vector<std::string> o(space.size());
      std::size_t rest = t;
      for (std::size_t i = space.size(); i-- > 0;) {
        const auto& vals = space[i].values;
        o[i] = assignment(space[i].path, vals[rest % vals.size()]);
        rest /= vals.size();
      }
      trials.push_back(std::move(o));
    }
    return trials;
  }
  if (sampler != "random") throw ConfigError("unknown sampler '" + sampler + "'");
  std::mt19937_64 rng(mix_seed(seed, 0x68706fULL));
  for (int t = 0; t < n_trials; ++t) {
    std::vector<std::string> o;
    for (const auto& d : space) {
      if (d.kind == SearchDim::Kind::kInterval) {
        if (d.integer) {
          std::uniform_int_distribution<std::int64_t> u(static_cast<std::int64_t>(d.lo),
                                                        static_cast<std::int64_t>(d.hi));
          o.push_back(assignment(d.path, json(u(rng))));
        } else {
          std::uniform_real_distribution<double> u(d.lo, d.hi);
          o.push_back(assignment(d.path, json(u(rng))));
        }
      } else {
        std::uniform_int_distribution<std::size_t> u(0, d.values.size() - 1);
        o.push_back(assignment(d.path, d.values[u(rng)]));
      }
    }
    trials.push_back(std::move(o));
  }
  return trials;
}

HpoResult hpo_search(const fs::path& main, const std::vector<std::string>& base_overrides,
                     const fs::path& out, const fs::path& run_dir, std::ostream* log) {
  const ResolvedConfig base = compose_config(main, base_overrides);
  const ExperimentConfig cfg = to_experiment(base.tree);
  if (cfg.hpo.space.empty()) throw ConfigError("hpo.space is empty: nothing to search");
  std::vector<SearchDim> space;
  for (const auto& [path, spec] : cfg.hpo.space) space.push_back(parse_search_dim(path, spec));
  const auto sampled = sample_trials(space, cfg.hpo.sampler, cfg.hpo.n_trials, cfg.hpo.seed);

  fs::create_directories(run_dir);
  {
    std::ofstream f(run_dir / "config.resolved", std::ios::binary);
    f << base.text;
  }
  HpoResult result;
  for (std::size_t t = 0; t < sampled.size(); ++t) {
    TrialResult trial;
    trial.index = static_cast<int>(t);
    trial.overrides = sampled[t];
    char name[32];
    std::snprintf(name, sizeof name, "trial_%03zu", t);
    trial.dir = run_dir / "trials" / name;
    try {
      std::vector<std::string> ov = base_overrides;
      ov.insert(ov.end(), trial.overrides.begin(), trial.overrides.end());
      ov.push_back("eval.split=val");
      const ResolvedConfig rc = compose_config(main, ov);
      trial.config_hash = rc.hash;
      TrainHooks hooks;
      hooks.log = log;
      const TrainResult tr = train(rc, out, trial.dir, hooks);
      trial.objective = tr.final_eval.at(cfg.hpo.objective).mean;
      trial.ok = true;
    } catch (const std::exception& e) {
      trial.error = e.what();
    }
    if (log) {
      *log << name << ": " << (trial.ok ? cfg.hpo.objective + " " + std::to_string(trial.objective)
                                        : "failed: " + trial.error)
           << '\n';
    }
    result.trials.push_back(std::move(trial));
  }
  if (std::none_of(result.trials.begin(), result.trials.end(),
                   [](const TrialResult& r) { return r.ok; })) {
    throw Error("every hpo trial failed; first error: " + result.trials.front().error);
  }
  std::stable_sort(result.trials.begin(), result.trials.end(),
                   [](const TrialResult& a, const TrialResult& b) {
                     if (a.ok != b.ok) return a.ok;
                     return a.ok && a.objective > b.objective;
                   });

  result.table = run_dir / "trials.csv";
  std::ofstream csv(result.table, std::ios::binary);
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  csv << "rank,trial,status," << cfg.hpo.objective;
  for (const auto& d : space) csv << ',' << field(d.path);
  csv << ",config_hash,error\n";
  for (std::size_t r = 0; r < result.trials.size(); ++r) {
    const auto& tr = result.trials[r];
    csv << r + 1 << ',' << tr.index << ',' << (tr.ok ? "ok" : "failed") << ','
        << (tr.ok ? json(tr.objective).dump() : "");
    for (const auto& o : tr.overrides) csv << ',' << field(o.substr(o.find('=') + 1));
    csv << ',' << tr.config_hash << ',' << field(tr.error) << '\n';
  }
  if (!csv) throw Error("failed writing " + result.table.string());
  return result;
}

}  // namespace newsrec::engine
