#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "lineloss/case_io.hpp"
#include "lineloss/harness.hpp"

namespace lineloss {

namespace {

struct Instance {
  int case_index = 0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
};

struct InstanceOutcome {
  std::vector<MetricRow> rows;
  std::vector<Exclusion> exclusions;
};

DispatchSolution solve_one(const PowerNetwork& net, Method method,
                           const SweepConfig& cfg) {
  if (cfg.sced) return solve_sced(net, method, *cfg.sced, cfg.options).dispatch;
  return solve_dispatch(net, method, cfg.options);
}

std::string failure_reason(const DispatchSolution& sol) {
  std::string reason = lp::to_string(sol.status);
  if (!sol.message.empty()) reason += ": " + sol.message;
  return reason;
}

InstanceOutcome run_instance(const PowerNetwork& base, const Instance& inst,
                             const SweepConfig& cfg) {
  InstanceOutcome out;
  auto exclude_all = [&](const std::string& reason) {
    for (Method m : cfg.methods) {
      out.exclusions.push_back({base.name(), to_string(m), inst.alpha, inst.seed, reason});
    }
  };
  try {
    const PowerNetwork net = perturb_loads(base, inst.alpha, cfg.sigma, inst.seed);
    const auto sys = factorize(net);
    const DispatchSolution ref = solve_one(net, cfg.reference, cfg);
    if (!ref.optimal()) {
      exclude_all(std::string("reference ") + to_string(cfg.reference) + " " +
                  failure_reason(ref));
      return out;
    }
    for (Method m : cfg.methods) {
      const DispatchSolution sol = m == cfg.reference ? ref : solve_one(net, m, cfg);
      if (!sol.optimal()) {
        out.exclusions.push_back(
            {net.name(), to_string(m), inst.alpha, inst.seed, failure_reason(sol)});
        continue;
      }
      MetricRow row = compute_metrics(net, *sys, sol, ref.objective, ref.pg);
      row.alpha = inst.alpha;
      row.seed = inst.seed;
      out.rows.push_back(std::move(row));
    }
  } catch (const std::exception& e) {
    out.rows.clear();
    out.exclusions.clear();
    exclude_all(std::string("error: ") + e.what());
  }
  return out;
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::vector<double> alpha_range(const nlohmann::json& j) {
  const double start = j.at("start").get<double>();
  const double stop = j.at("stop").get<double>();
  const double step = j.at("step").get<double>();
  if (!(step > 0.0) || stop < start) throw std::invalid_argument("bad alpha range");
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((stop - start) / step + 1e-9));
  for (int k = 0; k <= n; ++k) {
    // Rounded so 0.90 + 5 * 0.02 prints as 1.
    out.push_back(std::round((start + k * step) * 1e12) / 1e12);
  }
  return out;
}

}  // namespace

void SweepConfig::validate() const {
  if (cases.empty()) throw std::invalid_argument("sweep needs at least one case");
  if (methods.empty()) throw std::invalid_argument("sweep needs at least one method");
  if (alphas.empty()) throw std::invalid_argument("sweep needs at least one alpha");
  if (seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
  for (double a : alphas) {
    if (!(a > 0.0)) throw std::invalid_argument("load scaling must be positive");
  }
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise deviation must be nonnegative");
}

SweepConfig sweep_config_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir) {
  static const std::set<std::string> known{
      "cases", "methods", "reference", "alphas", "sigma", "seeds",
      "epsilon", "cost_segments", "warm_start", "max_iterations", "sced", "parallel"};
  if (!j.is_object()) throw std::invalid_argument("sweep config must be an object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw std::invalid_argument("unknown sweep config key '" + item.key() + "'");
    }
  }
  SweepConfig cfg;
  for (const auto& c : j.at("cases")) {
    std::filesystem::path p = c.get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    cfg.cases.push_back(p);
  }
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j["methods"]) cfg.methods.push_back(parse_method(m.get<std::string>()));
  }
  if (j.contains("reference")) cfg.reference = parse_method(j["reference"].get<std::string>());
  if (j.contains("alphas")) {
    const auto& a = j["alphas"];
    cfg.alphas = a.is_object() ? alpha_range(a) : a.get<std::vector<double>>();
  }
  cfg.sigma = j.value("sigma", cfg.sigma);
  if (j.contains("seeds")) {
    const auto& s = j["seeds"];
    if (s.is_number_integer()) {
      const int n = s.get<int>();
      if (n <= 0) throw std::invalid_argument("seed count must be positive");
      cfg.seeds.clear();
      for (int k = 1; k <= n; ++k) cfg.seeds.push_back(static_cast<std::uint64_t>(k));
    } else {
      cfg.seeds = s.get<std::vector<std::uint64_t>>();
    }
  }
  cfg.options.epsilon = j.value("epsilon", cfg.options.epsilon);
  cfg.options.cost_segments = j.value("cost_segments", cfg.options.cost_segments);
  cfg.options.warm_start = j.value("warm_start", cfg.options.warm_start);
  cfg.options.max_iterations = j.value("max_iterations", cfg.options.max_iterations);
  if (j.contains("sced")) cfg.sced = sced_config_from_json(j["sced"]);
  cfg.parallel = j.value("parallel", cfg.parallel);
  cfg.validate();
  return cfg;
}

SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  std::vector<PowerNetwork> nets;
  for (const auto& path : cfg.cases) {
    nets.push_back(load_case(path));
    if (cfg.sced) cfg.sced->validate(nets.back());
  }

  std::vector<Instance> instances;
  for (int c = 0; c < static_cast<int>(nets.size()); ++c) {
    for (double a : cfg.alphas) {
      for (std::uint64_t s : cfg.seeds) instances.push_back({c, a, s});
    }
  }

  const int count = static_cast<int>(instances.size());
  std::vector<InstanceOutcome> outcomes(count);
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
  for (int k = 0; k < count; ++k) {
    outcomes[k] = run_instance(nets[instances[k].case_index], instances[k], cfg);
  }

  SweepResult result;
  result.total_instances = instances.size() * cfg.methods.size();
  for (InstanceOutcome& o : outcomes) {
    for (MetricRow& r : o.rows) result.rows.push_back(std::move(r));
    for (Exclusion& e : o.exclusions) result.exclusions.push_back(std::move(e));
  }
  result.series = seed_averages(result.rows, cfg.methods);
  result.trend_flags = loss_trend_flags(result.series);
  return result;
}

std::vector<SeriesPoint> seed_averages(const std::vector<MetricRow>& rows,
                                       const std::vector<Method>& order) {
  std::map<std::string, int> rank;
  for (std::size_t k = 0; k < order.size(); ++k) rank[to_string(order[k])] = static_cast<int>(k);
  std::vector<std::string> case_order;
  for (const MetricRow& r : rows) {
    if (std::find(case_order.begin(), case_order.end(), r.case_name) == case_order.end()) {
      case_order.push_back(r.case_name);
    }
  }

  struct Samples {
    std::vector<double> gap, mae, loss;
  };
  using Key = std::tuple<int, int, double>;  // case, method rank, alpha
  std::map<Key, Samples> groups;
  std::map<Key, std::pair<std::string, std::string>> names;
  for (const MetricRow& r : rows) {
    const int c = static_cast<int>(
        std::find(case_order.begin(), case_order.end(), r.case_name) - case_order.begin());
    const auto it = rank.find(r.method);
    const Key key{c, it == rank.end() ? static_cast<int>(order.size()) : it->second, r.alpha};
    Samples& s = groups[key];
    s.gap.push_back(r.gap_percent);
    s.mae.push_back(r.mae);
    s.loss.push_back(r.loss_estimate);
    names[key] = {r.case_name, r.method};
  }

  std::vector<SeriesPoint> out;
  for (const auto& [key, s] : groups) {
    SeriesPoint p;
    p.case_name = names[key].first;
    p.method = names[key].second;
    p.alpha = std::get<2>(key);
    p.count = static_cast<int>(s.gap.size());
    p.gap_mean = mean_of(s.gap);
    p.gap_std = sample_std(s.gap, p.gap_mean);
    p.mae_mean = mean_of(s.mae);
    p.mae_std = sample_std(s.mae, p.mae_mean);
    p.loss_mean = mean_of(s.loss);
    p.loss_std = sample_std(s.loss, p.loss_mean);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::string> loss_trend_flags(const std::vector<SeriesPoint>& series) {
  std::vector<std::string> flags;
  for (std::size_t k = 1; k < series.size(); ++k) {
    const SeriesPoint& a = series[k - 1];
    const SeriesPoint& b = series[k];
    if (a.case_name != b.case_name || a.method != b.method) continue;
    if (b.loss_mean < a.loss_mean - 1e-9) {
      std::ostringstream msg;
      msg << a.case_name << '/' << a.method << ": mean estimated loss drops from "
          << a.loss_mean << " at alpha " << a.alpha << " to " << b.loss_mean
          << " at alpha " << b.alpha;
      flags.push_back(msg.str());
    }
  }
  return flags;
}

}  // namespace lineloss
