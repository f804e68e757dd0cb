#include <algorithm>
#include <stdexcept>

#include "lineloss/dispatch.hpp"

namespace lineloss {

const char* to_string(Method method) {
  switch (method) {
    case Method::kDc:
      return "dc";
    case Method::kLllf:
      return "lllf";
    case Method::kLlqcp:
      return "llqcp";
    case Method::kLloa:
      return "lloa";
  }
  return "unknown";
}

Method parse_method(const std::string& text) {
  std::string key = text;
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (key == "dc") return Method::kDc;
  if (key == "lllf") return Method::kLllf;
  if (key == "llqcp") return Method::kLlqcp;
  if (key == "lloa") return Method::kLloa;
  throw std::invalid_argument("unknown method '" + text +
                              "' (expected dc, lllf, llqcp or lloa)");
}

bool DispatchSolution::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

nlohmann::json solution_to_json(const DispatchSolution& sol,
                                const PowerNetwork& net) {
  using nlohmann::json;
  json j;
  j["case"] = net.name();
  j["base_mva"] = net.base_mva();
  j["method"] = to_string(sol.method);
  j["status"] = lp::to_string(sol.status);
  if (!sol.message.empty()) j["message"] = sol.message;
  j["flags"] = sol.flags;
  if (!sol.optimal()) return j;

  j["objective"] = sol.objective;
  j["iterations"] = sol.iterations;
  j["lazy_rounds"] = sol.lazy_rounds;
  j["solve_seconds"] = sol.solve_seconds;
  j["total_loss_estimate"] = sol.total_loss;
  const TrueLosses truth = estimate_true_losses(sol, net);
  j["total_loss_true"] = truth.total;

  json gens = json::array();
  for (std::size_t g = 0; g < net.num_generators(); ++g) {
    const Generator& gen = net.generators()[g];
    gens.push_back({{"index", g + 1},
                    {"bus", net.buses()[gen.bus].external_id},
                    {"in_service", gen.in_service},
                    {"pg", sol.pg[g]}});
  }
  j["generators"] = std::move(gens);

  json branches = json::array();
  for (std::size_t e = 0; e < net.num_branches(); ++e) {
    const Branch& br = net.branches()[e];
    branches.push_back({{"index", e + 1},
                        {"from", net.buses()[br.from_bus].external_id},
                        {"to", net.buses()[br.to_bus].external_id},
                        {"p_fwd", sol.p_fwd[e]},
                        {"p_bwd", sol.p_bwd[e]},
                        {"loss_estimate", sol.loss_est[e]},
                        {"loss_true", truth.per_branch[e]}});
  }
  j["branches"] = std::move(branches);
  if (!sol.angles.empty()) j["angles"] = sol.angles;
  return j;
}

DispatchSolution solution_from_json(const nlohmann::json& j,
                                    const PowerNetwork& net) {
  DispatchSolution sol;
  sol.method = parse_method(j.at("method").get<std::string>());
  const std::string status = j.at("status").get<std::string>();
  sol.status = status == lp::to_string(lp::Status::kOptimal)
                   ? lp::Status::kOptimal
                   : lp::Status::kNumericFailure;
  sol.flags = j.value("flags", std::vector<std::string>{});
  sol.message = j.value("message", std::string{});
  if (!sol.optimal()) return sol;

  sol.objective = j.at("objective").get<double>();
  sol.iterations = j.value("iterations", 0);
  sol.total_loss = j.value("total_loss_estimate", 0.0);
  const auto& gens = j.at("generators");
  if (gens.size() != net.num_generators()) {
    throw std::invalid_argument("solution generator count does not match the case");
  }
  sol.pg.assign(net.num_generators(), 0.0);
  for (std::size_t g = 0; g < gens.size(); ++g) sol.pg[g] = gens[g].at("pg").get<double>();

  const auto& branches = j.at("branches");
  if (branches.size() != net.num_branches()) {
    throw std::invalid_argument("solution branch count does not match the case");
  }
  const std::size_t e_count = branches.size();
  sol.p_fwd.resize(e_count);
  sol.p_bwd.resize(e_count);
  sol.loss_est.resize(e_count);
  for (std::size_t e = 0; e < e_count; ++e) {
    sol.p_fwd[e] = branches[e].at("p_fwd").get<double>();
    sol.p_bwd[e] = branches[e].at("p_bwd").get<double>();
    sol.loss_est[e] = branches[e].value("loss_estimate", 0.0);
  }
  if (j.contains("angles")) sol.angles = j["angles"].get<std::vector<double>>();
  std::vector<double> p(net.num_buses(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = -net.buses()[i].pd;
  for (std::size_t g = 0; g < net.num_generators(); ++g) {
    if (net.generators()[g].in_service) p[net.generators()[g].bus] += sol.pg[g];
  }
  sol.injection = std::move(p);
  return sol;
}

}  // namespace lineloss
