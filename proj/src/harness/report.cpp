#include <iomanip>
#include <ostream>

#include "lineloss/harness.hpp"

namespace lineloss {

namespace {

class PrecisionGuard {
 public:
  PrecisionGuard(std::ostream& out, int digits)
      : out_(out), flags_(out.flags()), precision_(out.precision()) {
    out_.unsetf(std::ios::floatfield);
    out_.precision(digits);
  }
  ~PrecisionGuard() {
    out_.flags(flags_);
    out_.precision(precision_);
  }

 private:
  std::ostream& out_;
  std::ios::fmtflags flags_;
  std::streamsize precision_;
};

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  PrecisionGuard guard(out, 12);
  out << "case,method,alpha,seed,objective,gap_percent,mae,loss_estimate,loss_true,"
         "flow_discrepancy,iterations\n";
  for (const MetricRow& r : rows) {
    out << r.case_name << ',' << r.method << ',' << r.alpha << ',' << r.seed << ','
        << r.objective << ',' << r.gap_percent << ',' << r.mae << ',' << r.loss_estimate
        << ',' << r.loss_true << ',' << r.flow_discrepancy << ',' << r.iterations << '\n';
  }
}

void write_timing_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  PrecisionGuard guard(out, 6);
  out << "case,method,alpha,seed,solve_seconds\n";
  for (const MetricRow& r : rows) {
    out << r.case_name << ',' << r.method << ',' << r.alpha << ',' << r.seed << ','
        << r.solve_seconds << '\n';
  }
}

void write_exclusions_csv(std::ostream& out, const std::vector<Exclusion>& rows) {
  PrecisionGuard guard(out, 12);
  out << "case,method,alpha,seed,reason\n";
  for (const Exclusion& e : rows) {
    std::string reason = e.reason;
    for (char& c : reason) {
      if (c == ',' || c == '\n') c = ';';
    }
    out << e.case_name << ',' << e.method << ',' << e.alpha << ',' << e.seed << ','
        << reason << '\n';
  }
}

void write_series_csv(std::ostream& out, const std::vector<SeriesPoint>& series) {
  PrecisionGuard guard(out, 12);
  out << "case,method,alpha,count,gap_mean,gap_std,mae_mean,mae_std,loss_mean,loss_std\n";
  for (const SeriesPoint& p : series) {
    out << p.case_name << ',' << p.method << ',' << p.alpha << ',' << p.count << ','
        << p.gap_mean << ',' << p.gap_std << ',' << p.mae_mean << ',' << p.mae_std << ','
        << p.loss_mean << ',' << p.loss_std << '\n';
  }
}

void write_metrics_table(std::ostream& out, const std::vector<MetricRow>& rows) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::left << std::setw(10) << "Case" << std::setw(7) << "Method" << std::right
      << std::setw(7) << "Alpha" << std::setw(6) << "Seed" << std::setw(12) << "Gap [%]"
      << std::setw(12) << "MAE [pu]" << std::setw(12) << "Loss [pu]" << std::setw(11)
      << "Time [s]" << std::setw(6) << "Iter" << '\n';
  for (const MetricRow& r : rows) {
    out << std::left << std::setw(10) << r.case_name << std::setw(7) << r.method
        << std::right << std::fixed << std::setprecision(2) << std::setw(7) << r.alpha
        << std::setw(6) << r.seed << std::setprecision(4) << std::setw(12) << r.gap_percent
        << std::setprecision(5) << std::setw(12) << r.mae << std::setw(12)
        << r.loss_estimate << std::setprecision(3) << std::setw(11) << r.solve_seconds
        << std::setw(6) << r.iterations << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

nlohmann::json metric_row_to_json(const MetricRow& r) {
  return {{"case", r.case_name},
          {"method", r.method},
          {"alpha", r.alpha},
          {"seed", r.seed},
          {"objective", r.objective},
          {"gap_percent", r.gap_percent},
          {"mae", r.mae},
          {"loss_estimate", r.loss_estimate},
          {"loss_true", r.loss_true},
          {"flow_discrepancy", r.flow_discrepancy},
          {"iterations", r.iterations},
          {"solve_seconds", r.solve_seconds}};
}

MetricRow metric_row_from_json(const nlohmann::json& j) {
  MetricRow r;
  r.case_name = j.at("case").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.alpha = j.value("alpha", 1.0);
  r.seed = j.value("seed", std::uint64_t{0});
  r.objective = j.at("objective").get<double>();
  r.gap_percent = j.at("gap_percent").get<double>();
  r.mae = j.at("mae").get<double>();
  r.loss_estimate = j.value("loss_estimate", 0.0);
  r.loss_true = j.value("loss_true", 0.0);
  r.flow_discrepancy = j.value("flow_discrepancy", 0.0);
  r.iterations = j.value("iterations", 0);
  r.solve_seconds = j.value("solve_seconds", 0.0);
  return r;
}

nlohmann::json sweep_to_json(const SweepResult& result) {
  nlohmann::json j;
  j["total_instances"] = result.total_instances;
  j["rows"] = nlohmann::json::array();
  for (const MetricRow& r : result.rows) j["rows"].push_back(metric_row_to_json(r));
  j["exclusions"] = nlohmann::json::array();
  for (const Exclusion& e : result.exclusions) {
    j["exclusions"].push_back({{"case", e.case_name},
                               {"method", e.method},
                               {"alpha", e.alpha},
                               {"seed", e.seed},
                               {"reason", e.reason}});
  }
  j["series"] = nlohmann::json::array();
  for (const SeriesPoint& p : result.series) {
    j["series"].push_back({{"case", p.case_name},
                           {"method", p.method},
                           {"alpha", p.alpha},
                           {"count", p.count},
                           {"gap_mean", p.gap_mean},
                           {"gap_std", p.gap_std},
                           {"mae_mean", p.mae_mean},
                           {"mae_std", p.mae_std},
                           {"loss_mean", p.loss_mean},
                           {"loss_std", p.loss_std}});
  }
  j["trend_flags"] = result.trend_flags;
  return j;
}

SweepResult sweep_from_json(const nlohmann::json& j) {
  SweepResult result;
  result.total_instances = j.value("total_instances", std::size_t{0});
  for (const auto& r : j.at("rows")) result.rows.push_back(metric_row_from_json(r));
  if (j.contains("exclusions")) {
    for (const auto& e : j["exclusions"]) {
      result.exclusions.push_back({e.at("case").get<std::string>(),
                                   e.at("method").get<std::string>(),
                                   e.value("alpha", 1.0), e.value("seed", std::uint64_t{0}),
                                   e.value("reason", std::string{})});
    }
  }
  if (j.contains("series")) {
    for (const auto& s : j["series"]) {
      SeriesPoint p;
      p.case_name = s.at("case").get<std::string>();
      p.method = s.at("method").get<std::string>();
      p.alpha = s.at("alpha").get<double>();
      p.count = s.value("count", 0);
      p.gap_mean = s.value("gap_mean", 0.0);
      p.gap_std = s.value("gap_std", 0.0);
      p.mae_mean = s.value("mae_mean", 0.0);
      p.mae_std = s.value("mae_std", 0.0);
      p.loss_mean = s.value("loss_mean", 0.0);
      p.loss_std = s.value("loss_std", 0.0);
      result.series.push_back(std::move(p));
    }
  }
  result.trend_flags = j.value("trend_flags", std::vector<std::string>{});
  return result;
}

}  // namespace lineloss
