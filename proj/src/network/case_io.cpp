#include "lineloss/case_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace lineloss {

ParseError::ParseError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " +
                                        message
                                  : message),
      line_(line) {}

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Matrix {
  int first_line = 0;
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines;
};

struct RawCase {
  std::optional<double> base_mva;
  std::map<std::string, Matrix> matrices;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string_view strip_comment(std::string_view line) {
  bool in_quote = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\'') in_quote = !in_quote;
    if (line[i] == '%' && !in_quote) return line.substr(0, i);
  }
  return line;
}

double parse_number(std::string_view token, int line) {
  std::string_view t = token;
  bool negative = false;
  if (!t.empty() && (t.front() == '-' || t.front() == '+')) {
    negative = t.front() == '-';
    t.remove_prefix(1);
  }
  if (t == "Inf" || t == "inf") {
    return negative ? -std::numeric_limits<double>::infinity()
                    : std::numeric_limits<double>::infinity();
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ParseError(line, "invalid number '" + std::string(token) + "'");
  }
  return negative ? -value : value;
}

// Appends the numeric tokens of one line segment to `row`.
void tokenize_into(std::string_view segment, int line,
                   std::vector<double>& row) {
  std::size_t i = 0;
  while (i < segment.size()) {
    while (i < segment.size() &&
           (segment[i] == ' ' || segment[i] == '\t' || segment[i] == ',' ||
            segment[i] == '\r')) {
      ++i;
    }
    std::size_t j = i;
    while (j < segment.size() && segment[j] != ' ' && segment[j] != '\t' &&
           segment[j] != ',' && segment[j] != '\r') {
      ++j;
    }
    if (j > i) row.push_back(parse_number(segment.substr(i, j - i), line));
    i = j;
  }
}

RawCase scan(std::string_view text) {
  RawCase raw;
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos <= text.size();) {
    const auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }

  Matrix* open = nullptr;
  std::vector<double> row;
  int row_line = 0;
  bool in_cell = false;
  int cell_line = 0;

  auto finish_row = [&]() {
    if (!row.empty()) {
      open->rows.push_back(std::move(row));
      open->row_lines.push_back(row_line);
      row.clear();
    }
  };

  for (std::size_t n = 0; n < lines.size(); ++n) {
    const int line_no = static_cast<int>(n) + 1;
    std::string_view line = trim(strip_comment(lines[n]));
    if (in_cell) {
      if (line.find('}') != std::string_view::npos) in_cell = false;
      continue;
    }
    if (open != nullptr) {
      const auto close = line.find(']');
      std::string_view body = close == std::string_view::npos
                                  ? line
                                  : line.substr(0, close);
      std::size_t start = 0;
      while (start <= body.size()) {
        const auto semi = body.find(';', start);
        const std::string_view piece =
            body.substr(start, semi == std::string_view::npos
                                   ? std::string_view::npos
                                   : semi - start);
        if (row.empty()) row_line = line_no;
        tokenize_into(piece, line_no, row);
        if (semi == std::string_view::npos) break;
        finish_row();
        start = semi + 1;
      }
      finish_row();  // newline also terminates a row
      if (close != std::string_view::npos) open = nullptr;
      continue;
    }
    if (line.empty()) continue;
    if (line.starts_with("function")) continue;
    if (!line.starts_with("mpc.")) {
      throw ParseError(line_no, "unexpected statement '" + std::string(line) +
                                    "'");
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(line_no, "expected '=' after field name");
    }
    const std::string field(trim(line.substr(4, eq - 4)));
    std::string_view rhs = trim(line.substr(eq + 1));
    if (rhs.starts_with("[")) {
      Matrix& m = raw.matrices[field];
      m = Matrix{};
      m.first_line = line_no;
      open = &m;
      rhs.remove_prefix(1);
      const auto close = rhs.find(']');
      std::string_view body =
          close == std::string_view::npos ? rhs : rhs.substr(0, close);
      std::size_t start = 0;
      while (start <= body.size()) {
        const auto semi = body.find(';', start);
        const std::string_view piece =
            body.substr(start, semi == std::string_view::npos
                                   ? std::string_view::npos
                                   : semi - start);
        if (row.empty()) row_line = line_no;
        tokenize_into(piece, line_no, row);
        if (semi == std::string_view::npos) break;
        finish_row();
        start = semi + 1;
      }
      finish_row();
      if (close != std::string_view::npos) open = nullptr;
    } else if (rhs.starts_with("{")) {
      if (rhs.find('}') == std::string_view::npos) {
        in_cell = true;
        cell_line = line_no;
      }
    } else if (rhs.starts_with("'")) {
      // version string and similar; ignored
    } else {
      if (rhs.ends_with(";")) rhs.remove_suffix(1);
      const double value = parse_number(trim(rhs), line_no);
      if (field == "baseMVA") raw.base_mva = value;
    }
  }
  if (open != nullptr) {
    throw ParseError(open->first_line, "unterminated matrix");
  }
  if (in_cell) throw ParseError(cell_line, "unterminated cell array");
  return raw;
}

const Matrix& require(const RawCase& raw, const std::string& name,
                      std::size_t min_columns) {
  const auto it = raw.matrices.find(name);
  if (it == raw.matrices.end()) {
    throw ParseError(0, "missing mpc." + name + " table");
  }
  for (std::size_t r = 0; r < it->second.rows.size(); ++r) {
    if (it->second.rows[r].size() < min_columns) {
      throw ParseError(it->second.row_lines[r],
                       "mpc." + name + " row has " +
                           std::to_string(it->second.rows[r].size()) +
                           " columns, expected at least " +
                           std::to_string(min_columns));
    }
  }
  return it->second;
}

BusKind bus_kind(double code, int line) {
  switch (static_cast<int>(code)) {
    case 1:
      return BusKind::kPQ;
    case 2:
      return BusKind::kPV;
    case 3:
      return BusKind::kSlack;
    default:
      throw ParseError(line, "unsupported bus type " +
                                 std::to_string(static_cast<int>(code)));
  }
}

int to_int(double v, int line, const char* what) {
  if (v != std::floor(v)) {
    throw ParseError(line, std::string(what) + " must be an integer");
  }
  return static_cast<int>(v);
}

}  // namespace

PowerNetwork parse_case(std::string_view text, std::string name,
                        const ParseOptions& options) {
  const RawCase raw = scan(text);
  if (!raw.base_mva) throw ParseError(0, "missing mpc.baseMVA");
  const double base = *raw.base_mva;
  if (!(base > 0.0)) throw ParseError(0, "baseMVA must be positive");

  const Matrix& bus_m = require(raw, "bus", 13);
  const Matrix& gen_m = require(raw, "gen", 10);
  const Matrix& branch_m = require(raw, "branch", 11);

  std::vector<Bus> buses;
  std::unordered_map<int, int> index_of;
  for (std::size_t r = 0; r < bus_m.rows.size(); ++r) {
    const auto& row = bus_m.rows[r];
    const int line = bus_m.row_lines[r];
    Bus b;
    b.external_id = to_int(row[0], line, "bus number");
    b.kind = bus_kind(row[1], line);
    b.pd = row[2] / base;
    b.qd = row[3] / base;
    b.gs = row[4] / base;
    b.bs = row[5] / base;
    b.area = to_int(row[6], line, "area");
    b.vm = row[7];
    b.va = row[8] * kDegToRad;
    b.base_kv = row[9];
    b.zone = to_int(row[10], line, "zone");
    b.vmax = row[11];
    b.vmin = row[12];
    if (!index_of.emplace(b.external_id, static_cast<int>(buses.size()))
             .second) {
      throw ParseError(line, "duplicate bus number " +
                                 std::to_string(b.external_id));
    }
    buses.push_back(b);
  }

  auto lookup = [&](double id, int line) {
    const auto it = index_of.find(to_int(id, line, "bus number"));
    if (it == index_of.end()) {
      throw ParseError(line, "reference to unknown bus " +
                                 std::to_string(static_cast<int>(id)));
    }
    return it->second;
  };

  std::vector<Generator> gens;
  for (std::size_t r = 0; r < gen_m.rows.size(); ++r) {
    const auto& row = gen_m.rows[r];
    const int line = gen_m.row_lines[r];
    Generator g;
    g.bus = lookup(row[0], line);
    g.pg = row[1] / base;
    g.qg = row[2] / base;
    g.qmax = row[3] / base;
    g.qmin = row[4] / base;
    g.vg = row[5];
    g.mbase = row[6];
    g.in_service = row[7] > 0.0;
    g.pmax = row[8] / base;
    g.pmin = row[9] / base;
    g.extra_columns.assign(row.begin() + 10, row.end());
    if (row.size() > 17) g.ramp_rate = row[17] / base;  // RAMP_10
    gens.push_back(std::move(g));
  }

  std::vector<Branch> branches;
  for (std::size_t r = 0; r < branch_m.rows.size(); ++r) {
    const auto& row = branch_m.rows[r];
    const int line = branch_m.row_lines[r];
    Branch br;
    br.from_bus = lookup(row[0], line);
    br.to_bus = lookup(row[1], line);
    br.r = row[2];
    br.x = row[3];
    br.charging = row[4];
    br.rate = row[5] / base;
    br.rate_b = row[6] / base;
    br.rate_c = row[7] / base;
    br.tap = row[8];
    br.shift = row[9] * kDegToRad;
    br.in_service = row[10] > 0.0;
    if (row.size() > 12) {
      br.angle_min = row[11];
      br.angle_max = row[12];
    }
    branches.push_back(br);
  }

  if (const auto it = raw.matrices.find("gencost"); it != raw.matrices.end()) {
    const Matrix& cost_m = it->second;
    if (cost_m.rows.size() < gens.size()) {
      throw ParseError(cost_m.first_line,
                       "mpc.gencost has fewer rows than mpc.gen");
    }
    for (std::size_t g = 0; g < gens.size(); ++g) {
      const auto& row = cost_m.rows[g];
      const int line = cost_m.row_lines[g];
      if (row.size() < 4) throw ParseError(line, "gencost row too short");
      CostCurve c;
      const int model = to_int(row[0], line, "cost model");
      c.startup = row[1];
      c.shutdown = row[2];
      const int ncost = to_int(row[3], line, "NCOST");
      if (model == 2) {
        if (row.size() < 4 + static_cast<std::size_t>(ncost)) {
          throw ParseError(line, "gencost row has fewer coefficients than NCOST");
        }
        c.kind = CostCurve::Kind::kPolynomial;
        for (int k = 0; k < ncost; ++k) {
          const int degree = ncost - 1 - k;
          c.coefficients.push_back(row[4 + k] * std::pow(base, degree));
        }
      } else if (model == 1) {
        if (row.size() < 4 + 2 * static_cast<std::size_t>(ncost)) {
          throw ParseError(line, "gencost row has fewer points than NCOST");
        }
        c.kind = CostCurve::Kind::kPiecewiseLinear;
        for (int k = 0; k < ncost; ++k) {
          c.points.emplace_back(row[4 + 2 * k] / base, row[5 + 2 * k]);
        }
      } else {
        throw ParseError(line, "unknown cost model " + std::to_string(model));
      }
      gens[g].cost = std::move(c);
    }
  } else {
    throw ParseError(0, "missing mpc.gencost table");
  }

  PowerNetwork net(std::move(name), base, std::move(buses),
                   std::move(branches), std::move(gens));
  validate_network(net, options.require_connected);
  return net;
}

PowerNetwork load_case(const std::filesystem::path& path,
                       const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open case file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_case(buffer.str(), path.stem().string(), options);
}

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace

std::string write_case(const PowerNetwork& net) {
  const double base = net.base_mva();
  std::ostringstream out;
  out << "function mpc = " << net.name() << "\n\n";
  out << "mpc.version = '2';\n\n";
  out << "mpc.baseMVA = " << num(base) << ";\n\n";

  out << "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n";
  out << "mpc.bus = [\n";
  for (const Bus& b : net.buses()) {
    out << '\t' << b.external_id << '\t' << static_cast<int>(b.kind) << '\t'
        << num(b.pd * base) << '\t' << num(b.qd * base) << '\t'
        << num(b.gs * base) << '\t' << num(b.bs * base) << '\t' << b.area
        << '\t' << num(b.vm) << '\t' << num(b.va / kDegToRad) << '\t'
        << num(b.base_kv) << '\t' << b.zone << '\t' << num(b.vmax) << '\t'
        << num(b.vmin) << ";\n";
  }
  out << "];\n\n";

  out << "%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n";
  out << "mpc.gen = [\n";
  for (const Generator& g : net.generators()) {
    out << '\t' << net.buses()[g.bus].external_id << '\t' << num(g.pg * base)
        << '\t' << num(g.qg * base) << '\t' << num(g.qmax * base) << '\t'
        << num(g.qmin * base) << '\t' << num(g.vg) << '\t' << num(g.mbase)
        << '\t' << (g.in_service ? 1 : 0) << '\t' << num(g.pmax * base)
        << '\t' << num(g.pmin * base);
    for (double extra : g.extra_columns) out << '\t' << num(extra);
    out << ";\n";
  }
  out << "];\n\n";

  out << "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus"
         "\tangmin\tangmax\n";
  out << "mpc.branch = [\n";
  for (const Branch& br : net.branches()) {
    out << '\t' << net.buses()[br.from_bus].external_id << '\t'
        << net.buses()[br.to_bus].external_id << '\t' << num(br.r) << '\t'
        << num(br.x) << '\t' << num(br.charging) << '\t'
        << num(br.rate * base) << '\t' << num(br.rate_b * base) << '\t'
        << num(br.rate_c * base) << '\t' << num(br.tap) << '\t'
        << num(br.shift / kDegToRad) << '\t' << (br.in_service ? 1 : 0)
        << '\t' << num(br.angle_min) << '\t' << num(br.angle_max) << ";\n";
  }
  out << "];\n\n";

  out << "mpc.gencost = [\n";
  for (const Generator& g : net.generators()) {
    const CostCurve& c = g.cost;
    if (c.kind == CostCurve::Kind::kPolynomial) {
      const int n = static_cast<int>(c.coefficients.size());
      out << "\t2\t" << num(c.startup) << '\t' << num(c.shutdown) << '\t' << n;
      for (int k = 0; k < n; ++k) {
        const int degree = n - 1 - k;
        out << '\t' << num(c.coefficients[k] / std::pow(base, degree));
      }
    } else {
      out << "\t1\t" << num(c.startup) << '\t' << num(c.shutdown) << '\t'
          << c.points.size();
      for (const auto& [p, cost] : c.points) {
        out << '\t' << num(p * base) << '\t' << num(cost);
      }
    }
    out << ";\n";
  }
  out << "];\n";
  return out.str();
}

nlohmann::json network_to_json(const PowerNetwork& net) {
  using nlohmann::json;
  json doc;
  doc["name"] = net.name();
  doc["base_mva"] = net.base_mva();
  doc["units"] = "per-unit; angles in radians";
  doc["slack_bus"] = net.buses()[net.slack_bus()].external_id;
  json buses = json::array();
  for (const Bus& b : net.buses()) {
    buses.push_back({{"id", b.external_id},
                     {"kind", to_string(b.kind)},
                     {"pd", b.pd},
                     {"qd", b.qd},
                     {"gs", b.gs},
                     {"bs", b.bs},
                     {"vm", b.vm},
                     {"va", b.va},
                     {"base_kv", b.base_kv},
                     {"vmin", b.vmin},
                     {"vmax", b.vmax}});
  }
  doc["buses"] = std::move(buses);
  json branches = json::array();
  for (const Branch& br : net.branches()) {
    branches.push_back({{"from", net.buses()[br.from_bus].external_id},
                        {"to", net.buses()[br.to_bus].external_id},
                        {"r", br.r},
                        {"x", br.x},
                        {"b", br.x != 0.0 ? br.susceptance() : 0.0},
                        {"charging", br.charging},
                        {"rate", br.rate},
                        {"tap", br.tap},
                        {"shift", br.shift},
                        {"in_service", br.in_service}});
  }
  doc["branches"] = std::move(branches);
  json gens = json::array();
  for (const Generator& g : net.generators()) {
    json cost;
    if (g.cost.kind == CostCurve::Kind::kPolynomial) {
      cost = {{"kind", "polynomial"}, {"coefficients", g.cost.coefficients}};
    } else {
      json pts = json::array();
      for (const auto& [p, c] : g.cost.points) pts.push_back({p, c});
      cost = {{"kind", "piecewise_linear"}, {"points", pts}};
    }
    gens.push_back({{"bus", net.buses()[g.bus].external_id},
                    {"pmin", g.pmin},
                    {"pmax", g.pmax},
                    {"qmin", g.qmin},
                    {"qmax", g.qmax},
                    {"vg", g.vg},
                    {"in_service", g.in_service},
                    {"reserve_capable", g.reserve_capable},
                    {"ramp_rate", g.ramp_rate},
                    {"cost", cost}});
  }
  doc["generators"] = std::move(gens);
  return doc;
}

}  // namespace lineloss
