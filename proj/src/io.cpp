#include "gscreen/io.hpp"

#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "gscreen/errors.hpp"

namespace gscreen {

using nlohmann::json;

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

void write_menu_csv(std::ostream& out, const ModelSpec& spec, const Menu& menu) {
  for (int k = 1; k <= spec.n; ++k) out << "y" << k << ",";
  out << "price\n";
  for (int i = 0; i < menu.size(); ++i) {
    for (int k = 0; k < spec.n; ++k) out << format_double(menu.products(i, k)) << ",";
    out << format_double(menu.prices[i]) << "\n";
  }
}

Menu read_menu_csv(std::istream& in, const ModelSpec& spec) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("menu CSV is empty");
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> prices;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != spec.n + 1)
      throw InputError("menu CSV row has wrong column count");
    Eigen::VectorXd y(spec.n);
    for (int k = 0; k < spec.n; ++k) y[k] = std::stod(fields[static_cast<std::size_t>(k)]);
    rows.push_back(y);
    prices.push_back(std::stod(fields[static_cast<std::size_t>(spec.n)]));
  }
  if (rows.empty()) throw InputError("menu CSV has no data rows");
  Eigen::MatrixXd products(static_cast<Eigen::Index>(rows.size()), spec.n);
  Eigen::VectorXd price_vec(static_cast<Eigen::Index>(prices.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    products.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    price_vec[static_cast<Eigen::Index>(i)] = prices[i];
  }
  return make_menu(spec, products, price_vec);
}

void write_solution_csv(std::ostream& out, const ModelSpec& spec, const AgentGrid& agents,
                        const IndirectUtility& alloc) {
  for (int k = 1; k <= spec.m; ++k) out << "x" << k << ",";
  for (int k = 1; k <= spec.n; ++k) out << "y" << k << ",";
  out << "z,u,ic_slack,ir_slack\n";
  IcReport ic = check_incentive_compatible(spec, alloc, 1e-6);
  (void)ic;
  const int N = agents.size();
  for (int i = 0; i < N; ++i) {
    // Per-agent slacks: worst incentive slack against the other contracts
    // and the participation slack.
    Eigen::VectorXd x = agents.agent(i);
    double own = spec.utility(x, alloc.assign_y.row(i).transpose(), alloc.assign_z[i]);
    double ic_slack = std::numeric_limits<double>::infinity();
    for (int jj = 0; jj < N; ++jj) {
      if (jj == i) continue;
      double other = spec.utility(x, alloc.assign_y.row(jj).transpose(), alloc.assign_z[jj]);
      ic_slack = std::min(ic_slack, own - other);
    }
    if (N == 1) ic_slack = 0;
    double ir_slack = alloc.values[i] - spec.outside_utility(x);
    for (int k = 0; k < spec.m; ++k) out << format_double(agents.points(i, k)) << ",";
    for (int k = 0; k < spec.n; ++k) out << format_double(alloc.assign_y(i, k)) << ",";
    out << format_double(alloc.assign_z[i]) << "," << format_double(alloc.values[i]) << ","
        << format_double(ic_slack) << "," << format_double(ir_slack) << "\n";
  }
}

void write_segment_csv(std::ostream& out, const ModelSpec& spec, const GSegment& seg) {
  out << "t,";
  for (int k = 1; k <= spec.n; ++k) out << "y" << k << ",";
  out << "z,residual\n";
  for (const auto& s : seg.samples) {
    out << format_double(s.t) << ",";
    for (int k = 0; k < spec.n; ++k) out << format_double(s.y[k]) << ",";
    out << format_double(s.z) << "," << format_double(s.residual) << "\n";
  }
}

void write_respond_csv(std::ostream& out, const ModelSpec& spec, const IndirectUtility& alloc) {
  for (int k = 1; k <= spec.m; ++k) out << "x" << k << ",";
  for (int k = 1; k <= spec.n; ++k) out << "y" << k << ",";
  out << "z,u\n";
  for (int i = 0; i < alloc.grid.size(); ++i) {
    for (int k = 0; k < spec.m; ++k) out << format_double(alloc.grid.points(i, k)) << ",";
    for (int k = 0; k < spec.n; ++k) out << format_double(alloc.assign_y(i, k)) << ",";
    out << format_double(alloc.assign_z[i]) << "," << format_double(alloc.values[i]) << "\n";
  }
}

namespace {

json witness_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json certification_to_json(const CertificationReport& rep) {
  json j;
  j["verdict"] = to_string(rep.verdict);
  j["lambda"] = rep.lambda;
  j["epsilon"] = rep.epsilon;
  j["samples"] = rep.samples_used;
  j["seed"] = rep.seed;
  j["tol"] = rep.tol;
  j["eig_min"] = rep.eig_min;
  j["eig_max"] = rep.eig_max;
  j["max_norm"] = rep.max_norm;
  j["max_asymmetry"] = rep.max_asymmetry;
  json cx = json::array();
  for (const auto& c : rep.counterexamples) {
    json e;
    e["point"] = witness_to_json(c.point);
    e["eig_min"] = c.eig_min;
    e["eig_max"] = c.eig_max;
    cx.push_back(e);
  }
  j["counterexamples"] = cx;
  j["notes"] = rep.notes;
  return j;
}

}  // namespace

std::string hypothesis_report_json(const HypothesisReport& report) {
  json j;
  j["seed"] = report.seed;
  j["samples"] = report.samples;
  json entries = json::array();
  for (const auto& e : report.entries) {
    json je;
    je["id"] = e.id;
    je["status"] = e.status == HypothesisEntry::Status::Pass
                       ? "pass"
                       : (e.status == HypothesisEntry::Status::Fail ? "fail" : "skipped");
    je["detail"] = e.detail;
    json w = json::array();
    for (const auto& wit : e.witnesses) w.push_back(witness_to_json(wit));
    je["witnesses"] = w;
    entries.push_back(je);
  }
  j["entries"] = entries;
  j["warnings"] = report.warnings;
  j["all_pass"] = report.all_pass();
  return j.dump(2);
}

std::string certification_report_json(const CombinedReport& report) {
  json j;
  j["verdict"] = to_string(report.verdict);
  json methods;
  if (report.ran_matrix) methods["lemma49"] = certification_to_json(report.matrix);
  if (report.ran_closed_form) methods["examples"] = certification_to_json(report.closed_form);
  if (report.ran_fourth_order) {
    json f;
    f["min_value"] = report.fourth_order.min_value;
    f["max_value"] = report.fourth_order.max_value;
    f["evaluated"] = report.fourth_order.evaluated;
    f["attempted"] = report.fourth_order.attempted;
    f["sign_agreements"] = report.fourth_order.sign_agreements;
    json viols = json::array();
    for (const auto& v : report.fourth_order.violations) {
      json w;
      w["x0"] = witness_to_json(v.x0);
      w["x1"] = witness_to_json(v.x1);
      w["from"] = witness_to_json(v.yz0);
      w["to"] = witness_to_json(v.yz1);
      w["value"] = v.value;
      w["direct_second_difference"] = v.direct_second;
      viols.push_back(w);
    }
    f["violations"] = viols;
    methods["fourth_order"] = f;
  }
  if (report.ran_local) {
    json l;
    l["pass"] = report.local.pass;
    l["premise_coverage"] = report.local.premise_coverage;
    l["max_eig"] = report.local.max_eig;
    l["solved"] = report.local.solved;
    l["samples"] = report.local.samples;
    l["uniformly_negative"] = report.local.uniform;
    l["b_star_convex"] = report.local.b_star_convex;
    json w = json::array();
    for (const auto& wit : report.local.witnesses) {
      json e;
      e["x"] = witness_to_json(wit.x);
      e["contract"] = witness_to_json(wit.yz);
      e["eig_max"] = wit.eig_max;
      w.push_back(e);
    }
    l["witnesses"] = w;
    methods["local_b"] = l;
  }
  j["methods"] = methods;
  j["disagreements"] = report.disagreements;
  return j.dump(2);
}

std::string solution_summary_json(const Solution& sol) {
  json j;
  j["profit"] = sol.profit;
  j["ic_residual"] = sol.ic_residual;
  j["ir_residual"] = sol.ir_residual;
  j["converged"] = sol.converged;
  j["iterations"] = sol.iterations;
  j["seed"] = sol.seed;
  return j.dump(2);
}

}  // namespace gscreen
