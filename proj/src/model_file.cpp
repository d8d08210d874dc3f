#include "gscreen/model_file.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gscreen/errors.hpp"

namespace gscreen {

namespace {

using nlohmann::json;

Box parse_box(const json& j, const char* name) {
  if (!j.is_array() || j.empty()) throw InputError(std::string(name) + " must be a nonempty array of [lo,hi]");
  Box b;
  b.lo.resize(static_cast<Eigen::Index>(j.size()));
  b.hi.resize(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& axis = j[i];
    if (!axis.is_array() || axis.size() != 2)
      throw InputError(std::string(name) + " axis " + std::to_string(i) + " must be [lo, hi]");
    b.lo[static_cast<Eigen::Index>(i)] = axis[0].get<double>();
    b.hi[static_cast<Eigen::Index>(i)] = axis[1].get<double>();
  }
  return b;
}

Family parse_family_name(const std::string& name) {
  if (name == "quasilinear") return Family::Quasilinear;
  if (name == "price_sensitive") return Family::PriceSensitive;
  if (name == "inhomogeneous") return Family::Inhomogeneous;
  if (name == "zero_sum_profit") return Family::ZeroSumProfit;
  throw InputError("unknown family '" + name + "'");
}

}  // namespace

ModelSpec parse_model_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.contains("dimensions")) throw InputError("model file lacks 'dimensions'");
  int m = j["dimensions"].value("m", 0);
  int n = j["dimensions"].value("n", 0);
  if (!j.contains("domains")) throw InputError("model file lacks 'domains'");
  const auto& dom = j["domains"];
  Box X = parse_box(dom.at("X"), "X");
  Box Y = parse_box(dom.at("Y"), "Y");
  if (!dom.contains("Z") || !dom["Z"].is_array() || dom["Z"].size() != 2)
    throw InputError("Z must be [lo, hi]");
  double z_lo = dom["Z"][0].get<double>();
  double z_hi = dom["Z"][1].get<double>();

  if (!j.contains("outside_option")) throw InputError("model file lacks 'outside_option'");
  const auto& oo = j["outside_option"];
  if (!oo.contains("y") || !oo["y"].is_array()) throw InputError("outside_option.y must be an array");
  Eigen::VectorXd y_out(static_cast<Eigen::Index>(oo["y"].size()));
  for (std::size_t i = 0; i < oo["y"].size(); ++i)
    y_out[static_cast<Eigen::Index>(i)] = oo["y"][i].get<double>();
  double z_out = oo.value("z", 0.0);

  Measure measure;
  if (j.contains("measure")) {
    std::string kind = j["measure"].value("kind", "uniform");
    if (kind == "uniform") {
      measure.kind = MeasureKind::Uniform;
    } else if (kind == "density") {
      measure.kind = MeasureKind::Density;
      if (!j["measure"].contains("density"))
        throw InputError("measure.kind = density requires measure.density");
      std::vector<std::string> xvars;
      for (int i = 1; i <= m; ++i) xvars.push_back("x" + std::to_string(i));
      Expr d = parse(j["measure"]["density"].get<std::string>(), xvars);
      measure.density = d;
    } else {
      throw InputError("measure.kind must be 'uniform' or 'density'");
    }
  }

  bool has_expr = j.contains("expressions");
  bool has_family = j.contains("family");
  if (has_expr == has_family)
    throw InputError("model file must provide exactly one of 'expressions' and 'family'");

  if (has_family) {
    const auto& fam = j["family"];
    Family family = parse_family_name(fam.value("name", ""));
    const auto& parts = fam.at("parts");
    std::string b = parts.at("b").get<std::string>();
    std::optional<std::string> f, a;
    if (parts.contains("f")) f = parts["f"].get<std::string>();
    if (parts.contains("a")) a = parts["a"].get<std::string>();
    return make_family_model(family, m, n, std::move(X), std::move(Y), z_lo, z_hi, b, f, a,
                             std::move(y_out), z_out, std::move(measure));
  }

  ModelSpec spec;
  spec.m = m;
  spec.n = n;
  spec.X = std::move(X);
  spec.Y = std::move(Y);
  spec.z_lo = z_lo;
  spec.z_hi = z_hi;
  spec.y_outside = std::move(y_out);
  spec.z_outside = z_out;
  spec.measure = std::move(measure);
  auto vars = model_variables(m, n);
  spec.G = parse(j["expressions"].at("G").get<std::string>(), vars);
  spec.pi = parse(j["expressions"].at("pi").get<std::string>(), vars);
  validate(spec);
  return spec;
}

ModelSpec load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model_json(ss.str());
}

std::string model_to_json(const ModelSpec& spec) {
  json j;
  j["dimensions"] = {{"m", spec.m}, {"n", spec.n}};
  json X = json::array(), Y = json::array();
  for (int i = 0; i < spec.m; ++i) X.push_back({spec.X.lo[i], spec.X.hi[i]});
  for (int i = 0; i < spec.n; ++i) Y.push_back({spec.Y.lo[i], spec.Y.hi[i]});
  j["domains"] = {{"X", X}, {"Y", Y}, {"Z", {spec.z_lo, spec.z_hi}}};
  j["expressions"] = {{"G", print(spec.G)}, {"pi", print(spec.pi)}};
  json yv = json::array();
  for (int i = 0; i < spec.n; ++i) yv.push_back(spec.y_outside[i]);
  j["outside_option"] = {{"y", yv}, {"z", spec.z_outside}};
  if (spec.measure.kind == MeasureKind::Uniform) {
    j["measure"] = {{"kind", "uniform"}};
  } else {
    j["measure"] = {{"kind", "density"}, {"density", print(*spec.measure.density)}};
  }
  return j.dump(2);
}

}  // namespace gscreen
