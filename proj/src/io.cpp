#include "skewcwm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "skewcwm/errors.hpp"

namespace skewcwm {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record. Double-quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv(const std::string& line, bool& ok) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  ok = true;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && trim(field).empty()) {
      quoted = true;
      was_quoted = true;
      field.clear();
    } else if (c == ',') {
      fields.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (quoted) ok = false;
  fields.push_back(was_quoted ? field : trim(field));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool parse_number(const std::string& text, double& value) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

struct Sample {
  double t;
  double value;
  long line;
};

// ---- configuration --------------------------------------------------------

[[noreturn]] void config_error(const std::string& what) { throw InputError("config: " + what); }

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      config_error("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    config_error("key '" + key + "' has the wrong type");
  }
}

BasisConfig parse_basis(const json& j, BasisConfig base, const std::string& where) {
  check_keys(j, {"n_basis", "degree", "lower", "upper", "knots", "variables"}, where);
  if (j.contains("n_basis")) base.n_basis = get_as<int>(j["n_basis"], "n_basis");
  if (j.contains("degree")) base.degree = get_as<int>(j["degree"], "degree");
  if (j.contains("lower")) base.lower = get_as<double>(j["lower"], "lower");
  if (j.contains("upper")) base.upper = get_as<double>(j["upper"], "upper");
  if (j.contains("knots")) base.interior_knots = get_as<std::vector<double>>(j["knots"], "knots");
  if (base.degree < 0) config_error(where + ": degree must be nonnegative");
  if (!base.interior_knots && base.n_basis < base.degree + 1) {
    config_error(where + ": n_basis must be at least degree + 1");
  }
  return base;
}

std::vector<std::pair<SkewKind, SkewKind>> parse_families(const json& j) {
  std::vector<std::pair<SkewKind, SkewKind>> out;
  if (j.is_string() && j.get<std::string>() == "all") {
    for (SkewKind x : {SkewKind::VarianceGamma, SkewKind::SkewT, SkewKind::NormalInverseGaussian}) {
      for (SkewKind y : {SkewKind::VarianceGamma, SkewKind::SkewT, SkewKind::NormalInverseGaussian}) {
        out.emplace_back(x, y);
      }
    }
    return out;
  }
  if (!j.is_array()) config_error("families must be \"all\" or a list");
  for (const json& item : j) {
    if (item.is_string()) {
      const std::string s = item.get<std::string>();
      const auto dash = s.find('-');
      if (dash == std::string::npos) config_error("family pair '" + s + "' must look like NIG-VG");
      out.emplace_back(parse_skew_kind(s.substr(0, dash)), parse_skew_kind(s.substr(dash + 1)));
    } else if (item.is_array() && item.size() == 2 && item[0].is_string() && item[1].is_string()) {
      out.emplace_back(parse_skew_kind(item[0].get<std::string>()), parse_skew_kind(item[1].get<std::string>()));
    } else {
      config_error("each family pair must be a string like \"NIG-VG\" or a two-element list");
    }
  }
  return out;
}

template <typename T>
std::vector<T> scalar_or_list(const json& j, const std::string& key) {
  if (j.is_array()) return get_as<std::vector<T>>(j, key);
  return {get_as<T>(j, key)};
}

// ---- results --------------------------------------------------------------

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json basis_to_json(const BSplineBasis& b) {
  return json{{"degree", b.degree()}, {"lower", b.lower()}, {"upper", b.upper()}, {"interior_knots", b.interior_knots()}};
}

BSplineBasis basis_from_json(const json& j) {
  return BSplineBasis(j.at("degree").get<int>(), j.at("interior_knots").get<std::vector<double>>(),
                      j.at("lower").get<double>(), j.at("upper").get<double>());
}

json family_to_json(const SkewFamily& f) {
  return json{{"kind", std::string(kind_name(f.kind))}, {"concentration", f.concentration}};
}

json parsimony_to_json(const ParsimonyConfig& p) {
  return json{{"flm", std::string(variant_name(p.flm))},
              {"sigma_y", std::string(sigma_family_name(p.sigma_y))},
              {"common_concentration_x", p.common_concentration_x},
              {"common_concentration_y", p.common_concentration_y}};
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw DomainError("format_double: conversion failed");
  return std::string(buf, ptr);
}

CurveSet parse_curves_csv(std::istream& in, const std::string& source) {
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw InputError(source + ": empty input, a header row is required");
  ++line_no;
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  bool ok = true;
  const std::vector<std::string> header = split_csv(line, ok);
  const std::vector<std::string> expected{"curve_id", "variable", "role", "t", "value"};
  if (!ok || header != expected) {
    throw InputError(source + ":1: header must be curve_id,variable,role,t,value");
  }

  CurveSet curves;
  std::unordered_map<std::string, int> id_index;
  std::unordered_map<std::string, int> x_index;
  std::unordered_map<std::string, int> y_index;
  // samples[role][observation][variable]
  std::vector<std::vector<std::vector<Sample>>> samples[2];

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const std::vector<std::string> f = split_csv(line, ok);
    if (!ok) throw InputError(where + "unterminated quoted field");
    if (f.size() != 5) throw InputError(where + "expected 5 fields, found " + std::to_string(f.size()));
    const std::string& id = f[0];
    const std::string& name = f[1];
    if (id.empty()) throw InputError(where + "empty curve_id");
    if (name.empty()) throw InputError(where + "empty variable name");
    int role;
    if (f[2] == "X" || f[2] == "x") {
      role = 0;
    } else if (f[2] == "Y" || f[2] == "y") {
      role = 1;
    } else {
      throw InputError(where + "role must be X or Y, found '" + f[2] + "'");
    }
    double t = 0.0;
    double value = 0.0;
    if (!parse_number(f[3], t) || !std::isfinite(t)) throw InputError(where + "invalid time '" + f[3] + "'");
    if (!parse_number(f[4], value) || !std::isfinite(value)) throw InputError(where + "invalid value '" + f[4] + "'");

    auto& own = role == 0 ? x_index : y_index;
    const auto& other = role == 0 ? y_index : x_index;
    if (other.count(name) != 0) throw InputError(where + "variable '" + name + "' is used with both roles");
    auto [vit, new_var] = own.try_emplace(name, static_cast<int>(own.size()));
    if (new_var) (role == 0 ? curves.x_names : curves.y_names).push_back(name);
    auto [iit, new_id] = id_index.try_emplace(id, static_cast<int>(id_index.size()));
    if (new_id) {
      curves.ids.push_back(id);
      samples[0].emplace_back();
      samples[1].emplace_back();
    }
    auto& per_var = samples[role][static_cast<std::size_t>(iit->second)];
    if (per_var.size() <= static_cast<std::size_t>(vit->second)) per_var.resize(static_cast<std::size_t>(vit->second) + 1);
    per_var[static_cast<std::size_t>(vit->second)].push_back({t, value, line_no});
  }
  if (curves.ids.empty()) throw InputError(source + ": no data rows");

  for (int role = 0; role < 2; ++role) {
    const auto& names = role == 0 ? curves.x_names : curves.y_names;
    auto& target = role == 0 ? curves.x : curves.y;
    if (names.empty()) throw InputError(source + ": no " + std::string(role == 0 ? "X" : "Y") + " variables");
    for (std::size_t i = 0; i < curves.ids.size(); ++i) {
      auto& per_var = samples[role][i];
      per_var.resize(names.size());
      std::vector<Curve> row;
      for (std::size_t v = 0; v < names.size(); ++v) {
        auto& s = per_var[v];
        if (s.empty()) {
          throw InputError(source + ": curve " + curves.ids[i] + " has no samples for variable " + names[v]);
        }
        std::stable_sort(s.begin(), s.end(), [](const Sample& a, const Sample& b) { return a.t < b.t; });
        Curve c;
        for (std::size_t j = 0; j < s.size(); ++j) {
          if (j > 0 && s[j].t == s[j - 1].t) {
            throw InputError(source + ":" + std::to_string(std::max(s[j].line, s[j - 1].line)) + ": curve " +
                             curves.ids[i] + ", variable " + names[v] + ": repeated time " + format_double(s[j].t));
          }
          c.t.push_back(s[j].t);
          c.value.push_back(s[j].value);
        }
        row.push_back(std::move(c));
      }
      target.push_back(std::move(row));
    }
  }
  curves.validate();
  return curves;
}

CurveSet read_curves_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_curves_csv(in, path.string());
}

void write_curves_csv(std::ostream& out, const CurveSet& curves) {
  curves.validate();
  out << "curve_id,variable,role,t,value\n";
  for (int i = 0; i < curves.size(); ++i) {
    const std::string id = csv_field(curves.ids[static_cast<std::size_t>(i)]);
    for (int role = 0; role < 2; ++role) {
      const auto& names = role == 0 ? curves.x_names : curves.y_names;
      const auto& row = (role == 0 ? curves.x : curves.y)[static_cast<std::size_t>(i)];
      for (std::size_t v = 0; v < names.size(); ++v) {
        const std::string prefix = id + "," + csv_field(names[v]) + (role == 0 ? ",X," : ",Y,");
        for (std::size_t j = 0; j < row[v].t.size(); ++j) {
          out << prefix << format_double(row[v].t[j]) << ',' << format_double(row[v].value[j]) << '\n';
        }
      }
    }
  }
}

void write_truth_csv(std::ostream& out, const std::vector<std::string>& ids, const std::vector<int>& labels) {
  if (ids.size() != labels.size()) throw DomainError("write_truth_csv: length mismatch");
  out << "curve_id,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out << csv_field(ids[i]) << ',' << labels[i] << '\n';
}

std::vector<std::pair<std::string, int>> parse_labels_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw InputError(source + ": empty input, a header row is required");
  bool ok = true;
  const std::vector<std::string> header = split_csv(line, ok);
  if (!ok || header.size() < 2 || header[0] != "curve_id" || header[1] != "label") {
    throw InputError(source + ":1: header must start with curve_id,label");
  }
  std::vector<std::pair<std::string, int>> out;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const std::vector<std::string> f = split_csv(line, ok);
    if (!ok || f.size() != header.size()) throw InputError(where + "expected " + std::to_string(header.size()) + " fields");
    int label = 0;
    const auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), label);
    if (ec != std::errc() || ptr != f[1].data() + f[1].size()) throw InputError(where + "invalid label '" + f[1] + "'");
    out.emplace_back(f[0], label);
  }
  return out;
}

std::vector<std::pair<std::string, int>> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_labels_csv(in, path.string());
}

RunConfig parse_run_config(const json& j) {
  check_keys(j,
             {"basis", "K", "families", "flm_variants", "sigma_y_families", "common_concentration_x",
              "common_concentration_y", "thresholds", "fixed_dim", "reselect_dims", "n_starts", "seed", "max_iter",
              "tol", "init", "kmeans_restarts", "initial_skewness", "initial_concentration", "min_cluster_size"},
             "config");
  RunConfig cfg;
  if (j.contains("basis")) {
    const json& b = j["basis"];
    cfg.basis = parse_basis(b, cfg.basis, "basis");
    if (b.contains("variables")) {
      if (!b["variables"].is_object()) config_error("basis.variables must be an object");
      for (const auto& item : b["variables"].items()) {
        if (item.value().contains("variables")) config_error("basis.variables." + item.key() + " cannot nest variables");
        cfg.variable_basis[item.key()] = parse_basis(item.value(), cfg.basis, "basis.variables." + item.key());
      }
    }
  }
  SelectionGrid& grid = cfg.grid;
  if (j.contains("K")) grid.n_clusters = scalar_or_list<int>(j["K"], "K");
  if (j.contains("families")) grid.families = parse_families(j["families"]);

  std::vector<FlmVariant> variants{FlmVariant::AkjBkQkDk};
  std::vector<SigmaFamily> sigmas{SigmaFamily::VVV};
  std::vector<bool> common_x{false};
  std::vector<bool> common_y{false};
  if (j.contains("flm_variants")) {
    variants.clear();
    for (const auto& s : scalar_or_list<std::string>(j["flm_variants"], "flm_variants")) {
      variants.push_back(parse_flm_variant(s));
    }
  }
  if (j.contains("sigma_y_families")) {
    sigmas.clear();
    for (const auto& s : scalar_or_list<std::string>(j["sigma_y_families"], "sigma_y_families")) {
      sigmas.push_back(parse_sigma_family(s));
    }
  }
  if (j.contains("common_concentration_x")) {
    common_x = scalar_or_list<bool>(j["common_concentration_x"], "common_concentration_x");
  }
  if (j.contains("common_concentration_y")) {
    common_y = scalar_or_list<bool>(j["common_concentration_y"], "common_concentration_y");
  }
  grid.parsimony.clear();
  for (FlmVariant v : variants) {
    for (SigmaFamily s : sigmas) {
      for (bool cx : common_x) {
        for (bool cy : common_y) grid.parsimony.push_back(ParsimonyConfig{v, s, cx, cy});
      }
    }
  }
  if (j.contains("thresholds")) grid.thresholds = scalar_or_list<double>(j["thresholds"], "thresholds");
  if (j.contains("fixed_dim") && !j["fixed_dim"].is_null()) grid.fixed_dim = get_as<int>(j["fixed_dim"], "fixed_dim");
  if (j.contains("reselect_dims")) grid.reselect_each_iteration = get_as<bool>(j["reselect_dims"], "reselect_dims");

  EmOptions& em = cfg.em;
  if (j.contains("n_starts")) em.n_starts = get_as<int>(j["n_starts"], "n_starts");
  if (j.contains("seed")) em.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("max_iter")) em.max_iter = get_as<int>(j["max_iter"], "max_iter");
  if (j.contains("tol")) em.tol = get_as<double>(j["tol"], "tol");
  if (j.contains("kmeans_restarts")) em.kmeans_restarts = get_as<int>(j["kmeans_restarts"], "kmeans_restarts");
  if (j.contains("initial_skewness")) em.initial_skewness = get_as<double>(j["initial_skewness"], "initial_skewness");
  if (j.contains("initial_concentration")) {
    em.initial_concentration = get_as<double>(j["initial_concentration"], "initial_concentration");
  }
  if (j.contains("min_cluster_size")) em.min_cluster_size = get_as<double>(j["min_cluster_size"], "min_cluster_size");
  if (j.contains("init")) {
    const std::string s = get_as<std::string>(j["init"], "init");
    if (s == "kmeans") {
      em.init = InitStrategy::KMeans;
    } else if (s == "random") {
      em.init = InitStrategy::Random;
    } else {
      config_error("init must be \"kmeans\" or \"random\"");
    }
  }

  if (grid.n_clusters.empty() || grid.families.empty() || grid.parsimony.empty()) {
    config_error("K, families and parsimony grids must be nonempty");
  }
  if (!grid.fixed_dim && grid.thresholds.empty()) config_error("thresholds must be nonempty");
  for (int k : grid.n_clusters) {
    if (k < 1) config_error("every K must be at least 1");
  }
  for (double th : grid.thresholds) {
    if (!(th > 0.0)) config_error("thresholds must be positive");
  }
  if (grid.fixed_dim && *grid.fixed_dim < 1) config_error("fixed_dim must be at least 1");
  if (em.n_starts < 1) config_error("n_starts must be at least 1");
  if (em.max_iter < 1) config_error("max_iter must be at least 1");
  if (!(em.tol > 0.0)) config_error("tol must be positive");
  if (em.kmeans_restarts < 1) config_error("kmeans_restarts must be at least 1");
  if (!(em.initial_concentration > 0.0)) config_error("initial_concentration must be positive");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

std::pair<std::vector<BSplineBasis>, std::vector<BSplineBasis>> make_bases(const RunConfig& config,
                                                                           const CurveSet& curves) {
  auto build = [&](const std::vector<std::string>& names, const std::vector<std::vector<Curve>>& rows) {
    std::vector<BSplineBasis> bases;
    for (std::size_t v = 0; v < names.size(); ++v) {
      const auto it = config.variable_basis.find(names[v]);
      const BasisConfig& b = it != config.variable_basis.end() ? it->second : config.basis;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (const auto& row : rows) {
        lo = std::min(lo, row[v].t.front());
        hi = std::max(hi, row[v].t.back());
      }
      lo = b.lower.value_or(lo);
      hi = b.upper.value_or(hi);
      if (!(hi > lo)) throw InputError("variable " + names[v] + ": basis domain is empty");
      try {
        bases.push_back(b.interior_knots ? BSplineBasis(b.degree, *b.interior_knots, lo, hi)
                                         : BSplineBasis::uniform(b.n_basis, b.degree, lo, hi));
      } catch (const std::logic_error& e) {
        throw InputError("variable " + names[v] + ": " + e.what());
      }
    }
    return bases;
  };
  return {build(curves.x_names, curves.x), build(curves.y_names, curves.y)};
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw InputError("matrix: dimensions do not match the data length");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)];
  }
  return m;
}

json result_to_json(const FitResult& result, const FunctionalDataset& data) {
  const ClusterModel& model = result.model;
  json clusters = json::array();
  for (int k = 0; k < model.n_clusters(); ++k) {
    const XClusterParams& x = model.x[static_cast<std::size_t>(k)];
    const YClusterParams& y = model.y[static_cast<std::size_t>(k)];
    clusters.push_back(json{
        {"x",
         {{"mu", vector_to_json(x.mu)},
          {"alpha", vector_to_json(x.alpha)},
          {"orientation", matrix_to_json(x.orientation)},
          {"a", vector_to_json(x.a)},
          {"b", x.b},
          {"family", family_to_json(x.family)}}},
        {"y",
         {{"regression", matrix_to_json(y.regression)},
          {"alpha", vector_to_json(y.alpha)},
          {"sigma", matrix_to_json(y.sigma)},
          {"family", family_to_json(y.family)}}}});
  }
  json table = json::array();
  for (const BicRow& row : result.bic_table) {
    table.push_back(json{{"K", row.n_clusters},
                         {"x_family", std::string(kind_name(row.x_kind))},
                         {"y_family", std::string(kind_name(row.y_kind))},
                         {"parsimony", parsimony_to_json(row.parsimony)},
                         {"threshold", row.threshold},
                         {"ok", row.ok},
                         {"loglik", row.loglik},
                         {"bic", row.bic},
                         {"n_params", row.n_params},
                         {"n_iter", row.n_iter},
                         {"error", row.error}});
  }
  json x_bases = json::array();
  json y_bases = json::array();
  for (const auto& b : data.x_bases) x_bases.push_back(basis_to_json(b));
  for (const auto& b : data.y_bases) y_bases.push_back(basis_to_json(b));

  return json{{"format", "skewcwm-result"},
              {"version", 1},
              {"n", data.size()},
              {"K", model.n_clusters()},
              {"loglik", result.loglik},
              {"bic", result.bic},
              {"n_params", result.n_params},
              {"n_iter", result.n_iter},
              {"converged", result.converged},
              {"threshold", result.threshold},
              {"seed", result.seed},
              {"model",
               {{"pi", vector_to_json(model.pi)},
                {"parsimony", parsimony_to_json(model.parsimony)},
                {"dims", model.dims()},
                {"clusters", clusters}}},
              {"labels", result.labels},
              {"posterior", matrix_to_json(result.posterior)},
              {"loglik_trace", result.loglik_trace},
              {"warnings", result.warnings},
              {"bic_table", table},
              {"data",
               {{"ids", data.ids},
                {"x_names", data.x_names},
                {"y_names", data.y_names},
                {"x_bases", x_bases},
                {"y_bases", y_bases},
                {"cx", matrix_to_json(data.cx)},
                {"cy", matrix_to_json(data.cy)}}}};
}

StoredResult stored_result_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != "skewcwm-result") throw InputError("not a result document");
    const json& d = j.at("data");
    std::vector<BSplineBasis> x_bases;
    std::vector<BSplineBasis> y_bases;
    for (const json& b : d.at("x_bases")) x_bases.push_back(basis_from_json(b));
    for (const json& b : d.at("y_bases")) y_bases.push_back(basis_from_json(b));
    StoredResult out;
    out.data = FunctionalDataset::from_coefficients(
        matrix_from_json(d.at("cx")), matrix_from_json(d.at("cy")), std::move(x_bases), std::move(y_bases),
        d.at("ids").get<std::vector<std::string>>(), d.at("x_names").get<std::vector<std::string>>(),
        d.at("y_names").get<std::vector<std::string>>());
    out.labels = j.at("labels").get<std::vector<int>>();
    out.n_clusters = j.at("K").get<int>();
    if (out.labels.size() != static_cast<std::size_t>(out.data.size())) {
      throw InputError("label count does not match the number of curves");
    }
    for (int l : out.labels) {
      if (l < 1 || l > out.n_clusters) throw InputError("label out of range");
    }
    return out;
  } catch (const json::exception& e) {
    throw InputError(std::string("result document: ") + e.what());
  } catch (const std::logic_error& e) {
    throw InputError(std::string("result document: ") + e.what());
  }
}

void write_labels_csv(std::ostream& out, const std::vector<std::string>& ids, const FitResult& result) {
  if (ids.size() != result.labels.size()) throw DomainError("write_labels_csv: length mismatch");
  const Eigen::Index k = result.posterior.cols();
  out << "curve_id,label";
  for (Eigen::Index j = 0; j < k; ++j) out << ",posterior_" << j + 1;
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << csv_field(ids[i]) << ',' << result.labels[i];
    for (Eigen::Index j = 0; j < k; ++j) out << ',' << format_double(result.posterior(static_cast<Eigen::Index>(i), j));
    out << '\n';
  }
}

void write_bic_table_csv(std::ostream& out, const std::vector<BicRow>& table) {
  out << "K,x_family,y_family,flm,sigma_y,common_concentration_x,common_concentration_y,threshold,ok,loglik,bic,"
         "n_params,n_iter,error\n";
  for (const BicRow& r : table) {
    out << r.n_clusters << ',' << kind_name(r.x_kind) << ',' << kind_name(r.y_kind) << ','
        << variant_name(r.parsimony.flm) << ',' << sigma_family_name(r.parsimony.sigma_y) << ','
        << (r.parsimony.common_concentration_x ? "true" : "false") << ','
        << (r.parsimony.common_concentration_y ? "true" : "false") << ',' << format_double(r.threshold) << ','
        << (r.ok ? "true" : "false") << ',';
    if (r.ok) {
      out << format_double(r.loglik) << ',' << format_double(r.bic) << ',' << r.n_params << ',' << r.n_iter;
    } else {
      out << ",,,";
    }
    out << ',' << csv_field(r.error) << '\n';
  }
}

void write_mean_curves_csv(std::ostream& out, const StoredResult& stored, int grid_points) {
  if (grid_points < 2) throw DomainError("plot grid needs at least two points");
  const FunctionalDataset& data = stored.data;
  const int k = stored.n_clusters;
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  Eigen::MatrixXd mean_x = Eigen::MatrixXd::Zero(k, data.rx());
  Eigen::MatrixXd mean_y = Eigen::MatrixXd::Zero(k, data.ry());
  for (int i = 0; i < data.size(); ++i) {
    const int c = stored.labels[static_cast<std::size_t>(i)] - 1;
    mean_x.row(c) += data.cx.row(i);
    mean_y.row(c) += data.cy.row(i);
    ++counts[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < k; ++c) {
    const int m = counts[static_cast<std::size_t>(c)];
    const double scale = m > 0 ? 1.0 / m : std::numeric_limits<double>::quiet_NaN();
    mean_x.row(c) *= scale;
    mean_y.row(c) *= scale;
  }

  out << "role,variable,t";
  for (int c = 0; c < k; ++c) out << ",cluster_" << c + 1;
  out << '\n';
  for (int role = 0; role < 2; ++role) {
    const auto& bases = role == 0 ? data.x_bases : data.y_bases;
    const auto& names = role == 0 ? data.x_names : data.y_names;
    const Eigen::MatrixXd& means = role == 0 ? mean_x : mean_y;
    Eigen::Index offset = 0;
    for (std::size_t v = 0; v < bases.size(); ++v) {
      const BSplineBasis& b = bases[v];
      std::vector<double> grid(static_cast<std::size_t>(grid_points));
      for (int g = 0; g < grid_points; ++g) {
        grid[static_cast<std::size_t>(g)] =
            g == grid_points - 1 ? b.upper() : b.lower() + (b.upper() - b.lower()) * g / (grid_points - 1);
      }
      Eigen::MatrixXd values(grid_points, k);
      for (int c = 0; c < k; ++c) {
        values.col(c) = evaluate_curve(b, means.row(c).segment(offset, b.size()).transpose(), grid);
      }
      for (std::size_t g = 0; g < grid.size(); ++g) {
        out << (role == 0 ? "X," : "Y,") << csv_field(names[v]) << ',';
        out << format_double(grid[g]);
        for (int c = 0; c < k; ++c) out << ',' << format_double(values(static_cast<Eigen::Index>(g), c));
        out << '\n';
      }
      offset += b.size();
    }
  }
}

void write_benchmark_csv(std::ostream& summary_out, std::ostream& mse_out, std::ostream& replicates_out,
                         const std::string& scenario, const BenchmarkSummary& summary) {
  const auto n_ok = std::count_if(summary.replicates.begin(), summary.replicates.end(),
                                  [](const ReplicateOutcome& r) { return r.ok; });
  summary_out << "scenario,reps,n_ok,mean,sd,median\n";
  summary_out << csv_field(scenario) << ',' << summary.replicates.size() << ',' << n_ok << ','
              << format_double(summary.mean) << ',' << format_double(summary.sd) << ','
              << format_double(summary.median) << '\n';

  mse_out << "cluster,row,col,mse\n";
  for (std::size_t k = 0; k < summary.slope_mse.size(); ++k) {
    const Eigen::MatrixXd& m = summary.slope_mse[k];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        mse_out << k + 1 << ',' << i + 1 << ',' << j + 1 << ',' << format_double(m(i, j)) << '\n';
      }
    }
  }

  replicates_out << "replicate,seed,ok,ari,n_clusters,n_iter,seconds,error\n";
  for (std::size_t r = 0; r < summary.replicates.size(); ++r) {
    const ReplicateOutcome& o = summary.replicates[r];
    replicates_out << r + 1 << ',' << o.seed << ',' << (o.ok ? "true" : "false") << ',';
    if (o.ok) {
      replicates_out << format_double(o.ari) << ',' << o.n_clusters << ','
                     << (o.loglik_trace.empty() ? 0 : o.loglik_trace.size() - 1);
    } else {
      replicates_out << ",,";
    }
    replicates_out << ',' << format_double(o.seconds) << ',' << csv_field(o.error) << '\n';
  }
}

}  // namespace skewcwm
