#include "imcomm/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace imcomm {

using nlohmann::json;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix diag(std::initializer_list<double> d) {
  Vector v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v(i++) = x;
  return v.asDiagonal();
}

Vector vec(std::initializer_list<double> d) {
  Vector v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v(i++) = x;
  return v;
}

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::ValidationError, field + ": " + why);
}

Matrix matrix_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) invalid(path, "expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) invalid(path, "rows must be arrays of equal length");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) invalid(path, "entries must be numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

json matrix_to(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(row);
  }
  return out;
}

// B2 may legitimately have zero columns; nested arrays cannot express d0 x 0.
Matrix b2_from(const json& j, Eigen::Index d0) {
  if (j.is_array() && !j.empty() && j[0].is_array() && j[0].empty()) return Matrix(d0, 0);
  return matrix_from(j, "system.B2");
}

}  // namespace

std::vector<std::string> preset_names() { return {"fully-actuated-vi-a", "under-actuated-vi-b"}; }

SystemModel preset_model(std::string_view name) {
  SystemModel m;
  m.W = 0.1 * Matrix::Identity(4, 4);
  m.F = diag({2, 1, 1, 2});
  m.Fn = 10.0 * Matrix::Identity(4, 4);
  m.Sigma0 = 5.0 * Matrix::Identity(4, 4);
  m.X0 = 0.1 * Matrix::Identity(4, 4);
  m.n = 30;
  if (name == "fully-actuated-vi-a") {
    m.A = rows({{1.5, 0.2, 0, 0.7}, {0, 0.5, 0.5, 0.3}, {0.2, 0, 1.9, 0.4}, {0.3, 0, 0.3, 1.7}});
    m.B1 = rows({{1, 2, 0, 0}, {0, 0, 1, 0}, {0, 1.2, 0, 0}, {0, 0, 0, 1.3}});
    m.B2 = rows({{0, 0}, {1, 0}, {2, 0}, {0, 3}});
    m.G1 = diag({2, 2, 4, 6});
    m.G2 = diag({2, 2});
    return m;
  }
  if (name == "under-actuated-vi-b") {
    m.A = rows({{1.5, 0.2, 0, 0}, {0, 2.2, 0.5, 0.3}, {0, 0.2, 0.9, 0.4}, {0.2, 0, 0.3, 0.7}});
    m.B1 = rows({{1, 0}, {0, 0}, {0, 1.2}, {0, 0}});
    m.B2 = rows({{0, 0}, {1, 0}, {0, 0}, {0, 1.5}});
    m.G1 = diag({2, 2});
    m.G2 = diag({3, 3});
    return m;
  }
  invalid("system", "unknown preset '" + std::string(name) + "'");
}

Vector preset_target(std::string_view preset, std::string_view setting) {
  if (preset == "fully-actuated-vi-a") {
    if (setting == "A") return vec({-1, 2, 2, -2});
    if (setting == "B") return vec({3, -1, 2, 1});
    if (setting == "C") return vec({1, -2, -3, 3});
  } else if (preset == "under-actuated-vi-b") {
    if (setting == "A") return vec({-1, 2, 2, -2});
    if (setting == "B") return vec({1, -1, -2, 3});
    if (setting == "C") return vec({2, -2, 3, 2});
  }
  invalid("target", "unknown setting '" + std::string(setting) + "' for preset '" +
                        std::string(preset) + "'");
}

TargetSpec parse_target(std::string_view text, std::string_view preset, int d0) {
  if (text == "sampled") return TargetSpec::random();
  if (!preset.empty() && (text == "A" || text == "B" || text == "C")) {
    return TargetSpec::fixed_at(preset_target(preset, text));
  }
  std::vector<double> vals;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view tok = text.substr(pos, end - pos);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      invalid("target", "cannot parse '" + std::string(text) + "'");
    }
    vals.push_back(v);
    pos = end + 1;
  }
  if (static_cast<int>(vals.size()) != d0) {
    invalid("target", "expected " + std::to_string(d0) + " entries");
  }
  return TargetSpec::fixed_at(Eigen::Map<Vector>(vals.data(), d0));
}

void ExperimentConfig::validate() const {
  model.validate();
  if (runs < 1) invalid("runs", "must be at least 1");
  if (budget < 1) invalid("budget", "must be at least 1");
  if (!(theta > 0.0 && theta <= 1.0)) invalid("theta", "must lie in (0, 1]");
  if (!(epsilon > 0.0)) invalid("epsilon", "must be positive");
  if (!target.sampled && target.fixed.size() != model.d0()) invalid("target", "size differs from d0");
  for (const std::string& p : policies) {
    bool known = false;
    for (const std::string& k : kPolicyNames) known = known || k == p;
    if (!known) invalid("policies", "unknown policy '" + p + "'");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "top level must be an object");
  ExperimentConfig c;
  try {
    if (!j.contains("system")) invalid("system", "missing");
    const json& sys = j["system"];
    if (sys.is_string()) {
      c.preset = sys.get<std::string>();
      c.model = preset_model(c.preset);
    } else if (sys.is_object()) {
      auto req = [&](const char* key) -> const json& {
        if (!sys.contains(key)) invalid(std::string("system.") + key, "missing");
        return sys[key];
      };
      c.model.A = matrix_from(req("A"), "system.A");
      c.model.B1 = matrix_from(req("B1"), "system.B1");
      c.model.B2 = b2_from(req("B2"), c.model.A.rows());
      c.model.W = matrix_from(req("W"), "system.W");
      c.model.F = matrix_from(req("F"), "system.F");
      c.model.Fn = matrix_from(req("Fn"), "system.Fn");
      c.model.G1 = matrix_from(req("G1"), "system.G1");
      c.model.G2 = c.model.B2.cols() == 0 ? Matrix(0, 0) : matrix_from(req("G2"), "system.G2");
      c.model.Sigma0 = matrix_from(req("Sigma0"), "system.Sigma0");
      c.model.X0 = matrix_from(req("X0"), "system.X0");
      c.model.n = 30;
    } else {
      invalid("system", "expected a preset name or an object of matrices");
    }
    if (j.contains("horizon")) c.model.n = j["horizon"].get<int>();
    if (j.contains("policies")) c.policies = j["policies"].get<std::vector<std::string>>();
    if (j.contains("theta")) c.theta = j["theta"].get<double>();
    if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
    if (j.contains("shooting")) c.shooting = j["shooting"].get<bool>();
    if (j.contains("budget")) c.budget = j["budget"].get<int>();
    if (j.contains("runs")) c.runs = j["runs"].get<int>();
    if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("target")) {
      const json& t = j["target"];
      if (t.is_string()) {
        c.target = parse_target(t.get<std::string>(), c.preset, c.model.d0());
      } else if (t.is_array()) {
        const auto v = t.get<std::vector<double>>();
        c.target = TargetSpec::fixed_at(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
      } else {
        invalid("target", "expected an array, \"sampled\" or a setting letter");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const ExperimentConfig& c) {
  json sys;
  sys["A"] = matrix_to(c.model.A);
  sys["B1"] = matrix_to(c.model.B1);
  sys["B2"] = c.model.B2.cols() == 0 ? json::array({json::array()}) : matrix_to(c.model.B2);
  sys["W"] = matrix_to(c.model.W);
  sys["F"] = matrix_to(c.model.F);
  sys["Fn"] = matrix_to(c.model.Fn);
  sys["G1"] = matrix_to(c.model.G1);
  sys["G2"] = matrix_to(c.model.G2);
  sys["Sigma0"] = matrix_to(c.model.Sigma0);
  sys["X0"] = matrix_to(c.model.X0);
  json j;
  j["system"] = sys;
  j["horizon"] = c.model.n;
  j["policies"] = c.policies;
  j["theta"] = c.theta;
  j["epsilon"] = c.epsilon;
  j["shooting"] = c.shooting;
  j["budget"] = c.budget;
  j["runs"] = c.runs;
  j["master_seed"] = c.master_seed;
  j["out"] = c.out;
  if (c.target.sampled) {
    j["target"] = "sampled";
  } else {
    j["target"] = std::vector<double>(c.target.fixed.data(), c.target.fixed.data() + c.target.fixed.size());
  }
  return j.dump(2);
}

}  // namespace imcomm
