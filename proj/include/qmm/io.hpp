#pragma once

#include <qmm/embeddings.hpp>
#include <qmm/geometry.hpp>
#include <qmm/recovery.hpp>
#include <qmm/space.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace qmm::io {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// numbers

/// Non-finite values travel as the strings "inf", "-inf", "nan".
inline Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double to_double(const Json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::nan("");
  }
  throw Error(ErrorCode::InvalidSpec, where + " is not a number");
}

inline Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

inline Json matrix_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
  return a;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Serializer with 17 significant digits for every float; key order is insertion order.
inline void write(std::ostream& os, const Json& j, int indent = 2, int depth = 0) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string end(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << Json(it.key()).dump() << ": ";
        write(os, it.value(), indent, depth + 1);
      }
      os << "\n" << end << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // arrays of scalars stay on one line
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      os << "[";
      bool first = true;
      for (const auto& e : j) {
        if (!first) os << (flat ? ", " : ",");
        first = false;
        if (!flat) os << "\n" << pad;
        write(os, e, indent, depth + 1);
      }
      if (!flat) os << "\n" << end;
      os << "]";
      return;
    }
    case Json::value_t::number_float: os << format_double(j.get<double>()); return;
    default: os << j.dump(); return;
  }
}

inline std::string to_text(const Json& j) {
  std::ostringstream os;
  write(os, j);
  os << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// spaces

inline QuasiMetricSpace space_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidSpec, "space file must be a JSON object");
  for (const char* key : {"rho", "mu"})
    if (!j.contains(key) || !j[key].is_array())
      throw Error(ErrorCode::InvalidSpec, std::string("missing array \"") + key + "\"");
  const auto& R = j["rho"];
  const auto n = static_cast<Eigen::Index>(R.size());
  Matrix rho(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = R[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw ValidationError({{ErrorCode::ShapeMismatch, "rho row " + std::to_string(i) + " length " +
                                                            std::to_string(row.is_array() ? row.size() : 0) +
                                                            " does not match " + std::to_string(n) + " rows"}});
    for (Eigen::Index k = 0; k < n; ++k)
      rho(i, k) = to_double(row[static_cast<std::size_t>(k)],
                            "rho[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  const auto& M = j["mu"];
  Vector mu(static_cast<Eigen::Index>(M.size()));
  for (std::size_t i = 0; i < M.size(); ++i) mu(static_cast<Eigen::Index>(i)) = to_double(M[i], "mu[" + std::to_string(i) + "]");
  std::vector<std::string> labels;
  if (j.contains("points")) {
    if (!j["points"].is_array()) throw Error(ErrorCode::InvalidSpec, "\"points\" must be an array");
    for (const auto& p : j["points"]) labels.push_back(p.is_string() ? p.get<std::string>() : p.dump());
  }
  const std::string name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : "space";
  return QuasiMetricSpace::validate(name, std::move(labels), std::move(rho), std::move(mu));
}

inline Json parse_json(std::istream& in, const std::string& source) {
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, source + ": malformed JSON (" + e.what() + ")");
  }
}

inline QuasiMetricSpace read_space(std::istream& in, const std::string& source = "<stdin>") {
  return space_from_json(parse_json(in, source));
}

inline QuasiMetricSpace load_space(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::InvalidSpec, "cannot open " + path);
  return read_space(f, path);
}

inline Json space_to_json(const QuasiMetricSpace& sp) {
  Json j;
  j["name"] = sp.name();
  j["points"] = sp.labels();
  j["rho"] = matrix_json(sp.rho());
  j["mu"] = vector_json(sp.mu());
  return j;
}

inline Vector values_from_json(const Json& j, std::size_t n) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidSpec, "function values must be a JSON array");
  if (j.size() != n)
    throw Error(ErrorCode::ShapeMismatch, "function has " + std::to_string(j.size()) + " values for " +
                                              std::to_string(n) + " points");
  Vector u(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) u(static_cast<Eigen::Index>(i)) = to_double(j[i], "u[" + std::to_string(i) + "]");
  return u;
}

// ---------------------------------------------------------------------------
// reports

inline Json analysis_json(const QuasiMetricSpace& sp, const RegularizedMetric& reg, double Q) {
  const auto perf = uniform_perfectness(sp);
  const auto fit = regularity_fit(sp, Q);
  const auto doub = doubling_analysis(sp, Q);
  Json j;
  j["C_rho"] = number(reg.C_rho);
  j["C_tilde_rho"] = number(reg.C_tilde_rho);
  j["diameter"] = number(diameter(sp));
  j["lambda_star"] = number(perf.lambda_star);
  j["ahlfors"] = {{"Q", number(Q)}, {"kappa", number(fit.kappa)}};
  j["doubling"] = {{"C_doub", number(doub.C_doub)}, {"kappa_Q", number(doub.kappa_Q)}};
  j["smoothness_lb"] = number(index_bounds(sp, {}, &reg).smoothness_lb);
  return j;
}

inline Json regularize_json(const QuasiMetricSpace& sp, const RegularizedMetric& reg) {
  Json j;
  j["alpha0"] = number(reg.alpha0);
  j["C_rho"] = number(reg.C_rho);
  j["C_tilde_rho"] = number(reg.C_tilde_rho);
  j["comparability"] = number(reg.comparability);
  j["points"] = sp.labels();
  j["rho_sharp"] = matrix_json(reg.rho_sharp);
  return j;
}

inline Json params_json(const EmbeddingCase& c) {
  Json j;
  j["s"] = number(c.s);
  j["p"] = number(c.p);
  j["q"] = number(c.q);
  j["Q"] = number(c.Q);
  j["sigma"] = number(c.sigma);
  if (c.b > 0) j["b"] = number(c.b);
  if (c.theorem == Theorem::Eps) j["epsilon"] = number(c.epsilon);
  if (c.regime == Regime::Trudinger) {
    j["c1"] = number(c.c1);
    j["omega"] = number(c.omega);
  }
  return j;
}

inline Json embedding_json(const EmbeddingReport& r) {
  Json j;
  j["theorem"] = to_string(r.c.theorem);
  j["regime"] = to_string(r.c.regime);
  j["params"] = params_json(r.c);
  Json balls = Json::array();
  for (const auto& e : r.per_ball) {
    Json rhs = Json::array();
    for (double v : e.rhs) rhs.push_back(number(v));
    balls.push_back({{"center", e.ball.center},
                     {"radius", number(e.ball.radius)},
                     {"witness", e.witness},
                     {"lhs", number(e.lhs)},
                     {"rhs", rhs},
                     {"ratio", number(e.ratio)}});
  }
  j["balls"] = balls;
  j["best_constant"] = number(r.best_constant);
  j["witness"] = r.witness;
  j["evaluations"] = r.evaluations;
  if (r.supplied) j["supplied"] = number(*r.supplied);
  std::string verdict = r.unbounded ? "UNBOUNDED" : (r.verdict ? "PASS" : "FAIL");
  j["verdict"] = verdict;
  j["outside_theorem"] = r.outside_theorem;
  return j;
}

inline Json recovery_json(const RecoveryReport& r) {
  Json j;
  j["mode"] = to_string(r.mode);
  j["kappa_recovered"] = number(r.kappa_recovered);
  j["kappa_exact"] = number(r.kappa_exact);
  Json balls = Json::array();
  for (const auto& b : r.per_ball) {
    Json e;
    e["x"] = b.x;
    e["r"] = number(b.r);
    if (r.doubling) {
      e["y"] = b.y;
      e["R"] = number(b.R);
    }
    e["mu"] = number(b.mu);
    e["C_prime"] = number(b.C_prime);
    e["theta"] = number(b.theta);
    e["bound"] = number(b.bound);
    e["kappa"] = number(b.kappa);
    e["restricted"] = b.restricted;
    e["hypothesis_holds"] = b.hypothesis_holds;
    e["chain_length"] = b.chain_length;
    if (r.mode == RecoveryMode::D) e["x0"] = b.x0;
    if (!b.note.empty()) e["note"] = b.note;
    balls.push_back(e);
  }
  j["per_ball"] = balls;
  j["doubling"] = r.doubling;
  j["exponent"] = number(r.exponent);
  j["kappa_restricted"] = number(r.kappa_restricted);
  j["lambda"] = number(r.lambda);
  j["sandwich_holds"] = r.sandwich_holds;
  j["notes"] = r.notes;
  return j;
}

inline std::string triviality_csv(const std::vector<TrivialityRow>& rows) {
  std::string out = "resolution,s,value\n";
  for (const auto& r : rows)
    out += std::to_string(r.resolution) + "," + format_double(r.s) + "," + format_double(r.value) + "\n";
  return out;
}

/// Flat CSV for the per-ball table of an embedding report.
inline std::string embedding_csv(const EmbeddingReport& r) {
  std::string out = "center,radius,witness,lhs,ratio\n";
  for (const auto& e : r.per_ball)
    out += std::to_string(e.ball.center) + "," + format_double(e.ball.radius) + "," + e.witness + "," +
           format_double(e.lhs) + "," + format_double(e.ratio) + "\n";
  return out;
}

inline std::string recovery_csv(const RecoveryReport& r) {
  std::string out = "x,r,y,R,mu,C_prime,theta,bound,kappa\n";
  for (const auto& b : r.per_ball)
    out += std::to_string(b.x) + "," + format_double(b.r) + "," + std::to_string(b.y) + "," + format_double(b.R) +
           "," + format_double(b.mu) + "," + format_double(b.C_prime) + "," + format_double(b.theta) + "," +
           format_double(b.bound) + "," + format_double(b.kappa) + "\n";
  return out;
}

}  // namespace qmm::io
