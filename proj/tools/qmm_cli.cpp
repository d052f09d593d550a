// qmm_cli: batch front end. Exit codes: 0 ok, 1 verdict fail / refused recovery, 2 usage, 3 I/O or
// validation.

#include <qmm/qmm.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace qmm;
using io::Json;

namespace {

enum Exit { kOk = 0, kVerdict = 1, kUsage = 2, kIO = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IOError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_real(const std::string& s, const std::string& flag) {
  if (s == "inf") return kInf;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(flag + ": not a number: " + s);
}

std::vector<double> parse_list(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_real(item, flag));
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

QuasiMetricSpace load(const std::string& path) {
  if (path == "-") return io::read_space(std::cin);
  return io::load_space(path);
}

void emit(const std::string& text, const std::string& out) {
  if (out == "-") {
    std::cout << text << std::flush;
    if (!std::cout) throw IOError("write to stdout failed");
    return;
  }
  std::ofstream f(out, std::ios::binary);
  f << text;
  f.close();
  if (!f) throw IOError("cannot write " + out);
}

// shared analysis flags
struct Params {
  std::string s = "0.5", p = "1", q = "inf", sigma, Q = "1";
  std::string mode = "poincare", theorem = "lb";
  std::string center, radius, beta = "2", constant;
  std::string out = "-", format = "json", input = "-";
};

void add_exponents(CLI::App* c, Params& P) {
  c->add_option("--s", P.s, "smoothness s");
  c->add_option("--p", P.p, "integrability p");
  c->add_option("--q", P.q, "fine index q (\"inf\" allowed)");
}

void add_io(CLI::App* c, Params& P, bool input = true) {
  if (input) c->add_option("input", P.input, "space file (\"-\" for stdin)");
  c->add_option("--out", P.out, "output path (\"-\" for stdout)");
  c->add_option("--format", P.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

EmbeddingCase make_case(const Params& P) {
  EmbeddingCase c;
  auto th = parse_theorem(P.theorem);
  auto rg = parse_regime(P.mode);
  if (!th) throw UsageError("--theorem must be one of v|lb|doub|eps|global");
  if (!rg) throw UsageError("--mode must be one of sobolev|poincare|trudinger|holder");
  c.theorem = *th;
  c.regime = *rg;
  c.s = parse_real(P.s, "--s");
  c.p = parse_real(P.p, "--p");
  c.q = parse_real(P.q, "--q");
  c.Q = parse_real(P.Q, "--Q");
  if (c.theorem == Theorem::Eps) c.epsilon = c.s / 2;
  try {
    check_regime(c);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite quasi-metric measure spaces: geometry, seminorms, embeddings, recovery"};
  app.require_subcommand(1);
  Params P;

  // gen
  auto* gen = app.add_subcommand("gen", "generate a space file");
  std::string family;
  int n = 8, dim = 1, depth = 4;
  double contraction = 1.0 / 3, scale = 1, gap = 10, asym = 0, beta_sf = 0.5;
  std::string sizes = "4,4", base = "-";
  std::uint64_t seed = 1;
  gen->add_option("family", family, "grid|cantor|islands|random|snowflake")
      ->required()
      ->check(CLI::IsMember({"grid", "cantor", "islands", "random", "snowflake"}));
  gen->add_option("--n", n, "points per axis (grid) or points (random)");
  gen->add_option("--dim", dim);
  gen->add_option("--scale", scale);
  gen->add_option("--depth", depth);
  gen->add_option("--contraction", contraction);
  gen->add_option("--sizes", sizes, "island sizes, comma separated");
  gen->add_option("--gap", gap);
  gen->add_option("--seed", seed);
  gen->add_option("--asymmetry", asym);
  gen->add_option("--beta", beta_sf, "snowflake exponent");
  gen->add_option("--base", base, "snowflake: base space file");
  gen->add_option("--out", P.out);

  auto* analyze = app.add_subcommand("analyze", "geometry report");
  add_io(analyze, P);
  analyze->add_option("--Q", P.Q);

  auto* regc = app.add_subcommand("regularize", "emit rho# as JSON");
  add_io(regc, P);

  auto* semi = app.add_subcommand("seminorm", "minimal seminorm of a function");
  add_io(semi, P);
  add_exponents(semi, P);
  std::string values, kind = "tl";
  semi->add_option("--values", values, "JSON array file with u")->required();
  semi->add_option("--kind", kind)->check(CLI::IsMember({"tl", "besov", "sobolev"}));

  auto* bumps = app.add_subcommand("bumps", "bump function and its fractional gradient");
  add_io(bumps, P);
  add_exponents(bumps, P);
  std::string inner = "0";
  bumps->add_option("--center", P.center)->required();
  bumps->add_option("--radius", P.radius, "outer radius R (rho#)")->required();
  bumps->add_option("--inner", inner, "inner radius r");

  auto* verify = app.add_subcommand("verify", "best embedding constant over balls");
  add_io(verify, P);
  add_exponents(verify, P);
  verify->add_option("--sigma", P.sigma, "dilation (default C_rho)");
  verify->add_option("--Q", P.Q);
  verify->add_option("--mode", P.mode);
  verify->add_option("--theorem", P.theorem);
  verify->add_option("--center", P.center);
  verify->add_option("--radius", P.radius);
  verify->add_option("--seed", seed);
  verify->add_option("--constant", P.constant, "supplied constant to test against");

  auto* recover = app.add_subcommand("recover", "recover measure bounds from a measured constant");
  add_io(recover, P);
  add_exponents(recover, P);
  recover->add_option("--sigma", P.sigma);
  recover->add_option("--Q", P.Q);
  recover->add_option("--mode", P.mode, "a|b|c|d or sobolev|poincare|trudinger|holder");
  recover->add_option("--theorem", P.theorem, "lb (lower regularity) or doub");
  recover->add_option("--beta", P.beta);
  recover->add_option("--constant", P.constant, "use this constant instead of measuring");

  auto* triv = app.add_subcommand("triviality", "transition seminorm across resolutions");
  add_io(triv, P, false);
  add_exponents(triv, P);
  std::string resolutions = "8,16,32";
  triv->add_option("family", family, "line|cantor")->required()->check(CLI::IsMember({"line", "cantor"}));
  triv->add_option("--resolutions", resolutions);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    // -------------------------------------------------------------- gen
    if (*gen) {
      std::optional<QuasiMetricSpace> sp;
      try {
        if (family == "grid") sp = gen::grid(n, dim, scale);
        else if (family == "cantor") sp = gen::cantor(depth, contraction, scale);
        else if (family == "islands") {
          std::vector<int> sz;
          for (double v : parse_list(sizes, "--sizes")) sz.push_back(static_cast<int>(v));
          sp = gen::islands(sz, gap);
        } else if (family == "random") sp = gen::random_space(seed, n, asym);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      if (family == "snowflake") {
        if (!(beta_sf > 0)) throw UsageError("--beta must be positive");
        sp = gen::snowflake(load(base), beta_sf);
      }
      emit(io::to_text(io::space_to_json(*sp)), P.out);
      return kOk;
    }
    // ----------------------------------------------------------- analyze
    if (*analyze) {
      const double Q = parse_real(P.Q, "--Q");
      if (!(Q > 0)) throw UsageError("--Q must be positive");
      const auto sp = load(P.input);
      const auto reg = regularize(sp);
      emit(io::to_text(io::analysis_json(sp, reg, Q)), P.out);
      return kOk;
    }
    // -------------------------------------------------------- regularize
    if (*regc) {
      const auto sp = load(P.input);
      emit(io::to_text(io::regularize_json(sp, regularize(sp))), P.out);
      return kOk;
    }
    // ---------------------------------------------------------- seminorm
    if (*semi) {
      SeminormSpec spec{parse_real(P.s, "--s"), parse_real(P.p, "--p"), parse_real(P.q, "--q"),
                        kind == "besov" ? Kind::Besov : kind == "sobolev" ? Kind::Sobolev : Kind::TriebelLizorkin};
      if (!(spec.p >= 1) || !(spec.q >= 1)) throw UsageError("the solver needs p, q >= 1");
      const auto sp = load(P.input);
      std::ifstream vf(values);
      if (!vf) throw IOError("cannot open " + values);
      const Vector u = io::values_from_json(io::parse_json(vf, values), sp.size());
      const auto res = minimal_seminorm(sp, u, spec);
      const auto check = verify_gradient(sp, u, spec.s, res.witness);
      Json j;
      j["kind"] = to_string(spec.kind);
      j["s"] = io::number(spec.s);
      j["p"] = io::number(spec.p);
      j["q"] = io::number(spec.q);
      j["value"] = io::number(res.value);
      j["canonical_value"] = io::number(res.canonical_value);
      j["converged"] = res.converged;
      j["witness_valid"] = check.valid;
      j["worst_violation"] = io::number(check.worst_violation);
      if (const auto* g = std::get_if<SingleGradient>(&res.witness)) {
        j["gradient"] = io::vector_json(g->g);
      } else {
        Json lv;
        for (const auto& [k, v] : std::get<FractionalGradient>(res.witness).levels)
          lv[std::to_string(k)] = io::vector_json(v);
        j["levels"] = lv;
      }
      emit(io::to_text(j), P.out);
      return kOk;
    }
    // ------------------------------------------------------------- bumps
    if (*bumps) {
      const double s = parse_real(P.s, "--s"), p = parse_real(P.p, "--p"), q = parse_real(P.q, "--q");
      const double R = parse_real(P.radius, "--radius"), r = parse_real(inner, "--inner");
      const double c = parse_real(P.center, "--center");
      const auto sp = load(P.input);
      if (c < 0 || c >= static_cast<double>(sp.size()) || c != std::floor(c))
        throw UsageError("--center must be a point index");
      const auto reg = regularize(sp);
      const auto b = bump_function(reg, sp, static_cast<PointId>(c), r, R, default_alpha(reg, s));
      const auto g = bump_gradient(reg, sp, b, s, p, q);
      const auto chk = verify_gradient(sp, b.values, s, Gradient{g.grad});
      Json lv;
      for (const auto& [k, v] : g.grad.levels) lv[std::to_string(k)] = io::vector_json(v);
      Json j;
      j["center"] = b.center;
      j["r"] = io::number(b.r);
      j["R"] = io::number(b.R);
      j["alpha"] = io::number(b.alpha);
      j["values"] = io::vector_json(b.values);
      j["holder"] = io::number(b.holder);
      j["k0"] = g.k0;
      j["levels"] = lv;
      j["norm_TL"] = io::number(g.norm_TL);
      j["measured_TL"] = io::number(g.measured_TL);
      j["bound"] = io::number(g.bound);
      j["gradient_valid"] = chk.valid;
      j["worst_violation"] = io::number(chk.worst_violation);
      j["within_bound"] = g.measured_TL <= g.bound * (1 + 1e-12);
      emit(io::to_text(j), P.out);
      return kOk;
    }
    // ------------------------------------------------------------ verify
    if (*verify) {
      EmbeddingCase c = make_case(P);
      std::optional<double> supplied;
      if (!P.constant.empty()) supplied = parse_real(P.constant, "--constant");
      if (P.center.empty() != P.radius.empty()) throw UsageError("--center and --radius go together");
      const auto sp = load(P.input);
      const auto reg = regularize(sp);
      c.sigma = P.sigma.empty() ? reg.C_rho : parse_real(P.sigma, "--sigma");
      std::vector<Ball> balls;
      if (!P.center.empty()) {
        const double x = parse_real(P.center, "--center");
        if (x < 0 || x >= static_cast<double>(sp.size()) || x != std::floor(x))
          throw UsageError("--center must be a point index");
        balls.push_back({static_cast<PointId>(x), parse_real(P.radius, "--radius"), false});
      } else {
        balls = critical_balls(sp);
      }
      BatteryOptions opt;
      opt.seed = seed;
      const auto rep = best_constant(sp, reg, c, balls, default_battery(reg, sp, c, opt), supplied);
      emit(P.format == "csv" ? io::embedding_csv(rep) : io::to_text(io::embedding_json(rep)), P.out);
      return rep.verdict && !rep.unbounded ? kOk : kVerdict;
    }
    // ----------------------------------------------------------- recover
    if (*recover) {
      auto m = parse_recovery_mode(P.mode);
      if (!m) {
        const auto rg = parse_regime(P.mode);
        if (!rg) throw UsageError("--mode must be a|b|c|d or a regime name");
        m = *rg == Regime::Sobolev     ? RecoveryMode::A
            : *rg == Regime::Poincare  ? RecoveryMode::B
            : *rg == Regime::Trudinger ? RecoveryMode::C
                                       : RecoveryMode::D;
      }
      if (P.theorem != "lb" && P.theorem != "doub") throw UsageError("recover needs --theorem lb or doub");
      const bool doubling = P.theorem == "doub";
      RecoveryParams R;
      R.s = parse_real(P.s, "--s");
      R.p = parse_real(P.p, "--p");
      R.q = parse_real(P.q, "--q");
      R.Q = parse_real(P.Q, "--Q");
      R.beta = parse_real(P.beta, "--beta");
      std::optional<double> constant;
      if (!P.constant.empty()) constant = parse_real(P.constant, "--constant");
      const auto sp = load(P.input);
      const auto reg = regularize(sp);
      R.sigma = P.sigma.empty() ? reg.C_rho : parse_real(P.sigma, "--sigma");
      try {
        const double C = constant ? *constant : measure_for_recovery(sp, reg, R, *m, doubling).best_constant;
        const auto rep = doubling ? recover_doubling(sp, reg, R, C, *m) : recover_lower_regularity(sp, reg, R, C, *m);
        emit(P.format == "csv" ? io::recovery_csv(rep) : io::to_text(io::recovery_json(rep)), P.out);
        return kOk;
      } catch (const Error& e) {
        switch (e.code()) {
          case ErrorCode::NotPerfect:
          case ErrorCode::PreconditionFailed:
          case ErrorCode::UnboundedConstant:
            std::cerr << "recovery refused: " << e.what() << "\n";
            return kVerdict;
          default: throw;
        }
      }
    }
    // -------------------------------------------------------- triviality
    if (*triv) {
      const double p = parse_real(P.p, "--p"), q = parse_real(P.q, "--q");
      const auto s_grid = parse_list(P.s, "--s");
      std::vector<int> res;
      for (double v : parse_list(resolutions, "--resolutions")) res.push_back(static_cast<int>(v));
      SpaceFamily fam;
      if (family == "line") fam = {"line", [](int k) { return gen::grid(k); }};
      else fam = {"cantor", [](int k) { return gen::cantor(k, 1.0 / 3); }};
      std::vector<TrivialityRow> rows;
      try {
        rows = triviality_scan(fam, res, s_grid, p, q);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      if (triv->get_option("--format")->count() > 0 && P.format == "json") {
        Json a = Json::array();
        for (const auto& r : rows)
          a.push_back({{"resolution", r.resolution}, {"s", io::number(r.s)}, {"value", io::number(r.value)}});
        emit(io::to_text(a), P.out);
      } else {
        emit(io::triviality_csv(rows), P.out);
      }
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IOError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIO;
  } catch (const ValidationError& e) {
    std::cerr << "invalid space: " << e.what() << "\n";
    return kIO;
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::InvalidSpec:
      case ErrorCode::ShapeMismatch:
        std::cerr << "invalid input: " << e.what() << "\n";
        return kIO;
      default:
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
  }
  return kOk;
}
