#include "problem.hpp"

#include <fstream>
#include <sstream>

#include "spas/cli.hpp"
#include "spas/json_schema.hpp"

namespace spas::cli {
namespace {

using nlohmann::json;

Vector to_vector(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

void require_dim(const std::string& what, Eigen::Index got, Eigen::Index want) {
  if (got != want) {
    std::ostringstream os;
    os << what << " has dimension " << got << " but the system state has dimension " << want;
    throw ConfigError(os.str());
  }
}

PrimitiveSet parse_primitive(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "all_space") return AllSpace{j.at("dim").get<Eigen::Index>()};
  if (type == "box") return Box{to_vector(j.at("lo")), to_vector(j.at("hi"))};
  if (type == "ball") return BallSet{to_vector(j.at("center")), j.at("radius").get<double>()};
  if (type == "halfspace")
    return Halfspace{to_vector(j.at("normal")), j.at("offset").get<double>()};
  const auto& cols = j.at("basis");
  const Point offset = to_vector(j.at("offset"));
  Eigen::MatrixXd basis(offset.size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const Vector col = to_vector(cols[c]);
    require_dim("affine basis vector", col.size(), offset.size());
    basis.col(static_cast<Eigen::Index>(c)) = col;
  }
  return AffineSubspace{basis, offset};
}

ConstraintSet parse_constraint(const json& j) {
  if (j.at("type") == "intersection") {
    std::vector<PrimitiveSet> parts;
    for (const auto& p : j.at("parts")) parts.push_back(parse_primitive(p));
    return ConstraintSet::intersection(std::move(parts));
  }
  return std::visit(
      [](auto&& p) -> ConstraintSet {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AllSpace>) return ConstraintSet::all_space(p.dim);
        else if constexpr (std::is_same_v<T, Box>) return ConstraintSet::box(p.lo, p.hi);
        else if constexpr (std::is_same_v<T, BallSet>) return ConstraintSet::ball(p.center, p.radius);
        else if constexpr (std::is_same_v<T, Halfspace>)
          return ConstraintSet::halfspace(p.normal, p.offset);
        else return ConstraintSet::affine(p.basis, p.offset);
      },
      parse_primitive(j));
}

TargetSet parse_target(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "singleton") return TargetSet::singleton(to_vector(j.at("point")));
  if (type == "ball") return TargetSet::ball(to_vector(j.at("center")), j.at("radius").get<double>());
  std::vector<Point> pts;
  for (const auto& p : j.at("points")) pts.push_back(to_vector(p));
  return TargetSet::point_cloud(std::move(pts));
}

LyapunovFn parse_lyapunov(const json& j, const TargetSet& target) {
  if (j.at("type") == "scaled_dist_squared")
    return LyapunovFn::scaled_dist_squared(target, j.at("c").get<double>());
  const Vector w = to_vector(j.at("weights"));
  const Point c = to_vector(j.at("center"));
  require_dim("lyapunov weights", w.size(), target.dim());
  require_dim("lyapunov center", c.size(), target.dim());
  return LyapunovFn::weighted_quadratic(w, c);
}

SamplingPlan parse_plan(const json& cfg) {
  SamplingPlan plan;
  const json s = cfg.value("sampling", json::object());
  plan.directions_per_shell = s.value("directions_per_shell", plan.directions_per_shell);
  plan.radial_refinements = s.value("radial_refinements", plan.radial_refinements);
  plan.rng_seed = s.value("seed", plan.rng_seed);
  plan.boundary_tol = s.value("boundary_tol", plan.boundary_tol);
  plan.threads = s.value("threads", 1u);
  return plan;
}

Point anchor_of(const TargetSet& t) {
  if (const auto* b = std::get_if<BallTarget>(&t.variant())) return b->center;
  if (const auto* s = std::get_if<Singleton>(&t.variant())) return s->point;
  throw ConfigError("biased_gradient needs a singleton or ball target");
}

Eigen::MatrixXd consensus_weights(const json& params, const std::filesystem::path& base) {
  const bool inline_w = params.contains("weights");
  const bool file_w = params.contains("weights_csv");
  if (inline_w == file_w)
    throw ConfigError("consensus: give exactly one of params.weights and params.weights_csv");
  if (file_w) {
    std::filesystem::path p = params.at("weights_csv").get<std::string>();
    if (p.is_relative()) p = base / p;
    return examples::load_consensus_matrix_csv(p);
  }
  const auto& rows = params.at("weights");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector row = to_vector(rows[static_cast<std::size_t>(i)]);
    if (row.size() != n) throw ConfigError("consensus: params.weights must be N rows of N values");
    w.row(i) = row.transpose();
  }
  return w;
}

// A number or coefficients c0, c1, ... of a polynomial in the gain.
std::vector<double> gain_polynomial(const json& j) {
  if (j.is_number()) return {j.get<double>()};
  return j.get<std::vector<double>>();
}

double horner(const std::vector<double>& c, double alpha) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * alpha + *it;
  return v;
}

MarginFn parse_margin(const json& j, const TargetSet& target) {
  const auto type = j.at("type").get<std::string>();
  if (type == "constant") {
    const double v = j.at("value").get<double>();
    return [v](const Point&, const GainVector&) { return v; };
  }
  const auto a = gain_polynomial(j.at("a"));
  const auto b = j.contains("b") ? gain_polynomial(j.at("b")) : std::vector<double>{0.0};
  return [a, b, target](const Point& x, const GainVector& g) {
    const double d = target.distance(x);
    return horner(a, g[0]) * d * d - horner(b, g[0]);
  };
}

void build_system(Problem& p, const json& cfg, const std::filesystem::path& base) {
  const json& sys = cfg.at("system");
  const json params = sys.value("params", json::object());
  const auto& name = p.system_name;

  std::optional<ConstraintSet> constraint;
  if (cfg.contains("constraint")) constraint = parse_constraint(cfg.at("constraint"));

  if (name == "consensus") {
    if (cfg.contains("target") || cfg.contains("lyapunov"))
      throw ConfigError("consensus: target and lyapunov are fixed by the fixture; remove them");
    const auto weights = consensus_weights(params, base);
    std::vector<examples::QuadraticObjective> objs;
    for (const auto& o : params.at("objectives"))
      objs.push_back({o.value("curvature", 1.0), o.at("minimizer").get<double>()});
    if (static_cast<Eigen::Index>(objs.size()) != weights.rows())
      throw ConfigError("consensus: one objective per agent is required");
    auto built = constraint ? examples::consensus_build(weights, objs, *constraint)
                            : examples::consensus_build(weights, objs);
    p.system.emplace(std::move(built.system));
    p.lyapunov = std::move(built.lyapunov);
    p.target.emplace(std::move(built.target));
    return;
  }

  if (name == "biased_gradient") {
    const TargetSet target = cfg.contains("target") ? parse_target(cfg.at("target"))
                                                    : TargetSet::ball(Point::Zero(2), 1.0);
    const Point anchor = anchor_of(target);
    const double scale = params.value("direction_scale", 1.0);
    if (constraint) require_dim("constraint", constraint->dim(), target.dim());
    examples::BiasedGradientSystem b{
        target, [anchor, scale](const Point& y) -> Vector { return scale * (y - anchor); },
        params.value("tau", 1.0), constraint ? *constraint : ConstraintSet::all_space(target.dim())};
    auto built = examples::ex1_build(b, p.plan);
    p.system.emplace(std::move(built.system));
    p.lyapunov = std::move(built.lyapunov);
    p.target.emplace(target);
    p.biased = std::move(b);
  } else {
    const auto n = params.at("dim").get<Eigen::Index>();
    p.target.emplace(cfg.contains("target") ? parse_target(cfg.at("target"))
                                            : TargetSet::singleton(Point::Zero(n)));
    require_dim("target", p.target->dim(), n);
    if (constraint) require_dim("constraint", constraint->dim(), n);
    ConstraintSet xi = constraint ? *constraint : ConstraintSet::all_space(n);
    DynamicsMap map;
    if (name == "linear_relaxation") {
      map = [](const Point& x, const GainVector& g) -> Point { return x - g[0] * x; };
    } else {
      Vector dir = Vector::Unit(n, 0);
      if (params.contains("direction")) {
        dir = to_vector(params.at("direction"));
        require_dim("drift direction", dir.size(), n);
      }
      map = [dir](const Point& x, const GainVector& g) -> Point { return x + g[0] * dir; };
    }
    p.system.emplace(n, 1, std::move(map), std::move(xi));
    p.lyapunov = LyapunovFn::scaled_dist_squared(*p.target, 1.0);
  }
  if (cfg.contains("lyapunov")) p.lyapunov = parse_lyapunov(cfg.at("lyapunov"), *p.target);
}

void build_sections(Problem& p, const json& cfg) {
  if (cfg.contains("certificate")) {
    const json& c = cfg.at("certificate");
    CertificateConfig cc;
    cc.spec.sigma_o = c.at("sigma_o").get<double>();
    cc.spec.eps_o = c.value("eps_o", 0.0);
    cc.spec.rho_o = c.at("rho_o").get<double>();
    cc.spec.b_o = c.at("b_o").get<double>();
    if (!(cc.spec.sigma_o > cc.spec.eps_o + cc.spec.rho_o))
      throw ConfigError("certificate: requires sigma_o > eps_o + rho_o");
    if (c.at("W").at("type") == "example1") {
      if (!p.biased) throw ConfigError("certificate.W: type example1 needs system biased_gradient");
      const auto family = examples::ex1_certificate_family(*p.biased, cc.spec.sigma_o,
                                                           cc.spec.rho_o, cc.spec.b_o, p.plan);
      cc.spec.W = family(0.0).W;
      cc.example1_margin = true;
    } else {
      cc.spec.W = parse_margin(c.at("W"), *p.target);
    }
    p.certificate = std::move(cc);
  }
  if (cfg.contains("gain")) p.gain = cfg.at("gain").get<double>();
  if (cfg.contains("gain_search")) {
    const json& g = cfg.at("gain_search");
    p.gain_search = GainSearchConfig{g.at("alpha_max").get<double>(), g.value("rel_tol", 1e-3)};
  }
  if (cfg.contains("construct")) {
    const json& c = cfg.at("construct");
    ConstructConfig cc;
    cc.sigma_tilde = c.at("sigma_tilde").get<double>();
    if (c.contains("rho_s")) cc.rho_s = c.at("rho_s").get<double>();
    cc.eps_o = c.value("eps_o", p.certificate ? p.certificate->spec.eps_o : 0.0);
    cc.containment_tolerance = c.value("containment_tolerance", kConstructionSlack);
    p.construct = cc;
  }
  if (cfg.contains("simulate")) {
    const json& s = cfg.at("simulate");
    SimulateConfig sc;
    sc.horizon = s.at("horizon").get<std::size_t>();
    sc.seeds = s.at("seeds").get<std::size_t>();
    sc.sigma = s.at("sigma").get<double>();
    sc.rho_a = s.at("rho_a").get<double>();
    sc.eps = s.at("eps").get<double>();
    sc.delta = s.at("delta").get<double>();
    sc.rho_s = s.at("rho_s").get<double>();
    sc.trajectory_csv_limit = s.value("trajectory_csv_limit", sc.trajectory_csv_limit);
    if (!(sc.rho_a + sc.eps < sc.sigma))
      throw ConfigError("simulate: requires rho_a + eps < sigma");
    if (!(sc.delta <= sc.rho_s)) throw ConfigError("simulate: requires delta <= rho_s");
    p.simulate = sc;
  }
}

}  // namespace

nlohmann::json plan_json(const SamplingPlan& plan) {
  return {{"directions_per_shell", plan.directions_per_shell},
          {"radial_refinements", plan.radial_refinements},
          {"seed", plan.rng_seed},
          {"boundary_tol", plan.boundary_tol}};
}

Problem load_problem(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON in ") + path.string() + ": " + e.what());
  }
  const auto errors = schema::validate(schema::published("config"), cfg);
  if (!errors.empty()) {
    std::ostringstream os;
    os << "config does not match the schema (docs/schemas/config.schema.json):";
    for (const auto& e : errors) os << "\n  " << e;
    throw ConfigError(os.str());
  }

  Problem p;
  p.system_name = cfg.at("system").at("name").get<std::string>();
  if (p.system_name == "custom")
    throw ConfigError(
        "system \"custom\" cannot be described in JSON: build a spas::ParamSystem with the "
        "C++ API (include/spas/system.hpp) and call the certify functions directly");

  if (overrides.seed) cfg["sampling"]["seed"] = *overrides.seed;
  p.plan = parse_plan(cfg);
  if (overrides.threads) p.plan.threads = *overrides.threads;
  p.out_dir = overrides.out_dir ? *overrides.out_dir : cfg.value("output_dir", "spas_out");

  p.effective = cfg;
  p.effective.erase("output_dir");
  if (p.effective.contains("sampling")) p.effective["sampling"].erase("threads");

  try {
    build_system(p, cfg, path.parent_path());
    p.plan.validate(p.system->state_dim());
    build_sections(p, cfg);
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  }
  return p;
}

}  // namespace spas::cli
