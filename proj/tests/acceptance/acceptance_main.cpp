// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "../test_util.hpp"
#include "spas/certify.hpp"
#include "spas/cli.hpp"
#include "spas/constructions.hpp"
#include "spas/examples.hpp"
#include "spas/json_schema.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spas;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

SamplingPlan plan_with(std::size_t directions, std::uint64_t seed = 24301) {
  SamplingPlan plan;
  plan.directions_per_shell = directions;
  plan.rng_seed = seed;
  plan.threads = 0;
  return plan;
}

// ---------------------------------------------------------------------------
// 1. Projection laws.
// ---------------------------------------------------------------------------

Outcome geometry_laws() {
  Outcome o;
  constexpr double kTol = 1e-9;
  constexpr int kCases = 10000;
  double worst = 0.0;
  for (int v = 0; v < test::kConstraintVariants; ++v) {
    const auto set = test::constraint_variant(v);
    std::mt19937_64 rng(derive_seed(0xacce, static_cast<std::uint64_t>(v)));
    std::normal_distribution<double> normal(0.0, 3.0);
    auto draw = [&] {
      Point p(set.dim());
      for (auto& c : p) c = normal(rng);
      return p;
    };
    std::size_t bad = 0;
    for (int k = 0; k < kCases; ++k) {
      const Point x = draw(), y = draw(), w = draw();
      const Point px = set.project(x), py = set.project(y), z = set.project(w);
      const double idem = (set.project(px) - px).norm();
      const double expand = (px - py).norm() - (x - y).norm();
      const double vi = (x - px).dot(z - px);
      const double m = std::max({idem, expand, vi, set.residual(px)});
      worst = std::max(worst, m);
      if (m > kTol) ++bad;
    }
    o.require(bad == 0, "variant " + std::to_string(v) + ": " + std::to_string(bad) +
                            " of " + std::to_string(kCases) + " cases");
  }
  o.note(std::to_string(test::kConstraintVariants) + " variants x " + std::to_string(kCases) +
         " cases, worst law excess " + fmt(worst, 3));
  return o;
}

// ---------------------------------------------------------------------------
// 2-3. Ellipse constructions and the containment chain.
// ---------------------------------------------------------------------------

struct EllipseFixture {
  TargetSet A = TargetSet::singleton(test::vec({0, 0}));
  LyapunovFn V = LyapunovFn::weighted_quadratic(test::vec({1, 4}), test::vec({0, 0}));
  SamplingPlan plan = plan_with(2048);
};

Outcome ellipse_constructions(BackwardConstruction& backward_out) {
  Outcome o;
  const EllipseFixture f;
  constexpr double kTol = 1e-3;
  const auto outer = construct_outer(f.V, f.A, 1.0, f.plan);
  const auto back = construct_backward(f.V, f.A, 2.0, 0.0, f.plan);
  backward_out = back;
  const std::vector<std::pair<std::string, std::pair<double, double>>> checks = {
      {"l_hat", {outer.level_hat.level, 4.0}},  {"sigma_hat", {outer.sigma_hat.radius, 2.0}},
      {"l_rho_s", {back.l_rho_s, 4.0}},         {"delta", {back.delta, 1.0}},
      {"l_delta", {back.l_delta, 1.0}},         {"rho_o_s", {back.rho_o_s, 0.5}}};
  for (const auto& [name, vals] : checks) {
    o.require(std::abs(vals.first - vals.second) <= kTol,
              name + " = " + fmt(vals.first, 10) + " vs " + fmt(vals.second));
  }
  if (o.pass) {
    o.note("l_hat " + fmt(outer.level_hat.level, 8) + ", sigma_hat " +
           fmt(outer.sigma_hat.radius, 8) + ", (l_rho_s, delta, l_delta, rho_o_s) = (" +
           fmt(back.l_rho_s, 8) + ", " + fmt(back.delta, 8) + ", " + fmt(back.l_delta, 8) +
           ", " + fmt(back.rho_o_s, 8) + ") at 2048 directions");
  }
  return o;
}

Outcome containment_chain(const BackwardConstruction& back) {
  Outcome o;
  const EllipseFixture f;
  constexpr double kTol = 1e-3;
  const auto rep = verify_containment_chain(back, f.V, f.A, f.plan, kTol);
  double worst = -INFINITY;
  for (const auto& l : rep.links) worst = std::max(worst, l.worst_violation);
  o.require(rep.violations == 0, std::to_string(rep.violations) + " violations above 1e-3");

  auto corrupted = back;
  corrupted.l_delta *= 2.0;
  const auto bad = verify_containment_chain(corrupted, f.V, f.A, f.plan, kTol);
  o.require(bad.violations > 0, "doubled l_delta not flagged");
  o.note(std::to_string(rep.links.size()) + " links, worst violation " + fmt(worst, 3) +
         "; doubled l_delta flagged with " + std::to_string(bad.violations) + " violation(s)");
  return o;
}

// ---------------------------------------------------------------------------
// 4, 5, 7. Biased-gradient fixture.
// ---------------------------------------------------------------------------

struct Example1 {
  examples::BiasedGradientSystem sys = examples::ex1_reference_instance();
  SamplingPlan plan = plan_with(256);
  examples::BuiltSystem built = examples::ex1_build(sys, plan);
  SpecFamily family = examples::ex1_certificate_family(sys, 4.0, 1.0, 1.0, plan);
  double alpha_hat = 0.0;
};

Outcome example1_gain(Example1& ex) {
  Outcome o;
  const auto res = gain_search(ex.built.system, ex.built.lyapunov, ex.sys.target, ex.family,
                               ex.plan, 2.0);
  ex.alpha_hat = res.alpha_hat;
  const double rel = std::abs(res.alpha_hat - 0.5) / 0.5;
  o.require(rel <= 0.10, "alpha_hat " + fmt(res.alpha_hat) + " is " + fmt(100 * rel, 3) +
                             "% from 0.5");
  const double L = examples::ex1_lipschitz(ex.sys, 4.0, ex.plan);
  const double s = examples::ex1_sstar(ex.sys, ex.plan);
  const auto g = examples::ex1_gain_bounds(ex.sys.tau, L, s, 1.0, 1.0);
  o.note("alpha_hat " + fmt(res.alpha_hat) + " (" + fmt(100 * rel, 3) + "% from 0.5; " +
         "closed form with sampled L_s = " + fmt(L, 4) + ", s* = " + fmt(s, 4) + " gives " +
         fmt(g.alpha_hat) + "), " + std::to_string(res.trace.size()) + " bisection steps");
  return o;
}

Outcome example1_behavior(const Example1& ex) {
  Outcome o;
  const double alpha = ex.alpha_hat / 2;
  const auto gain = GainVector::scalar(alpha);
  const auto& A = ex.sys.target;
  const auto ver = verify_conditions(ex.built.system, ex.built.lyapunov, A, ex.family(alpha),
                                     gain, ex.plan);
  o.require(ver.pass(), "verify_conditions at alpha_hat/2");

  const auto outer = construct_outer(ex.built.lyapunov, A, 2.0, ex.plan);
  const auto inv = check_forward_invariance(ex.built.system, ex.built.lyapunov, A,
                                            outer.level_hat.level, gain, ex.plan, 500, 1000);
  o.require(inv.exits == 0, std::to_string(inv.exits) + " exits from the l_hat sublevel set");

  const auto back = construct_backward(ex.built.lyapunov, A, 2.0, 0.0, ex.plan);
  const auto stab = check_practical_stability(ex.built.system, A, back.delta, 2.0, gain,
                                              ex.plan, 500, 1000);
  o.require(stab.violations == 0, std::to_string(stab.violations) + " excursions beyond rho_s");
  o.note("alpha " + fmt(alpha) + ", l_hat " + fmt(outer.level_hat.level) + ": " +
         std::to_string(inv.exits) + " exits / " + std::to_string(inv.seeds) +
         " seeds; delta " + fmt(back.delta) + ": max excursion " + fmt(stab.max_excursion) +
         " / " + std::to_string(stab.seeds) + " seeds");
  return o;
}

Outcome example1_descent(const Example1& ex) {
  Outcome o;
  const double alpha = ex.alpha_hat / 2;
  const auto gain = GainVector::scalar(alpha);
  const auto& A = ex.sys.target;
  constexpr double kSigma = 2.0, kRhoA = 1.0, kEps = 0.5;
  const auto outer = construct_outer(ex.built.lyapunov, A, kSigma, ex.plan);
  const auto bound = gamma_and_time_bound(ex.family(alpha).W, A, outer.sigma_hat.radius, kRhoA,
                                          kEps, ex.built.system.constraint(), gain, ex.plan,
                                          ex.built.lyapunov, outer.level_hat.level);
  const auto attr = check_uniform_attractivity(ex.built.system, A, kSigma, kRhoA, kEps, gain,
                                               ex.plan, 500, 1000);
  o.require(attr.pass, "attractivity: " + attr.note);
  o.require(attr.hitting_time <= bound.time_bound,
            "empirical T " + std::to_string(attr.hitting_time) + " > bound " +
                std::to_string(bound.time_bound));
  o.note("gamma " + fmt(bound.gamma) + ", V_sup " + fmt(bound.v_sup) + ", T_bound " +
         std::to_string(bound.time_bound) + ", empirical T " +
         std::to_string(attr.hitting_time) + " over " + std::to_string(attr.seeds) + " seeds");
  return o;
}

// ---------------------------------------------------------------------------
// 6. Consensus.
// ---------------------------------------------------------------------------

Outcome consensus() {
  Outcome o;
  Eigen::MatrixXd avg(2, 2);
  avg << 0.5, 0.5, 0.5, 0.5;
  const double mu = examples::consensus_mu(avg);
  o.require(std::abs(mu) <= 1e-12, "mu = " + fmt(mu, 3));

  std::mt19937_64 rng(derive_seed(0xc0de, 6));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 3.0);
  double worst_round = 0.0, worst_commute = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int n = 2 + static_cast<int>(rng() % 5);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) P(i, perm[i]) = 1.0;
    const double a = unit(rng), b = unit(rng), c = 0.05 + unit(rng);
    const double s = a + b + c;
    const Eigen::MatrixXd W = (a / s) * Eigen::MatrixXd::Identity(n, n) +
                              (b / s) * 0.5 * (P + P.transpose()) +
                              (c / s) * Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    std::vector<examples::QuadraticObjective> objs(n);
    for (auto& obj : objs) obj = {0.5 + 1.5 * unit(rng), normal(rng)};
    const auto built = examples::consensus_build(W, objs);

    Point x(n);
    for (auto& v : x) v = normal(rng);
    const auto split = examples::consensus_decompose(x);
    worst_round = std::max(worst_round, (examples::consensus_recompose(split) - x).norm());

    const double alpha = 0.5 * unit(rng);
    const auto via_yz = examples::consensus_yz_step(split, alpha, objs, W);
    const auto direct = examples::consensus_decompose(step(built.system, x, GainVector::scalar(alpha)));
    worst_commute = std::max({worst_commute, std::abs(via_yz.y - direct.y),
                              (via_yz.z - direct.z).norm()});
  }
  o.require(worst_round <= 1e-10, "round trip error " + fmt(worst_round, 3));
  o.require(worst_commute <= 1e-10, "commutation error " + fmt(worst_commute, 3));

  const std::vector<examples::QuadraticObjective> objs = {{1.0, 0.0}, {1.0, 2.0}};
  const auto built = examples::consensus_build(avg, objs);
  const Point star = Point::Constant(2, built.x_star);
  constexpr std::size_t kHorizon = 2000, kTail = 1000, kSeeds = 32;
  SamplingPlan plan = plan_with(64, 7);
  const auto seeds = sample_ball_seeds(built.target, 10.0, built.system.constraint(), plan,
                                       kSeeds, 0x6a5);
  std::vector<double> terminal;
  std::string listing;
  for (double alpha : {0.2, 0.1, 0.05}) {
    const auto gain = GainVector::scalar(alpha);
    double sup = 0.0;
    for (const auto& s0 : seeds) {
      const auto traj = rollout(built.system, s0, gain, kHorizon);
      for (std::size_t t = kTail; t <= kHorizon; ++t) {
        const auto sp = examples::consensus_decompose(traj.states[t]);
        sup = std::max(sup, std::hypot(sp.y - built.x_star, sp.z.norm()));
      }
    }
    terminal.push_back(sup);
    const double moved = (step(built.system, star, gain) - star).norm();
    o.require(moved > 0.0, "1 x* is fixed at alpha " + fmt(alpha));
    listing += (listing.empty() ? "" : ", ") + fmt(alpha) + ": " + fmt(sup) + " (1x* moves " +
               fmt(moved, 4) + ")";
  }
  for (double d : terminal) o.require(std::isfinite(d) && d > 0.0, "terminal distance " + fmt(d));
  o.require(terminal[0] > terminal[1] && terminal[1] > terminal[2],
            "terminal distance not strictly decreasing");
  o.note("mu " + fmt(mu, 3) + ", round trip " + fmt(worst_round, 3) + ", commutation " +
         fmt(worst_commute, 3) + " on 1000 cases; terminal distance " + listing);
  return o;
}

// ---------------------------------------------------------------------------
// 8. CLI contract.
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_contract() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("spas_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);

  json cfg = json::parse(slurp(fs::path(SPAS_SOURCE_DIR) / "docs/configs/biased_gradient.json"));
  cfg["simulate"]["seeds"] = 100;
  const auto cfg_path = root / "config.json";
  std::ofstream(cfg_path) << cfg.dump(2);

  auto spas = [&](std::vector<std::string> args) {
    std::ostringstream out, err;
    return cli::run(args, out, err);
  };
  auto run_all = [&](const fs::path& out, const std::string& threads) {
    std::vector<int> codes;
    for (const std::string sub : {"verify", "construct", "gain-search", "simulate"})
      codes.push_back(spas({sub, "--config", cfg_path.string(), "--out", out.string(), "--seed",
                            "24301", "--threads", threads}));
    return codes;
  };

  const auto first = run_all(root / "a", "1");
  const auto second = run_all(root / "b", "4");
  o.require(first == std::vector<int>(4, 0), "a subcommand did not exit 0");
  o.require(second == first, "exit codes differ between runs");

  const std::vector<std::pair<std::string, std::string>> reports = {
      {"verification_report.json", "verification_report"},
      {"construction_report.json", "construction_report"},
      {"gain_search_report.json", "gain_search_report"},
      {"simulation_report.json", "simulation_report"},
      {"manifest.json", "manifest"}};
  for (const auto& [file, schema] : reports) {
    const auto errs = schema::validate(schema::published(schema), json::parse(slurp(root / "a" / file)));
    o.require(errs.empty(), file + " schema: " + (errs.empty() ? "" : errs.front()));
  }
  std::size_t compared = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    ++compared;
    if (slurp(e.path()) != slurp(root / "b" / fs::relative(e.path(), root / "a"))) ++differing;
  }
  o.require(differing == 0, std::to_string(differing) + " output files differ between runs");

  auto failing = cfg;
  failing["gain"] = 2.0;
  std::ofstream(root / "alpha2.json") << failing.dump(2);
  const int code_fail = spas({"verify", "--config", (root / "alpha2.json").string(), "--out",
                              (root / "c").string()});
  const auto rep = json::parse(slurp(root / "c" / "verification_report.json"));
  bool witnessed = false;
  for (const auto& [name, c] : rep["conditions"].items())
    witnessed = witnessed || (!c["pass"].get<bool>() && c["witness"].is_array());
  o.require(code_fail == cli::kExitConditionFailure && witnessed,
            "alpha = 2 gave exit " + std::to_string(code_fail));

  std::ofstream(root / "broken.json") << "{\"system\": [";
  const int code_malformed = spas({"verify", "--config", (root / "broken.json").string()});
  o.require(code_malformed == cli::kExitConfigError,
            "malformed JSON gave exit " + std::to_string(code_malformed));

  std::ofstream(root / "blocker") << "x";
  const int code_runtime = spas({"verify", "--config", cfg_path.string(), "--out",
                                 (root / "blocker" / "out").string()});
  o.require(code_runtime == cli::kExitRuntimeError,
            "unwritable output gave exit " + std::to_string(code_runtime));

  o.note("4 subcommands exit 0, 5 documents schema-valid, " + std::to_string(compared) +
         " outputs byte-identical across reruns (threads 1 vs 4); alpha = 2 -> " +
         std::to_string(code_fail) + ", malformed -> " + std::to_string(code_malformed) +
         ", unwritable output -> " + std::to_string(code_runtime));
  fs::remove_all(root);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> check;
  };
  BackwardConstruction ellipse_backward;
  Example1 ex1;
  const std::vector<Criterion> criteria = {
      {1, "geometry laws", 10, geometry_laws},
      {2, "ellipse constructions", 20, [&] { return ellipse_constructions(ellipse_backward); }},
      {3, "containment chain", 10, [&] { return containment_chain(ellipse_backward); }},
      {4, "biased-gradient gain agreement", 60, [&] { return example1_gain(ex1); }},
      {5, "biased-gradient invariance and stability", 60, [&] { return example1_behavior(ex1); }},
      {6, "consensus fixture", 30, consensus},
      {7, "descent bound", 30, [&] { return example1_descent(ex1); }},
      {8, "CLI contract", 30, cli_contract},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs <= c.budget_seconds, "runtime over " + fmt(c.budget_seconds) + " s");
    if (!o.pass) ++failures;
    std::printf("CRITERION %d %s: %s (%.2f s) %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
