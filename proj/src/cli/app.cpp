#include "spas/cli.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "problem.hpp"
#include "spas/json_schema.hpp"

#ifndef SPAS_VERSION
#define SPAS_VERSION "0.0.0"
#endif

namespace spas::cli {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Serialization helpers.
// ---------------------------------------------------------------------------

json vec_json(const Point& p) {
  json a = json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(p[i]);
  return a;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json condition_json(const ConditionResult& c) {
  json j = {{"pass", c.pass},
            {"worst_margin", c.worst_margin},
            {"witness", c.witness.size() ? vec_json(c.witness) : json(nullptr)},
            {"samples_used", c.samples_used}};
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

json level_json(const LevelEstimate& e) {
  return {{"level", e.level}, {"achieved_at", vec_json(e.achieved_at)},
          {"samples_used", e.samples_used}, {"tol", e.tol}};
}

json radius_json(const RadiusEstimate& e) {
  return {{"radius", e.radius}, {"achieved_at", vec_json(e.achieved_at)},
          {"samples_used", e.samples_used}, {"tol", e.tol},
          {"nonmonotone_rays", e.nonmonotone_rays}};
}

std::string csv_header(Eigen::Index n, const std::string& lead) {
  std::string h = lead;
  for (Eigen::Index i = 0; i < n; ++i) h += ",x" + std::to_string(i);
  return h + ",dist,V\n";
}

std::string csv_row(const std::string& lead, const Point& p, const TargetSet& A,
                    const LyapunovFn& V) {
  std::string row = lead;
  for (Eigen::Index i = 0; i < p.size(); ++i) row += "," + num(p[i]);
  return row + "," + num(A.distance(p)) + "," + num(V(p)) + "\n";
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

struct OutputFile {
  std::string name;  // relative to the output directory
  std::string content;
};

struct CommandResult {
  int exit_code = kExitPass;
  std::vector<OutputFile> files;
  std::string summary;
};

json report_header(const std::string& kind, const Problem& p) {
  return {{"report", kind},
          {"tool_version", SPAS_VERSION},
          {"system", p.system_name},
          {"sampling", plan_json(p.plan)}};
}

void add_json(CommandResult& r, const std::string& name, const json& j) {
  r.files.push_back({name, j.dump(2) + "\n"});
}

const CertificateConfig& need_certificate(const Problem& p, const char* cmd) {
  if (!p.certificate)
    throw ConfigError(std::string(cmd) + " needs a \"certificate\" section");
  return *p.certificate;
}

double need_gain(const Problem& p, const char* cmd) {
  if (!p.gain) throw ConfigError(std::string(cmd) + " needs an explicit \"gain\"");
  return *p.gain;
}

CommandResult cmd_verify(const Problem& p) {
  const auto& cert = need_certificate(p, "verify");
  const double alpha = need_gain(p, "verify");
  spdlog::info("verify: gain {} on {}", alpha, p.system_name);
  const auto rep = verify_conditions(*p.system, p.lyapunov, *p.target, cert.spec,
                                     GainVector::scalar(alpha), p.plan);
  json j = report_header("verification", p);
  j["gain"] = alpha;
  j["certificate"] = {{"sigma_o", cert.spec.sigma_o}, {"eps_o", cert.spec.eps_o},
                      {"rho_o", cert.spec.rho_o}, {"b_o", cert.spec.b_o}};
  j["pass"] = rep.pass();
  j["conditions"] = json::object();
  for (const auto& [name, c] : rep.conditions) {
    j["conditions"][name] = condition_json(c);
    spdlog::debug("verify: {} pass={} worst_margin={}", name, c.pass, c.worst_margin);
  }
  CommandResult r;
  r.exit_code = rep.pass() ? kExitPass : kExitConditionFailure;
  add_json(r, "verification_report.json", j);
  r.summary = std::string("verify: ") + (rep.pass() ? "PASS" : "FAIL");
  return r;
}

CommandResult cmd_construct(const Problem& p) {
  if (!p.construct) throw ConfigError("construct needs a \"construct\" section");
  const auto& cc = *p.construct;
  const auto& A = *p.target;
  const auto& V = p.lyapunov;
  CommandResult r;
  json j = report_header("construction", p);
  std::string csv = csv_header(A.dim(), "set,index");
  auto boundary = [&](const std::string& set, double level) {
    const auto pts = levelset_boundary(V, A, level, p.plan);
    for (std::size_t i = 0; i < pts.size(); ++i)
      csv += csv_row(set + "," + std::to_string(i), pts[i], A, V);
  };

  const auto outer = construct_outer(V, A, cc.sigma_tilde, p.plan);
  j["outer"] = {{"sigma_tilde", outer.sigma_tilde},
                {"level_hat", level_json(outer.level_hat)},
                {"sigma_hat", radius_json(outer.sigma_hat)}};
  boundary("level_hat", outer.level_hat.level);

  const auto inner = construct_inner(V, A, cc.eps_o, p.plan);
  j["inner"] = {{"eps_o", inner.eps_o}, {"l_o", inner.l_o},
                {"delta_check", inner.delta_check}, {"l_check", inner.l_check},
                {"rho_s_check", inner.rho_s_check}, {"samples_used", inner.samples_used}};
  if (inner.l_check > 0) boundary("l_check", inner.l_check);

  bool pass = true;
  j["backward"] = nullptr;
  j["containment"] = nullptr;
  if (cc.rho_s) {
    try {
      const auto b = construct_backward(V, A, *cc.rho_s, cc.eps_o, p.plan);
      j["backward"] = {{"rho_s", b.rho_s}, {"eps_o", b.eps_o}, {"l_rho_s", b.l_rho_s},
                       {"delta", b.delta}, {"l_delta", b.l_delta}, {"rho_o_s", b.rho_o_s},
                       {"rho_s_check", b.rho_s_check}, {"samples_used", b.samples_used}};
      boundary("l_rho_s", b.l_rho_s);
      boundary("l_delta", b.l_delta);
      const auto chain = verify_containment_chain(b, V, A, p.plan, cc.containment_tolerance);
      json links = json::array();
      for (const auto& l : chain.links)
        links.push_back({{"name", l.name}, {"worst_violation", l.worst_violation},
                         {"witness", vec_json(l.witness)}, {"samples_used", l.samples_used}});
      j["containment"] = {{"pass", chain.pass()}, {"tolerance", chain.tolerance},
                          {"violations", chain.violations}, {"links", links}};
      pass = chain.pass();
    } catch (const CertificationError& e) {
      j["error"] = e.what();
      pass = false;
    }
  }
  j["pass"] = pass;
  r.exit_code = pass ? kExitPass : kExitConditionFailure;
  add_json(r, "construction_report.json", j);
  r.files.push_back({"levelset_boundary.csv", csv});
  r.summary = std::string("construct: ") + (pass ? "PASS" : "FAIL");
  if (j.contains("error")) r.summary += " (" + j["error"].get<std::string>() + ")";
  return r;
}

CommandResult cmd_gain_search(const Problem& p) {
  const auto& cert = need_certificate(p, "gain-search");
  if (!p.gain_search) throw ConfigError("gain-search needs a \"gain_search\" section");
  const auto& gs = *p.gain_search;
  const CertificateSpec spec = cert.spec;
  const SpecFamily family = [spec](double) { return spec; };

  json j = report_header("gain_search", p);
  j["alpha_max"] = gs.alpha_max;
  j["rel_tol"] = gs.rel_tol;
  CommandResult r;
  bool pass = true;
  try {
    const auto res = gain_search(*p.system, p.lyapunov, *p.target, family, p.plan,
                                 gs.alpha_max, gs.rel_tol);
    j["alpha_hat"] = res.alpha_hat;
    json trace = json::array();
    for (const auto& s : res.trace) trace.push_back({{"alpha", s.alpha}, {"pass", s.pass}});
    j["trace"] = trace;
  } catch (const CertificationError& e) {
    j["alpha_hat"] = nullptr;
    j["trace"] = json::array();
    j["error"] = e.what();
    pass = false;
  }
  j["closed_form"] = nullptr;
  if (p.biased && cert.example1_margin) {
    const double L = examples::ex1_lipschitz(*p.biased, spec.sigma_o, p.plan);
    const double s_star = examples::ex1_sstar(*p.biased, p.plan);
    const auto g = examples::ex1_gain_bounds(p.biased->tau, L, s_star, spec.rho_o, spec.b_o);
    json cf = {{"lipschitz", L}, {"s_star", s_star}, {"alpha_bo", g.alpha_bo},
               {"alpha_rho_o", g.alpha_rho_o}, {"alpha_w", g.alpha_w},
               {"alpha_hat", g.alpha_hat}};
    cf["relative_gap"] = j["alpha_hat"].is_null()
                             ? json(nullptr)
                             : json(std::abs(j["alpha_hat"].get<double>() - g.alpha_hat) /
                                    g.alpha_hat);
    j["closed_form"] = cf;
  }
  j["pass"] = pass;
  r.exit_code = pass ? kExitPass : kExitConditionFailure;
  add_json(r, "gain_search_report.json", j);
  r.summary = "gain-search: " + (pass ? "alpha_hat = " + num(j["alpha_hat"].get<double>())
                                      : std::string("FAIL (") + j["error"].get<std::string>() + ")");
  return r;
}

CommandResult cmd_simulate(const Problem& p) {
  if (!p.simulate) throw ConfigError("simulate needs a \"simulate\" section");
  const double alpha = need_gain(p, "simulate");
  const auto& sc = *p.simulate;
  const auto& A = *p.target;
  const auto& sys = *p.system;
  const GainVector gain = GainVector::scalar(alpha);

  const auto stab_seeds = sample_ball_seeds(A, sc.delta, sys.constraint(), p.plan, sc.seeds,
                                            0x57abu);
  const auto attr_seeds = sample_ball_seeds(A, sc.sigma, sys.constraint(), p.plan, sc.seeds,
                                            0xa77au);
  spdlog::info("simulate: {} seeds, horizon {}", sc.seeds, sc.horizon);
  const auto stab = check_practical_stability(sys, A, sc.delta, sc.rho_s, gain, stab_seeds,
                                              sc.horizon);
  const auto attr = check_uniform_attractivity(sys, A, sc.sigma, sc.rho_a, sc.eps, gain,
                                               attr_seeds, sc.horizon);

  json j = report_header("simulation", p);
  j["gain"] = alpha;
  j["horizon"] = sc.horizon;
  j["stability"] = {{"pass", stab.pass}, {"delta", stab.delta}, {"rho_s", stab.rho_s},
                    {"seeds", stab.seeds}, {"violations", stab.violations},
                    {"max_excursion", stab.max_excursion}, {"worst_seed", stab.worst_seed},
                    {"worst_t", stab.worst_t}};
  j["attractivity"] = {{"pass", attr.pass}, {"sigma", attr.sigma}, {"rho_a", attr.rho_a},
                       {"eps", attr.eps}, {"seeds", attr.seeds},
                       {"hitting_time", attr.hitting_time}, {"failures", attr.failures},
                       {"failing_seed", attr.failing_seed ? json(*attr.failing_seed)
                                                          : json(nullptr)},
                       {"note", attr.note}};
  j["empirical_T"] = attr.pass ? json(attr.hitting_time) : json(nullptr);
  j["max_excursion"] = stab.max_excursion;

  j["descent_bound"] = nullptr;
  if (p.certificate) {
    try {
      const auto outer = construct_outer(p.lyapunov, A, sc.sigma, p.plan);
      const auto b = gamma_and_time_bound(p.certificate->spec.W, A, outer.sigma_hat.radius,
                                          sc.rho_a, sc.eps, sys.constraint(), gain, p.plan,
                                          p.lyapunov, outer.level_hat.level);
      j["descent_bound"] = {{"gamma", b.gamma}, {"gamma_at", vec_json(b.gamma_at)},
                            {"v_sup", b.v_sup}, {"sigma_hat", outer.sigma_hat.radius},
                            {"time_bound", b.time_bound},
                            {"holds", attr.pass && attr.hitting_time <= b.time_bound}};
    } catch (const CertificationError& e) {
      j["descent_bound"] = {{"error", e.what()}};
    }
  }

  CommandResult r;
  json files = json::array();
  auto dump = [&](const std::string& kind, const std::vector<Point>& seeds) {
    const std::size_t k = std::min(seeds.size(), sc.trajectory_csv_limit);
    for (std::size_t s = 0; s < k; ++s) {
      char name[64];
      std::snprintf(name, sizeof name, "trajectories/%s_seed_%04zu.csv", kind.c_str(), s);
      const auto traj = rollout(sys, seeds[s], gain, sc.horizon);
      std::string csv = csv_header(A.dim(), "t");
      for (std::size_t t = 0; t < traj.states.size(); ++t)
        csv += csv_row(std::to_string(t), traj.states[t], A, p.lyapunov);
      r.files.push_back({name, std::move(csv)});
      files.push_back(name);
    }
  };
  dump("stability", stab_seeds);
  dump("attractivity", attr_seeds);
  j["trajectory_files"] = files;
  const bool pass = stab.pass && attr.pass;
  j["pass"] = pass;
  r.exit_code = pass ? kExitPass : kExitConditionFailure;
  r.files.insert(r.files.begin(), {"simulation_report.json", j.dump(2) + "\n"});
  std::ostringstream os;
  os << "simulate: " << (pass ? "PASS" : "FAIL") << " (max excursion "
     << num(stab.max_excursion) << ", empirical T "
     << (attr.pass ? std::to_string(attr.hitting_time) : std::string("n/a")) << ")";
  r.summary = os.str();
  return r;
}

// ---------------------------------------------------------------------------
// Output.
// ---------------------------------------------------------------------------

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

void write_outputs(const Problem& p, const std::string& subcommand, const CommandResult& r,
                   double wall_seconds) {
  for (const auto& f : r.files) write_atomic(p.out_dir / f.name, f.content);

  const auto manifest_path = p.out_dir / "manifest.json";
  json manifest = {{"tool", "spas"}, {"tool_version", SPAS_VERSION}, {"runs", json::object()}};
  if (std::ifstream in(manifest_path); in) {
    try {
      const json old = json::parse(in);
      if (old.contains("runs") && old["runs"].is_object()) manifest["runs"] = old["runs"];
    } catch (const json::exception&) {
      spdlog::warn("replacing unreadable manifest {}", manifest_path.string());
    }
  }
  json outputs = json::array();
  for (const auto& f : r.files) outputs.push_back(f.name);
  manifest["runs"][subcommand] = {
      {"config_hash", "fnv1a64:" + hex64(fnv1a64(p.effective.dump()))},
      {"seed", p.plan.rng_seed},
      {"threads", p.plan.threads},
      {"exit_code", r.exit_code},
      {"wall_time_seconds", wall_seconds},
      {"outputs", outputs}};
  write_atomic(manifest_path, manifest.dump(2) + "\n");
}

void configure_logging(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("spas", sink);
  logger->set_pattern("[spas] [%l] %v");
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("SPAS_LOG")) {
    const std::string v = env;
    if (v == "error") level = spdlog::level::err;
    else if (v == "warn") level = spdlog::level::warn;
    else if (v == "info") level = spdlog::level::info;
    else if (v == "debug") level = spdlog::level::debug;
    else logger->warn("ignoring SPAS_LOG={} (expected error, warn, info or debug)", v);
  }
  logger->set_level(level);
  spdlog::set_default_logger(logger);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging(err);
  // `err` may not outlive this call.
  struct DetachLogger {
    ~DetachLogger() { spdlog::set_default_logger(std::make_shared<spdlog::logger>("spas")); }
  } detach;

  CLI::App app{"Sampled Lyapunov certification for projected discrete-time systems", "spas"};
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  auto* config_opt = app.add_option("--config", config, "problem description (JSON)")
                         ->check(CLI::ExistingFile);
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "sampling seed (overrides sampling.seed)");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads, 0 = all cores")
                          ->check(CLI::NonNegativeNumber);
  app.require_subcommand(1, 1);
  for (const char* name : {"verify", "construct", "gain-search", "simulate"})
    app.add_subcommand(name)->fallthrough();
  app.get_subcommand("verify")->description("check the certificate conditions at the configured gain");
  app.get_subcommand("construct")->description("level-set constructions and containment chain");
  app.get_subcommand("gain-search")->description("largest certified scalar gain");
  app.get_subcommand("simulate")->description("rollout-based stability and attractivity checks");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
    if (config_opt->count() == 0) throw CLI::RequiredError("--config");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfigError;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  Overrides ov;
  if (seed_opt->count()) ov.seed = seed;
  if (threads_opt->count()) ov.threads = threads;
  if (out_opt->count()) ov.out_dir = out_dir;

  const auto start = std::chrono::steady_clock::now();
  try {
    const Problem p = load_problem(config, ov);
    CommandResult r;
    if (sub == "verify") r = cmd_verify(p);
    else if (sub == "construct") r = cmd_construct(p);
    else if (sub == "gain-search") r = cmd_gain_search(p);
    else r = cmd_simulate(p);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_outputs(p, sub, r, wall);
    out << r.summary << " [" << p.out_dir.string() << "]\n";
    return r.exit_code;
  } catch (const ConfigError& e) {
    err << "spas: config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const CertificationError& e) {
    err << "spas: " << e.what() << "\n";
    return kExitConditionFailure;
  } catch (const PreconditionError& e) {
    err << "spas: config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const DimensionError& e) {
    err << "spas: config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "spas: runtime error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

}  // namespace spas::cli
