#include "spas/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spas/error.hpp"
#include "spas/parallel.hpp"

namespace spas {

void CertificateSpec::validate() const {
  if (!(eps_o >= 0)) throw PreconditionError("CertificateSpec: eps_o must be >= 0");
  if (!(rho_o > 0)) throw PreconditionError("CertificateSpec: rho_o must be > 0");
  if (!(b_o > 0)) throw PreconditionError("CertificateSpec: b_o must be > 0");
  if (!(sigma_o > eps_o + rho_o))
    throw PreconditionError("CertificateSpec: requires sigma_o > eps_o + rho_o");
  if (!W) throw PreconditionError("CertificateSpec: margin function W is not set");
}

bool VerificationReport::pass() const {
  if (conditions.empty()) return false;
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const auto& kv) { return kv.second.pass; });
}

namespace {

struct Evaluated {
  double w = 0.0;
  double dv = 0.0;
};

// Folds a sample's signed slack into a condition result.
void fold(ConditionResult& c, double slack, const Point& at) {
  if (c.samples_used == 0 || slack < c.worst_margin) {
    c.worst_margin = slack;
    c.witness = at;
  }
  ++c.samples_used;
}

ConditionResult empty_region(const char* what) {
  ConditionResult c;
  c.pass = false;
  c.worst_margin = std::numeric_limits<double>::quiet_NaN();
  c.note = std::string("empty sample region: ") + what;
  return c;
}

}  // namespace

VerificationReport verify_conditions(const ParamSystem& sys, const LyapunovFn& V,
                                     const TargetSet& A, const CertificateSpec& spec,
                                     const GainVector& gain,
                                     const SamplingPlan& plan, double margin) {
  spec.validate();
  const double inner_r = spec.eps_o + spec.rho_o;
  VerificationReport rep;

  const auto annulus = sample_region(A, inner_r, spec.sigma_o, sys.constraint(), plan);
  if (annulus.empty()) {
    rep.conditions["P1"] = empty_region("annulus misses the constraint set");
    rep.conditions["P2"] = rep.conditions["P1"];
  } else {
    const auto evals = parallel_map(annulus.size(), plan.threads, [&](std::size_t i) {
      return Evaluated{spec.W(annulus[i], gain), delta_v(sys, V, annulus[i], gain)};
    });
    ConditionResult p1, p2;
    for (std::size_t i = 0; i < annulus.size(); ++i) {
      fold(p1, evals[i].w, annulus[i]);
      fold(p2, -evals[i].w - evals[i].dv, annulus[i]);
    }
    p1.pass = p1.worst_margin > margin;
    p2.pass = p2.worst_margin >= -margin;
    rep.conditions["P1"] = p1;
    rep.conditions["P2"] = p2;
  }

  const auto core = sample_region(A, 0.0, inner_r, sys.constraint(), plan);
  if (core.empty()) {
    rep.conditions["P3"] = empty_region("inner ball misses the constraint set");
  } else {
    const auto dvs = parallel_map(core.size(), plan.threads, [&](std::size_t i) {
      return delta_v(sys, V, core[i], gain);
    });
    ConditionResult p3;
    for (std::size_t i = 0; i < core.size(); ++i) fold(p3, spec.b_o - dvs[i], core[i]);
    p3.pass = p3.worst_margin >= -margin;
    rep.conditions["P3"] = p3;
  }
  return rep;
}

GainSearchResult gain_search(const ParamSystem& sys, const LyapunovFn& V,
                             const TargetSet& A, const SpecFamily& spec_family,
                             const SamplingPlan& plan, double alpha_max,
                             double rel_tol) {
  if (sys.gain_dim() != 1)
    throw PreconditionError("gain_search: only scalar gains are supported");
  if (!(alpha_max > 0)) throw PreconditionError("gain_search: alpha_max must be > 0");

  GainSearchResult res;
  auto passes = [&](double alpha) {
    bool ok = false;
    try {
      const auto spec = spec_family(alpha);
      ok = verify_conditions(sys, V, A, spec, GainVector::scalar(alpha), plan).pass();
    } catch (const PreconditionError&) {
      // The family has no certificate at this gain.
      ok = false;
    }
    res.trace.push_back({alpha, ok});
    return ok;
  };

  double lo = alpha_max;
  if (!passes(alpha_max)) {
    double hi = alpha_max;
    lo = alpha_max * 1e-6;
    if (!passes(lo)) {
      std::ostringstream os;
      os << "no admissible gain: conditions fail at alpha = " << lo;
      throw CertificationError(os.str());
    }
    while (hi - lo > rel_tol * lo) {
      const double mid = 0.5 * (lo + hi);
      if (passes(mid))
        lo = mid;
      else
        hi = mid;
    }
  }
  for (double frac : {0.5, 0.1}) {
    if (!passes(lo * frac)) {
      std::ostringstream os;
      os << "gain set is not down-closed: conditions pass at " << lo
         << " but fail at " << lo * frac;
      throw CertificationError(os.str());
    }
  }
  res.alpha_hat = lo;
  res.box = GainBox::interval(lo);
  return res;
}

// ---------------------------------------------------------------------------

InvarianceReport check_forward_invariance(const ParamSystem& sys,
                                          const LyapunovFn& V, const TargetSet& A,
                                          double l, const GainVector& gain,
                                          const SamplingPlan& plan,
                                          std::size_t horizon, std::size_t n_seeds,
                                          double margin) {
  if (!(l > 0)) throw PreconditionError("check_forward_invariance: l must be > 0");
  InvarianceReport rep;
  rep.level = l;
  rep.horizon = horizon;
  rep.sampling_radius = max_dist_on_levelset(V, A, l, plan).radius + plan.boundary_tol;

  std::vector<Point> seeds;
  seeds.reserve(n_seeds);
  const std::size_t budget = 100 * std::max<std::size_t>(n_seeds, 1);
  std::size_t drawn = 0;
  for (std::uint64_t batch = 0; seeds.size() < n_seeds && drawn < budget; ++batch) {
    const std::size_t want = std::min(budget - drawn, 2 * (n_seeds - seeds.size()) + 16);
    for (auto& p : sample_ball_seeds(A, rep.sampling_radius, sys.constraint(), plan,
                                     want, 0xf1u + batch)) {
      if (seeds.size() < n_seeds && V(p) <= l) seeds.push_back(std::move(p));
    }
    drawn += want;
  }
  if (seeds.size() < n_seeds) {
    std::ostringstream os;
    os << "rejection sampling starved: accepted " << seeds.size() << " of " << n_seeds
       << " seeds in " << drawn << " draws (sublevel set ∩ constraint looks empty)";
    throw CertificationError(os.str());
  }
  rep.seeds = seeds.size();

  struct Outcome {
    std::optional<ExitEvent> exit;
    double excess = -std::numeric_limits<double>::infinity();
  };
  const auto outcomes = parallel_map(seeds.size(), plan.threads, [&](std::size_t k) {
    Outcome o;
    const auto traj = rollout(sys, seeds[k], gain, horizon);
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
      const double v = V(traj.states[t]);
      o.excess = std::max(o.excess, v - l);
      if (!o.exit && v > l + margin) o.exit = ExitEvent{k, t, traj.states[t], v};
    }
    return o;
  });
  rep.worst_excess = -std::numeric_limits<double>::infinity();
  for (const auto& o : outcomes) {
    rep.worst_excess = std::max(rep.worst_excess, o.excess);
    if (o.exit) {
      ++rep.exits;
      if (rep.first_exits.size() < 16) rep.first_exits.push_back(*o.exit);
    }
  }
  rep.pass = rep.exits == 0;
  return rep;
}

StabilityReport check_practical_stability(const ParamSystem& sys,
                                          const TargetSet& A, double delta,
                                          double rho_s, const GainVector& gain,
                                          const std::vector<Point>& seeds,
                                          std::size_t horizon, double margin) {
  if (!(delta > 0) || !(delta <= rho_s))
    throw PreconditionError("check_practical_stability: requires 0 < delta <= rho_s");
  StabilityReport rep;
  rep.delta = delta;
  rep.rho_s = rho_s;
  rep.seeds = seeds.size();
  rep.horizon = horizon;

  struct Outcome {
    double excursion = 0.0;
    std::size_t t = 0;
  };
  const auto outcomes = parallel_map(seeds.size(), 1, [&](std::size_t k) {
    Outcome o;
    const auto traj = rollout(sys, seeds[k], gain, horizon);
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
      const double d = A.distance(traj.states[t]);
      if (d > o.excursion) {
        o.excursion = d;
        o.t = t;
      }
    }
    return o;
  });
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (outcomes[k].excursion > rho_s + margin) ++rep.violations;
    if (k == 0 || outcomes[k].excursion > rep.max_excursion) {
      rep.max_excursion = outcomes[k].excursion;
      rep.worst_seed = k;
      rep.worst_t = outcomes[k].t;
    }
  }
  rep.pass = rep.violations == 0;
  return rep;
}

StabilityReport check_practical_stability(const ParamSystem& sys,
                                          const TargetSet& A, double delta,
                                          double rho_s, const GainVector& gain,
                                          const SamplingPlan& plan,
                                          std::size_t horizon, std::size_t n_seeds,
                                          double margin) {
  if (!(delta > 0) || !(delta <= rho_s))
    throw PreconditionError("check_practical_stability: requires 0 < delta <= rho_s");
  const auto seeds =
      sample_ball_seeds(A, delta, sys.constraint(), plan, n_seeds, 0x57abu);
  return check_practical_stability(sys, A, delta, rho_s, gain, seeds, horizon, margin);
}

AttractivityReport check_uniform_attractivity(
    const ParamSystem& sys, const TargetSet& A, double sigma, double rho_a,
    double eps, const GainVector& gain, const std::vector<Point>& seeds,
    std::size_t horizon, double margin) {
  if (!(sigma > rho_a)) throw PreconditionError("check_uniform_attractivity: requires sigma > rho_a");
  if (!(eps > 0)) throw PreconditionError("check_uniform_attractivity: eps must be > 0");
  AttractivityReport rep;
  rep.sigma = sigma;
  rep.rho_a = rho_a;
  rep.eps = eps;
  rep.seeds = seeds.size();
  rep.horizon = horizon;
  const double radius = rho_a + eps + margin;

  struct Outcome {
    std::optional<std::size_t> entry;
    bool reexit = false;
  };
  const auto outcomes = parallel_map(seeds.size(), 1, [&](std::size_t k) {
    Outcome o;
    const auto traj = rollout(sys, seeds[k], gain, horizon);
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
      const bool inside = A.distance(traj.states[t]) <= radius;
      if (inside && !o.entry) o.entry = t;
      if (!inside && o.entry) o.reexit = true;
    }
    return o;
  });
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const auto& o = outcomes[k];
    if (!o.entry || o.reexit) {
      ++rep.failures;
      if (!rep.failing_seed) {
        rep.failing_seed = k;
        rep.note = o.entry ? "trajectory left the attracting ball after entering it"
                           : "trajectory never entered the attracting ball";
      }
      continue;
    }
    rep.hitting_time = std::max(rep.hitting_time, *o.entry);
  }
  rep.pass = rep.failures == 0;
  return rep;
}

AttractivityReport check_uniform_attractivity(
    const ParamSystem& sys, const TargetSet& A, double sigma, double rho_a,
    double eps, const GainVector& gain, const SamplingPlan& plan,
    std::size_t horizon, std::size_t n_seeds, double margin) {
  if (!(sigma > rho_a)) throw PreconditionError("check_uniform_attractivity: requires sigma > rho_a");
  if (!(eps > 0)) throw PreconditionError("check_uniform_attractivity: eps must be > 0");
  for (const auto& p : sample_shell(A, rho_a + eps, plan)) {
    if (A.distance(sys.constraint().project(p)) > sigma + plan.boundary_tol)
      throw PreconditionError(
          "check_uniform_attractivity: the eps-inflation of B(rho_a) is not inside "
          "B(sigma)");
  }
  const auto seeds =
      sample_ball_seeds(A, sigma, sys.constraint(), plan, n_seeds, 0xa77au);
  return check_uniform_attractivity(sys, A, sigma, rho_a, eps, gain, seeds, horizon,
                                    margin);
}

DescentBound gamma_and_time_bound(const MarginFn& W, const TargetSet& A,
                                  double sigma_hat, double rho_a, double eps,
                                  const ConstraintSet& xi, const GainVector& gain,
                                  const SamplingPlan& plan, const LyapunovFn& V,
                                  std::optional<double> v_sup) {
  if (!(rho_a >= 0) || !(eps > 0) || !(sigma_hat > rho_a + eps))
    throw PreconditionError(
        "gamma_and_time_bound: requires sigma_hat > rho_a + eps, eps > 0, rho_a >= 0");
  const auto region = sample_region(A, rho_a + eps, sigma_hat, xi, plan);
  if (region.empty())
    throw CertificationError("gamma_and_time_bound: the descent region has no samples");
  const auto ws = parallel_map(region.size(), plan.threads,
                               [&](std::size_t i) { return W(region[i], gain); });
  DescentBound out;
  out.samples_used = region.size();
  std::size_t best = 0;
  for (std::size_t i = 1; i < ws.size(); ++i)
    if (ws[i] < ws[best]) best = i;
  out.gamma = ws[best];
  out.gamma_at = region[best];
  if (!(out.gamma > 0)) {
    std::ostringstream os;
    os << "W is not positive on the descent region (min " << out.gamma
       << "); the margin condition fails at this gain";
    throw CertificationError(os.str());
  }
  out.v_sup = v_sup ? *v_sup : max_V_on_shell(V, A, sigma_hat, plan).level;
  out.time_bound = static_cast<std::size_t>(std::ceil(out.v_sup / out.gamma));
  return out;
}

SpspReport check_spsp(const std::vector<SpspSample>& samples, const LyapunovFn& V,
                      const TargetSet& A, double eps, double b, double sigma,
                      const std::function<double(const Point&)>& phi,
                      const std::optional<ConstraintSet>& xi, double margin) {
  if (!V.has_gradient())
    throw PreconditionError("check_spsp: the Lyapunov function has no gradient");
  if (!(sigma > eps) || !(eps >= 0) || !(b >= 0))
    throw PreconditionError("check_spsp: requires sigma > eps >= 0 and b >= 0");
  SpspReport rep;
  bool phi_positive = true;
  for (const auto& sample : samples) {
    if (xi && !xi->contains(sample.y)) {
      ++rep.skipped;
      continue;
    }
    const double d = A.distance(sample.y);
    const double inner = V.gradient(sample.y).dot(sample.s);
    if (d <= eps) {
      fold(rep.inner, inner + b, sample.y);
    } else if (d <= sigma) {
      const double f = phi(sample.y);
      fold(rep.outer, inner - f, sample.y);
      if (!(f > 0) && phi_positive) {
        phi_positive = false;
        rep.outer.note = "phi is not positive on the annulus";
        rep.outer.witness = sample.y;
      }
    } else {
      ++rep.skipped;
    }
  }
  rep.inner.pass = rep.inner.samples_used == 0 || rep.inner.worst_margin >= -margin;
  rep.outer.pass = phi_positive &&
                   (rep.outer.samples_used == 0 || rep.outer.worst_margin >= -margin);
  rep.pass = rep.inner.pass && rep.outer.pass;
  return rep;
}

}  // namespace spas
