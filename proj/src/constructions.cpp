#include "spas/constructions.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "spas/error.hpp"
#include "spas/parallel.hpp"

namespace spas {

OuterConstruction construct_outer(const LyapunovFn& V, const TargetSet& A,
                                  double sigma_tilde, const SamplingPlan& plan) {
  if (!(sigma_tilde > 0))
    throw PreconditionError("construct_outer: sigma_tilde must be > 0");
  OuterConstruction out;
  out.sigma_tilde = sigma_tilde;
  out.level_hat = max_V_on_shell(V, A, sigma_tilde, plan);
  out.sigma_hat = max_dist_on_levelset(V, A, out.level_hat.level, plan);
  return out;
}

InnerConstruction construct_inner(const LyapunovFn& V, const TargetSet& A,
                                  double eps_o, const SamplingPlan& plan) {
  if (!(eps_o >= 0)) throw PreconditionError("construct_inner: eps_o must be >= 0");
  InnerConstruction out;
  out.eps_o = eps_o;
  if (eps_o == 0) return out;

  const auto l_o = max_V_on_shell(V, A, eps_o, plan);
  const auto delta_check = max_dist_on_levelset(V, A, l_o.level, plan);
  const auto l_check = max_V_on_shell(V, A, delta_check.radius, plan);
  const auto rho_check = max_dist_on_levelset(V, A, l_check.level, plan);
  out.l_o = l_o.level;
  out.delta_check = delta_check.radius;
  out.l_check = l_check.level;
  out.rho_s_check = rho_check.radius;
  out.samples_used = l_o.samples_used + delta_check.samples_used +
                     l_check.samples_used + rho_check.samples_used;
  return out;
}

BackwardConstruction backward_chain(const LyapunovFn& V, const TargetSet& A,
                                    double rho_s, double eps_o,
                                    const SamplingPlan& plan) {
  if (!(rho_s > 0)) throw PreconditionError("construct_backward: rho_s must be > 0");
  if (!(eps_o >= 0)) throw PreconditionError("construct_backward: eps_o must be >= 0");
  BackwardConstruction out;
  out.rho_s = rho_s;
  out.eps_o = eps_o;
  const auto l_rho = min_V_on_shell(V, A, rho_s, plan);
  const auto delta = min_dist_on_levelset(V, A, l_rho.level, plan);
  const auto l_delta = min_V_on_shell(V, A, delta.radius, plan);
  const auto inner_ball = min_dist_on_levelset(V, A, l_delta.level, plan);
  out.l_rho_s = l_rho.level;
  out.delta = delta.radius;
  out.l_delta = l_delta.level;
  out.rho_o_s = inner_ball.radius - eps_o;
  out.samples_used = l_rho.samples_used + delta.samples_used +
                     l_delta.samples_used + inner_ball.samples_used;
  return out;
}

BackwardConstruction construct_backward(const LyapunovFn& V, const TargetSet& A,
                                        double rho_s, double eps_o,
                                        const SamplingPlan& plan) {
  const auto inner = construct_inner(V, A, eps_o, plan);
  if (!(rho_s > inner.rho_s_check)) {
    std::ostringstream os;
    os << "rho_s = " << rho_s << " does not exceed the practical-stability floor "
       << "rho_s_check = " << inner.rho_s_check << " built from eps_o = " << eps_o;
    throw CertificationError(os.str());
  }
  auto out = backward_chain(V, A, rho_s, eps_o, plan);
  out.rho_s_check = inner.rho_s_check;
  if (!(out.rho_o_s > kConstructionSlack)) {
    std::ostringstream os;
    os << "rho_o_s = " << out.rho_o_s << " is not positive";
    if (rho_s <= inner.rho_s_check + kConstructionSlack)
      os << ": rho_s is within sampling slack of rho_s_check = " << inner.rho_s_check;
    else
      os << " although rho_s exceeds rho_s_check = " << inner.rho_s_check
         << "; the sampling plan is too coarse";
    throw CertificationError(os.str());
  }
  return out;
}

namespace {

template <class Measure>
ContainmentLink measure_link(std::string name, const std::vector<Point>& pts,
                             unsigned threads, Measure&& measure) {
  ContainmentLink link;
  link.name = std::move(name);
  link.samples_used = pts.size();
  link.worst_violation = -std::numeric_limits<double>::infinity();
  const auto vals = parallel_map(pts.size(), threads,
                                 [&](std::size_t i) { return measure(pts[i]); });
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (vals[i] > link.worst_violation) {
      link.worst_violation = vals[i];
      link.witness = pts[i];
    }
  }
  return link;
}

}  // namespace

ContainmentReport verify_containment_chain(const BackwardConstruction& result,
                                           const LyapunovFn& V,
                                           const TargetSet& A,
                                           const SamplingPlan& plan,
                                           double tolerance) {
  ContainmentReport rep;
  rep.tolerance = tolerance;
  auto dist = [&](double r) {
    return [&A, r](const Point& p) { return A.distance(p) - r; };
  };
  auto level = [&](double l) {
    return [&V, l](const Point& p) { return V(p) - l; };
  };

  rep.links.push_back(measure_link(
      "sublevel(l_rho_s) in ball(rho_s)",
      levelset_boundary(V, A, result.l_rho_s, plan, true), plan.threads,
      dist(result.rho_s)));
  rep.links.push_back(measure_link("ball(delta) in sublevel(l_rho_s)",
                                   sample_shell(A, result.delta, plan, true),
                                   plan.threads, level(result.l_rho_s)));
  rep.links.push_back(measure_link(
      "sublevel(l_delta) in ball(delta)",
      levelset_boundary(V, A, result.l_delta, plan, true), plan.threads,
      dist(result.delta)));
  const double inner_radius = result.eps_o + result.rho_o_s;
  if (inner_radius > 0) {
    rep.links.push_back(measure_link("ball(eps_o + rho_o_s) in sublevel(l_delta)",
                                     sample_shell(A, inner_radius, plan, true),
                                     plan.threads, level(result.l_delta)));
  }
  for (const auto& link : rep.links)
    if (link.worst_violation > tolerance) ++rep.violations;
  return rep;
}

}  // namespace spas
