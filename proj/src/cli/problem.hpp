#pragma once

// A validated problem description with every library object built.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "spas/certify.hpp"
#include "spas/examples.hpp"

namespace spas::cli {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out_dir;
};

struct CertificateConfig {
  CertificateSpec spec;
  bool example1_margin = false;
};

struct ConstructConfig {
  double sigma_tilde = 0.0;
  std::optional<double> rho_s;
  double eps_o = 0.0;
  double containment_tolerance = kConstructionSlack;
};

struct SimulateConfig {
  std::size_t horizon = 0;
  std::size_t seeds = 0;
  double sigma = 0.0;
  double rho_a = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  double rho_s = 0.0;
  std::size_t trajectory_csv_limit = 8;
};

struct GainSearchConfig {
  double alpha_max = 0.0;
  double rel_tol = 1e-3;
};

struct Problem {
  /// The config with command-line overrides applied; hashed into the manifest.
  nlohmann::json effective;
  std::string system_name;
  std::optional<ParamSystem> system;
  std::optional<TargetSet> target;
  LyapunovFn lyapunov;
  SamplingPlan plan;
  std::optional<examples::BiasedGradientSystem> biased;

  std::optional<CertificateConfig> certificate;
  std::optional<double> gain;
  std::optional<GainSearchConfig> gain_search;
  std::optional<ConstructConfig> construct;
  std::optional<SimulateConfig> simulate;
  std::filesystem::path out_dir;
};

/// Parses and validates the file at `path`. Throws ConfigError for anything
/// the schema or the cross-field checks reject; CertificationError from
/// built-in fixtures (for example a search direction that violates the
/// pseudogradient inequality) propagates unchanged.
Problem load_problem(const std::filesystem::path& path, const Overrides& overrides);

/// The sampling plan as written to reports (threads omitted: they do not
/// change results).
nlohmann::json plan_json(const SamplingPlan& plan);

}  // namespace spas::cli
