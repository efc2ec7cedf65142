// Copyright 2026 The jacospec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// jacospec command-line front end.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "jacospec/errors.hpp"
#include "jacospec/io.hpp"
#include "jacospec/signal_prop.hpp"
#include "jacospec/spectrum_empirical.hpp"
#include "jacospec/spectrum_theory.hpp"

namespace {

using namespace jacospec;
using io::Json;
using signal_prop::Nonlinearity;
using theory::EnsembleSpec;
using theory::WeightEnsemble;

constexpr int kExitError = 1;
constexpr int kExitConvergence = 2;
constexpr int kExitBranch = 3;
constexpr int kExitExperiment = 4;
constexpr int kExitMismatch = 5;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ExitError {
  int code;
  std::string message;
};

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json optional_number(const std::optional<double>& x) { return x ? number(*x) : Json(nullptr); }

std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

/// Network description shared by the spectrum commands.
struct NetworkFlags {
  std::string ensemble = "gaussian";
  std::string nonlinearity = "linear";
  int depth = 1;
  double sw2 = kNaN;
  double sb2 = 0.0;
  double qstar = kNaN;
  double p = kNaN;

  void add(CLI::App* cmd) {
    cmd->add_option("--ensemble", ensemble, "gaussian or orthogonal")->check(CLI::IsMember({"gaussian", "orthogonal"}));
    cmd->add_option("--nonlinearity", nonlinearity, "linear, relu, hardtanh or tanh")
        ->check(CLI::IsMember({"linear", "relu", "hardtanh", "tanh"}));
    cmd->add_option("--depth", depth, "number of layers")->check(CLI::PositiveNumber);
    cmd->add_option("--sw2", sw2, "weight variance");
    cmd->add_option("--sb2", sb2, "bias variance");
    cmd->add_option("--qstar", qstar, "critical network at this fixed point");
    cmd->add_option("--p", p, "critical hard-tanh network with this linear fraction");
  }

  WeightEnsemble weights() const { return theory::parse_ensemble(ensemble); }
  Nonlinearity nl() const { return Nonlinearity::parse(nonlinearity); }
  bool critical() const { return !std::isnan(qstar) || !std::isnan(p) || std::isnan(sw2); }

  EnsembleSpec spec() const {
    if (!std::isnan(p)) return EnsembleSpec::critical_hardtanh_p(weights(), depth, p);
    if (!std::isnan(qstar)) return EnsembleSpec::critical(weights(), nl(), depth, qstar);
    if (std::isnan(sw2)) return EnsembleSpec::critical(weights(), nl(), depth);
    return EnsembleSpec::from_params(weights(), nl(), depth, {sw2, sb2});
  }

  Json to_json() const {
    Json j;
    j["ensemble"] = ensemble;
    j["nonlinearity"] = nonlinearity;
    j["depth"] = depth;
    j["sw2"] = number(sw2);
    j["sb2"] = sb2;
    j["qstar"] = number(qstar);
    j["p"] = number(p);
    return j;
  }
};

Json summary_json(const theory::SpectrumSummary& s) {
  Json j;
  j["m1"] = number(s.m1);
  j["m2"] = number(s.m2);
  j["variance"] = number(s.variance);
  j["lambda_max"] = number(s.lambda_max);
  j["s_max"] = number(s.s_max);
  j["chi_to_L"] = number(s.chi_to_L);
  return j;
}

Json spec_json(const EnsembleSpec& spec) {
  Json j;
  j["ensemble"] = std::string(theory::to_string(spec.weights));
  j["nonlinearity"] = std::string(spec.nonlinearity.name());
  j["depth"] = spec.depth;
  j["sigma_w_sq"] = spec.sigma_w_sq;
  j["p"] = spec.p;
  j["q_star"] = number(spec.q_star);
  return j;
}

// fixed-point

struct FixedPointFlags {
  std::string nonlinearity = "relu";
  double sw2 = 1.0;
  double sb2 = 0.0;
  double q0 = 1.0;
  double tol = 1e-12;
};

int cmd_fixed_point(const FixedPointFlags& f) {
  signal_prop::FixedPointOptions opt;
  opt.q0 = f.q0;
  opt.tol = f.tol;
  signal_prop::FixedPoint fp;
  try {
    fp = signal_prop::fixed_point(Nonlinearity::parse(f.nonlinearity), {f.sw2, f.sb2}, opt);
  } catch (const ConvergenceError& e) {
    throw ExitError{kExitConvergence, std::string(e.what()) + " (last iterate " + io::format_double(e.last_iterate()) + ")"};
  }
  Json j;
  j["q_star"] = fp.q_star;
  j["chi"] = fp.chi;
  j["p_linear"] = optional_number(fp.p_linear);
  j["iterations"] = fp.iterations;
  j["residual"] = fp.residual;
  j["degenerate"] = fp.degenerate;
  std::cout << io::dump(j);
  return 0;
}

// critical-line

struct CriticalLineFlags {
  std::string nonlinearity = "hardtanh";
  double sw2_min = 1.01;
  double sw2_max = 4.0;
  int steps = 100;
  std::string out;
};

int cmd_critical_line(const CriticalLineFlags& f) {
  const Nonlinearity nl = Nonlinearity::parse(f.nonlinearity);
  std::vector<double> grid(std::size_t(f.steps));
  for (int i = 0; i < f.steps; ++i)
    grid[std::size_t(i)] = f.steps == 1 ? f.sw2_min : f.sw2_min + (f.sw2_max - f.sw2_min) * i / (f.steps - 1);
  std::vector<signal_prop::CriticalPoint> points;
  try {
    points = signal_prop::critical_line(nl, grid);
  } catch (const NoRootError& e) {
    throw ExitError{kExitConvergence, e.what()};
  } catch (const ConvergenceError& e) {
    throw ExitError{kExitConvergence, e.what()};
  }
  if (points.size() == 1 && f.steps != 1)
    std::cerr << f.nonlinearity << ": degenerate critical line, the only critical point is sigma_w^2 = "
              << io::format_double(points.front().sigma_w_sq) << ", sigma_b^2 = 0\n";
  io::CsvWriter csv({"sigma_w_sq", "sigma_b_sq", "q_star", "p_linear"});
  for (const auto& pt : points) {
    csv.cell(pt.sigma_w_sq).cell(pt.sigma_b_sq).cell(pt.q_star).cell(pt.p_linear.value_or(kNaN));
    csv.end_row();
  }
  csv.write(f.out);
  return 0;
}

// theory-spectrum

struct TheoryFlags {
  NetworkFlags net;
  int grid_points = 2000;
  std::string out;
  std::string summary;
};

int cmd_theory_spectrum(const TheoryFlags& f, const io::RunManifest& manifest) {
  const EnsembleSpec spec = f.net.spec();
  free_prob::SpectralDensity rho;
  try {
    rho = theory::theory_density(spec, f.grid_points);
  } catch (const BranchError& e) {
    throw ExitError{kExitBranch, std::string(e.what()) + " at lambda = " + io::format_double(e.lambda())};
  }
  try {
    rho.validate(1e-3);
  } catch (const DomainError& e) {
    throw ExitError{kExitError, std::string("density check failed: ") + e.what()};
  }
  io::CsvWriter csv({"lambda", "rho_lambda", "s", "rho_s"});
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    const double s = std::sqrt(rho.abscissa[i]);
    csv.cell(rho.abscissa[i]).cell(rho.density[i]).cell(s).cell(2.0 * s * rho.density[i]);
    csv.end_row();
  }
  const auto exact = theory::moments_lagrange(spec);
  const auto numeric = free_prob::moments_from_density(rho, 2);
  Json j;
  j["manifest"] = manifest.to_json();
  j["spec"] = spec_json(spec);
  j["m1"] = exact.m1;
  j["m2"] = exact.m2;
  j["variance"] = exact.variance;
  j["lambda_max"] = exact.lambda_max;
  j["s_max"] = exact.s_max;
  j["chi_to_L"] = exact.chi_to_L;
  j["zero_atom"] = rho.zero_atom;
  Json atoms = Json::array();
  for (const auto& a : rho.atoms) atoms.push_back({{"location", a.location}, {"mass", a.mass}});
  j["atoms"] = atoms;
  j["continuous_edge"] = theory::continuous_edge(spec);
  j["numeric"] = {{"m1", numeric[1]},
                  {"m2", numeric[2]},
                  {"variance", numeric[2] - numeric[1] * numeric[1]},
                  {"total_mass", rho.total_mass()}};
  csv.write(f.out);
  io::atomic_write(f.summary.empty() ? sibling(f.out, ".json") : f.summary, io::dump(j));
  return 0;
}

// empirical-spectrum

struct EmpiricalFlags {
  NetworkFlags net;
  int width = 1000;
  int trials = 50;
  std::uint64_t seed = 0;
  double q0 = kNaN;
  int bins = 0;
  std::string out = "empirical";
};

empirical::NetworkConfig network_config(const NetworkFlags& net, int width, double q0) {
  empirical::NetworkConfig c;
  if (net.critical() && net.nl().kind() != signal_prop::NonlinearityKind::tanh) {
    c = empirical::NetworkConfig::critical(net.spec(), width);
    if (!std::isnan(q0)) c.q0 = q0;
    return c;
  }
  if (std::isnan(net.sw2)) throw DomainError("--sw2 is required for tanh networks");
  c.depth = net.depth;
  c.width = width;
  c.sigma_w_sq = net.sw2;
  c.sigma_b_sq = net.sb2;
  c.nonlinearity = net.nl();
  c.ensemble = net.weights();
  c.q0 = q0;
  return c;
}

void write_histogram(io::CsvWriter& csv, const free_prob::SpectralDensity& h) {
  const std::string variable(free_prob::to_string(h.variable));
  const Eigen::Index bins = h.size() - 2;
  if (bins < 1) return;
  const double lo = h.abscissa[0];
  const double hi = h.abscissa[h.size() - 1];
  for (Eigen::Index b = 0; b < bins; ++b) {
    csv.cell(variable).cell(lo + (hi - lo) * double(b) / double(bins));
    csv.cell(b + 1 == bins ? hi : lo + (hi - lo) * double(b + 1) / double(bins)).cell(h.density[b + 1]);
    csv.end_row();
  }
}

int cmd_empirical_spectrum(const EmpiricalFlags& f, const io::RunManifest& manifest) {
  const auto config = network_config(f.net, f.width, f.q0);
  empirical::EmpiricalSpectrum e;
  try {
    e = empirical::run_experiment(config, f.trials, f.seed, f.bins);
  } catch (const ExperimentError& err) {
    throw ExitError{kExitExperiment, err.what()};
  }
  io::CsvWriter values({"singular_value"});
  for (double s : e.singular_values) {
    values.cell(s);
    values.end_row();
  }
  io::CsvWriter hist({"variable", "left", "right", "density"});
  write_histogram(hist, e.histogram);
  write_histogram(hist, e.singular_histogram);

  Json j;
  j["manifest"] = manifest.to_json();
  Json c;
  c["depth"] = config.depth;
  c["width"] = config.width;
  c["sigma_w_sq"] = config.sigma_w_sq;
  c["sigma_b_sq"] = config.sigma_b_sq;
  c["nonlinearity"] = std::string(config.nonlinearity.name());
  c["ensemble"] = std::string(theory::to_string(config.ensemble));
  c["q0"] = config.input_variance();
  j["network"] = c;
  j["trials"] = e.trials;
  j["failed_trials"] = e.failed_trials;
  j["samples"] = e.singular_values.size();
  j["summary"] = summary_json(e.summary);
  j["m1_stderr"] = e.m1_stderr;
  j["normalized_variance"] = e.normalized_variance;
  j["normalized_variance_stderr"] = e.normalized_variance_stderr;
  j["zero_atom"] = e.histogram.zero_atom;
  j["mean_q_per_layer"] = e.mean_q_per_layer;

  values.write(f.out + "_singular_values.csv");
  hist.write(f.out + "_histogram.csv");
  io::atomic_write(f.out + "_summary.json", io::dump(j));
  return 0;
}

// compare

struct CompareFlags {
  std::string theory;
  std::string theory_summary;
  std::string empirical;
  std::string variable = "singular_value";
  std::string out;
};

free_prob::SpectralDensity read_theory(const CompareFlags& f, free_prob::SpectralVariable variable) {
  const auto table = io::read_csv(f.theory);
  const bool eigen = variable == free_prob::SpectralVariable::eigenvalue;
  const auto x = table.numeric_column(eigen ? "lambda" : "s");
  const auto y = table.numeric_column(eigen ? "rho_lambda" : "rho_s");
  free_prob::SpectralDensity rho;
  rho.variable = variable;
  rho.abscissa = Eigen::Map<const Eigen::ArrayXd>(x.data(), Eigen::Index(x.size()));
  rho.density = Eigen::Map<const Eigen::ArrayXd>(y.data(), Eigen::Index(y.size()));
  if (!f.theory_summary.empty()) {
    const Json s = Json::parse(io::read_file(f.theory_summary));
    for (const auto& a : s.at("atoms")) {
      const double loc = a.at("location").get<double>();
      rho.atoms.push_back({eigen ? loc : std::sqrt(loc), a.at("mass").get<double>()});
    }
  }
  rho.zero_atom = std::clamp(1.0 - rho.continuous_mass() - rho.atom_mass(), 0.0, 1.0);
  return rho;
}

int cmd_compare(const CompareFlags& f) {
  const auto variable = f.variable == "eigenvalue" ? free_prob::SpectralVariable::eigenvalue
                                                   : free_prob::SpectralVariable::singular_value;
  const auto table = io::read_csv(f.empirical);
  if (table.header.size() != 1) throw DomainError("empirical csv must have one column");
  const auto sample_variable = table.header[0] == "eigenvalue" ? free_prob::SpectralVariable::eigenvalue
                               : table.header[0] == "singular_value"
                                   ? free_prob::SpectralVariable::singular_value
                                   : throw DomainError("missing column 'singular_value'");
  const auto values = table.numeric_column(table.header[0]);
  Eigen::VectorXd samples = Eigen::Map<const Eigen::VectorXd>(values.data(), Eigen::Index(values.size()));
  std::sort(samples.data(), samples.data() + samples.size());
  const auto rho = read_theory(f, variable);
  empirical::ComparisonReport r;
  try {
    r = empirical::compare(samples, sample_variable, rho);
  } catch (const VariableMismatchError& e) {
    throw ExitError{kExitMismatch, e.what()};
  }
  Json j;
  j["variable"] = std::string(free_prob::to_string(r.variable));
  j["samples"] = samples.size();
  j["ks"] = r.ks;
  j["m1_rel_error"] = number(r.m1_rel_error);
  j["m2_rel_error"] = number(r.m2_rel_error);
  j["edge_rel_error"] = number(r.edge_rel_error);
  j["empirical_edge"] = r.empirical_edge;
  j["theory_edge"] = r.theory_edge;
  if (f.out.empty())
    std::cout << io::dump(j);
  else
    io::atomic_write(f.out, io::dump(j));
  return 0;
}

// sweep

struct SweepFlags {
  std::string quantity = "smax";
  std::string ensemble = "orthogonal";
  std::string nonlinearity = "hardtanh";
  std::vector<int> depths{2, 8, 32, 128};
  std::vector<double> qstars;
  bool p_inverse_depth = false;
  bool empirical = false;
  int width = 1000;
  int trials = 50;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_sweep(const SweepFlags& f) {
  const auto weights = theory::parse_ensemble(f.ensemble);
  const auto nl = Nonlinearity::parse(f.nonlinearity);
  std::vector<EnsembleSpec> specs;
  for (int L : f.depths) {
    if (f.p_inverse_depth) {
      if (L < 2) throw DomainError("--p-inverse-depth needs depths >= 2");
      specs.push_back(EnsembleSpec::critical_hardtanh_p(weights, L, 1.0 - 1.0 / L));
    } else if (f.qstars.empty()) {
      specs.push_back(EnsembleSpec::critical(weights, nl, L));
    } else {
      for (double q : f.qstars) specs.push_back(EnsembleSpec::critical(weights, nl, L, q));
    }
  }
  const bool smax = f.quantity == "smax";
  std::vector<double> theory_values(specs.size());
  if (smax) {
    const auto rows = theory::smax_sweep(specs);
    for (std::size_t i = 0; i < rows.size(); ++i) theory_values[i] = rows[i].s_max;
  } else {
    for (std::size_t i = 0; i < specs.size(); ++i) theory_values[i] = theory::moments_lagrange(specs[i]).variance;
  }
  io::CsvWriter csv({"L", "q_star", "ensemble", "nonlinearity", "value", "source"});
  auto row = [&](const EnsembleSpec& s, double value, std::string_view source) {
    csv.cell(std::int64_t(s.depth)).cell(s.q_star).cell(theory::to_string(s.weights));
    csv.cell(s.nonlinearity.name()).cell(value).cell(source);
    csv.end_row();
  };
  for (std::size_t i = 0; i < specs.size(); ++i) row(specs[i], theory_values[i], "theory");
  if (f.empirical) {
    for (const auto& s : specs) {
      empirical::EmpiricalSpectrum e;
      try {
        e = empirical::run_experiment(empirical::NetworkConfig::critical(s, f.width), f.trials, f.seed);
      } catch (const ExperimentError& err) {
        throw ExitError{kExitExperiment, err.what()};
      }
      row(s, smax ? e.summary.s_max : e.summary.variance, "empirical");
    }
  }
  csv.write(f.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jacobian spectra of deep random networks"};
  app.set_version_flag("--version", io::tool_version());
  app.require_subcommand(1);

  FixedPointFlags fp;
  auto* fp_cmd = app.add_subcommand("fixed-point", "Fixed point q*, chi and p of the variance map");
  fp_cmd->add_option("--nonlinearity", fp.nonlinearity)->required()->check(
      CLI::IsMember({"linear", "relu", "hardtanh", "tanh"}));
  fp_cmd->add_option("--sw2", fp.sw2)->required();
  fp_cmd->add_option("--sb2", fp.sb2)->required();
  fp_cmd->add_option("--q0", fp.q0, "starting variance")->capture_default_str();
  fp_cmd->add_option("--tol", fp.tol)->capture_default_str();

  CriticalLineFlags cl;
  auto* cl_cmd = app.add_subcommand("critical-line", "Critical (sigma_w^2, sigma_b^2) pairs");
  cl_cmd->add_option("--nonlinearity", cl.nonlinearity)->required()->check(
      CLI::IsMember({"linear", "relu", "hardtanh", "tanh"}));
  cl_cmd->add_option("--sw2-min", cl.sw2_min)->capture_default_str();
  cl_cmd->add_option("--sw2-max", cl.sw2_max)->capture_default_str();
  cl_cmd->add_option("--steps", cl.steps)->check(CLI::PositiveNumber)->capture_default_str();
  cl_cmd->add_option("--out", cl.out)->required();

  TheoryFlags th;
  auto* th_cmd = app.add_subcommand("theory-spectrum", "Free-probability spectral density of J J^T");
  th.net.add(th_cmd);
  th_cmd->add_option("--grid-points", th.grid_points)->check(CLI::Range(16, 1000000))->capture_default_str();
  th_cmd->add_option("--out", th.out, "density CSV")->required();
  th_cmd->add_option("--summary", th.summary, "summary JSON, default beside --out");

  EmpiricalFlags em;
  auto* em_cmd = app.add_subcommand("empirical-spectrum", "Monte Carlo Jacobian spectrum");
  em.net.add(em_cmd);
  em_cmd->add_option("--width", em.width)->check(CLI::Range(2, 100000))->capture_default_str();
  em_cmd->add_option("--trials", em.trials)->check(CLI::PositiveNumber)->capture_default_str();
  em_cmd->add_option("--seed", em.seed)->capture_default_str();
  em_cmd->add_option("--q0", em.q0, "input variance, default q*");
  em_cmd->add_option("--bins", em.bins, "histogram bins, 0 for Freedman-Diaconis")->capture_default_str();
  em_cmd->add_option("--out", em.out, "output prefix")->capture_default_str();

  CompareFlags cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "KS distance and moment errors");
  cmp_cmd->add_option("--theory", cmp.theory, "theory-spectrum CSV")->required();
  cmp_cmd->add_option("--theory-summary", cmp.theory_summary, "theory-spectrum JSON with atoms");
  cmp_cmd->add_option("--empirical", cmp.empirical, "pooled sample CSV")->required();
  cmp_cmd->add_option("--variable", cmp.variable)
      ->check(CLI::IsMember({"eigenvalue", "singular_value"}))
      ->capture_default_str();
  cmp_cmd->add_option("--out", cmp.out, "report JSON, default stdout");

  SweepFlags sw;
  auto* sw_cmd = app.add_subcommand("sweep", "s_max or variance over depths and q*");
  sw_cmd->add_option("--quantity", sw.quantity)->check(CLI::IsMember({"smax", "variance"}))->capture_default_str();
  sw_cmd->add_option("--ensemble", sw.ensemble)->check(CLI::IsMember({"gaussian", "orthogonal"}))->capture_default_str();
  sw_cmd->add_option("--nonlinearity", sw.nonlinearity)
      ->check(CLI::IsMember({"linear", "relu", "hardtanh"}))
      ->capture_default_str();
  sw_cmd->add_option("--depths", sw.depths)->delimiter(',');
  sw_cmd->add_option("--qstars", sw.qstars)->delimiter(',');
  sw_cmd->add_flag("--p-inverse-depth", sw.p_inverse_depth, "hard-tanh with p = 1 - 1/L");
  sw_cmd->add_flag("--empirical", sw.empirical, "add Monte Carlo rows");
  sw_cmd->add_option("--width", sw.width)->check(CLI::Range(2, 100000))->capture_default_str();
  sw_cmd->add_option("--trials", sw.trials)->check(CLI::PositiveNumber)->capture_default_str();
  sw_cmd->add_option("--seed", sw.seed)->capture_default_str();
  sw_cmd->add_option("--out", sw.out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fp_cmd) return cmd_fixed_point(fp);
    if (*cl_cmd) return cmd_critical_line(cl);
    if (*th_cmd) {
      Json params = th.net.to_json();
      params["grid_points"] = th.grid_points;
      return cmd_theory_spectrum(th, io::RunManifest::make("theory-spectrum", params));
    }
    if (*em_cmd) {
      Json params = em.net.to_json();
      params["width"] = em.width;
      params["trials"] = em.trials;
      params["q0"] = number(em.q0);
      params["bins"] = em.bins;
      return cmd_empirical_spectrum(em, io::RunManifest::make("empirical-spectrum", params, em.seed));
    }
    if (*cmp_cmd) return cmd_compare(cmp);
    if (*sw_cmd) return cmd_sweep(sw);
  } catch (const ExitError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const UnsupportedError& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
