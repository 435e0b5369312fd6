// Command-line front end: simulate tracks, fit them, run studies, and compare
// BBIS against the exact oracle densities.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bbis/bbis.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

class UsageError : public bbis::Error {
 public:
  using bbis::Error::Error;
};

// "quadratic" or "quadratic:cx,cy" for the squared-distance covariate;
// anything else is a raster file path.
bbis::CovariateField parse_field_spec(const std::string& spec) {
  if (spec.rfind("quadratic", 0) == 0) {
    bbis::Point2 c{};
    const auto colon = spec.find(':');
    if (colon != std::string::npos) {
      const std::string rest = spec.substr(colon + 1);
      const auto comma = rest.find(',');
      if (comma == std::string::npos) throw UsageError("quadratic field spec needs 'cx,cy'");
      try {
        c.x = std::stod(rest.substr(0, comma));
        c.y = std::stod(rest.substr(comma + 1));
      } catch (const std::exception&) {
        throw UsageError("bad quadratic center '" + rest + "'");
      }
    }
    return bbis::quadratic_distance_field(c);
  }
  return bbis::load_raster(spec);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw bbis::Error("cannot open " + path + " for writing");
  return os;
}

int cmd_simulate(const std::string& config_path, const std::string& out,
                 const std::string& fields_dir) {
  const auto kv = bbis::KeyValueConfig::load(config_path);
  bbis::StudyConfig c = bbis::StudyConfig::from_config(kv);
  const std::uint64_t seed = kv.get_uint("seed", c.base_seed);
  kv.reject_unknown();
  c.study_kind = bbis::StudyKind::Custom;
  c.base_seed = seed;
  c.N_values.clear();
  c.M_values.clear();
  if (c.dt_values.empty()) c.dt_values = {c.dt};
  if (c.dt_values.size() != 1) throw bbis::ConfigError("simulate takes a single dt");
  if (!c.n_obs && !c.t_max) c.n_obs = 1000;
  c.validate();

  const bbis::FieldList fields = bbis::build_fields(c);
  const bbis::RSFModel truth(fields, c.true_beta, c.true_gamma_sq);
  const bbis::Track track = bbis::simulate_observations(c, truth, 0, 0);
  auto os = open_out(out);
  bbis::write_track_csv(os, track);

  if (!fields_dir.empty()) {
    std::filesystem::create_directories(fields_dir);
    for (std::size_t m = 0; m + 1 < fields.size(); ++m)
      bbis::save_raster((std::filesystem::path(fields_dir) /
                         ("field" + std::to_string(m + 1) + ".txt")).string(),
                        *fields[m]);
  }
  return 0;
}

int cmd_fit(const std::string& track_path, const std::vector<std::string>& field_specs,
            const std::string& method_name, std::optional<double> h_target,
            std::optional<std::size_t> nodes, std::size_t bridges, std::uint64_t seed,
            const std::string& out, bool timing) {
  const bbis::Method method = bbis::parse_method(method_name);
  if (method == bbis::Method::BBIS && h_target.has_value() == nodes.has_value())
    throw UsageError("bbis fit needs exactly one of --dt-target-h and -N");
  std::vector<bbis::CovariateField> fields;
  for (const auto& s : field_specs) fields.push_back(parse_field_spec(s));
  const bbis::Track track = bbis::load_track_csv(track_path);

  bbis::LikelihoodConfig lc;
  lc.M = bridges;
  lc.seed = seed;
  lc.h_target = h_target;
  lc.N = nodes.value_or(0);
  const bbis::FitResult r =
      bbis::fit(track, bbis::make_field_list(std::move(fields)), lc, method);
  const double dt = track.times[1] - track.times[0];
  const std::size_t n = method == bbis::Method::EM ? 0 : lc.nodes_for(dt);
  const std::size_t m = method == bbis::Method::EM ? 0 : lc.M;
  bbis::FitResult row = r;
  if (!timing) row.wall_time = 0.0;
  auto os = open_out(out);
  os << bbis::results_header(field_specs.size()) << '\n'
     << bbis::format_row(0, method, dt, n, m, row, field_specs.size()) << '\n';
  return 0;
}

int cmd_study(const std::string& config_path, const std::string& out_dir) {
  const auto kv = bbis::KeyValueConfig::load(config_path);
  const bbis::StudyConfig c = bbis::StudyConfig::from_config(kv);
  kv.reject_unknown();
  c.validate();
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  std::size_t done = 0;
  const std::size_t total = c.sweep_size() * c.replicates;
  const auto result = bbis::run_study(c, dir / "results.csv", [&](const bbis::StudyRow& row) {
    ++done;
    std::cerr << "[" << done << "/" << total << "] " << c.sweep_name() << "="
              << bbis::format_number(row.sweep_value) << " replicate " << row.replicate
              << (row.fit.converged ? "" : " (not converged)")
              << (row.error.empty() ? "" : ": " + row.error) << '\n';
  });
  const auto summary = bbis::summarize(result);
  {
    auto os = open_out((dir / "summary.csv").string());
    bbis::write_summary_csv(os, summary);
  }
  const auto names = bbis::parameter_names(c.covariate_count());
  for (std::size_t p = 0; p < names.size(); ++p) {
    bool any = false;
    for (std::size_t s = 0; s < c.sweep_size(); ++s)
      any = any || !bbis::parameter_values(result, s, p).empty();
    if (any) bbis::emit_boxplot(result, p, (dir / (names[p] + ".svg")).string());
  }
  return 0;
}

int cmd_oracle(const bbis::OracleCheckConfig& c, const std::string& out) {
  const auto rows = bbis::oracle_check(c);
  auto os = open_out(out);
  bbis::write_oracle_csv(os, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Langevin habitat-selection simulation and Brownian-bridge likelihood fitting"};
  app.require_subcommand(1);

  std::string config_path, out, fields_dir, track_path, method = "bbis", out_dir;
  std::vector<std::string> field_specs;
  std::optional<double> h_target;
  std::optional<std::size_t> nodes;
  std::size_t bridges = 50;
  std::uint64_t seed = 1;
  bool timing = false;
  bbis::OracleCheckConfig oc;

  auto* sim = app.add_subcommand("simulate", "Simulate one observed track");
  sim->add_option("--config", config_path, "Model/simulation config file")->required();
  sim->add_option("--out", out, "Output track CSV")->required();
  sim->add_option("--fields-dir", fields_dir, "Also write the Perlin rasters here");

  auto* fit = app.add_subcommand("fit", "Fit (beta, gamma^2) to a track");
  fit->add_option("--track", track_path, "Track CSV (t,x,y)")->required();
  fit->add_option("--fields", field_specs,
                  "Covariates in order: raster files or quadratic[:cx,cy]")
      ->required();
  fit->add_option("--method", method, "bbis or em")->check(CLI::IsMember({"bbis", "em"}));
  fit->add_option("--dt-target-h", h_target, "Target bridge sub-step");
  fit->add_option("-N", nodes, "Fixed interior nodes per interval");
  fit->add_option("-M", bridges, "Number of bridges")->check(CLI::PositiveNumber);
  fit->add_option("--seed", seed, "Bridge ensemble seed");
  fit->add_option("--out", out, "Output CSV")->required();
  fit->add_flag("--timing", timing, "Record wall time (otherwise written as 0)");

  auto* study = app.add_subcommand("study", "Run a simulation study");
  study->add_option("--config", config_path, "Study config file")->required();
  study->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* oracle = app.add_subcommand("oracle-check", "BBIS vs exact BM/OU densities");
  oracle->add_option("-M", oc.M, "Number of bridges")->check(CLI::PositiveNumber);
  oracle->add_option("-N", oc.N, "Interior nodes")->check(CLI::PositiveNumber);
  oracle->add_option("--dt", oc.dt, "Interval length")->check(CLI::PositiveNumber);
  oracle->add_option("--intervals", oc.intervals, "Number of random intervals");
  oracle->add_option("--seed", oc.seed, "Seed for intervals and bridges");
  oracle->add_option("--out", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (*sim) return cmd_simulate(config_path, out, fields_dir);
    if (*fit)
      return cmd_fit(track_path, field_specs, method, h_target, nodes, bridges, seed, out, timing);
    if (*study) return cmd_study(config_path, out_dir);
    if (*oracle) return cmd_oracle(oc, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const bbis::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}
