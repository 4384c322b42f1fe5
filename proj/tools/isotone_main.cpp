// Command-line front end: fit datasets from CSV, run seeded Monte Carlo
// experiments from flat config files, and emit JSON reports or plot-ready
// CSV curve bundles.
//
// Exit codes: 0 success, 2 input error (flags, config, CSV), 3 numerical
// failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "isotone/isotone.hpp"
#include "run_config.hpp"

namespace {

using isotone_cli::input_error;
using isotone_cli::KvConfig;
using json = nlohmann::ordered_json;

struct CommonFlags {
  std::string input;
  std::string output;
  std::string config;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<double> tol;
  std::optional<int> max_cycles;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool with_input) {
  if (with_input) {
    cmd->add_option("--input", flags.input, "Input CSV path")->required();
  }
  cmd->add_option("--output", flags.output, "Output path (default: stdout)");
  cmd->add_option("--config", flags.config, "Flat key = value config file");
  cmd->add_option("--seed", flags.seed, "Master seed (overrides config)");
  cmd->add_option("--reps", flags.reps, "Replications (overrides config)");
  cmd->add_option("--tol", flags.tol, "Backfit stopping tolerance");
  cmd->add_option("--max-cycles", flags.max_cycles, "Backfit cycle cap");
  cmd->add_option("--format", flags.format, "Output format (json or csv)");
}

void write_output(const std::string& path, const std::string& payload) {
  if (path.empty()) {
    std::cout << payload;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot open output file: " + path);
  out << payload;
  if (!out) throw std::runtime_error("failed writing output file: " + path);
}

KvConfig load_config(const CommonFlags& flags) {
  if (flags.config.empty()) return KvConfig{};
  return KvConfig::load(flags.config);
}

void check_format(const CommonFlags& flags, const std::string& natural) {
  if (!flags.format.empty() && flags.format != natural) {
    throw input_error("command emits " + natural + "; --format " +
                      flags.format + " is not supported");
  }
}

isotone::FitConfig fit_config_from(const KvConfig& cfg,
                                   const CommonFlags& flags) {
  isotone::FitConfig fc;
  fc.tol = flags.tol ? *flags.tol : cfg.get_double("tol", 0.0);
  fc.max_cycles = flags.max_cycles
                      ? *flags.max_cycles
                      : static_cast<int>(cfg.get_int("max_cycles", 500));
  if (fc.max_cycles < 1) throw input_error("max_cycles must be >= 1");
  return fc;
}

isotone::SimConfig sim_config_from(const KvConfig& cfg,
                                   const CommonFlags& flags) {
  isotone::SimConfig sim;
  sim.n = static_cast<int>(cfg.get_int("n", sim.n));
  sim.rho = cfg.get_double("rho", sim.rho);
  sim.noise_sd = cfg.get_double("noise_sd", sim.noise_sd);
  sim.m1 = isotone::ComponentFn::from_name(cfg.get_string("m1", "cubic"));
  sim.m2 = isotone::ComponentFn::from_name(cfg.get_string("m2", "half_sine"));
  sim.reps = flags.reps ? *flags.reps
                        : static_cast<int>(cfg.get_int("reps", sim.reps));
  sim.master_seed =
      flags.seed ? *flags.seed : cfg.get_u64("master_seed", sim.master_seed);
  sim.stream = cfg.get_u64("stream", sim.stream);
  sim.trunc_lo = cfg.get_double("trunc_lo", sim.trunc_lo);
  sim.trunc_hi = cfg.get_double("trunc_hi", sim.trunc_hi);
  sim.ise_grid.lo = cfg.get_double("grid_lo", sim.ise_grid.lo);
  sim.ise_grid.hi = cfg.get_double("grid_hi", sim.ise_grid.hi);
  sim.ise_grid.points =
      static_cast<int>(cfg.get_int("grid_points", sim.ise_grid.points));
  sim.ise_measure =
      isotone::ise_measure_from_name(cfg.get_string("ise_measure", "empirical"));
  sim.n_components =
      static_cast<int>(cfg.get_int("n_components", sim.n_components));
  sim.fit = fit_config_from(cfg, flags);
  return sim;
}

json sim_config_json(const isotone::SimConfig& sim) {
  json j;
  j["n"] = sim.n;
  j["rho"] = sim.rho;
  j["noise_sd"] = sim.noise_sd;
  j["m1"] = sim.m1.name();
  j["m2"] = sim.m2.name();
  j["reps"] = sim.reps;
  j["master_seed"] = sim.master_seed;
  j["stream"] = sim.stream;
  j["trunc_lo"] = sim.trunc_lo;
  j["trunc_hi"] = sim.trunc_hi;
  j["grid_lo"] = sim.ise_grid.lo;
  j["grid_hi"] = sim.ise_grid.hi;
  j["grid_points"] = sim.ise_grid.points;
  j["ise_measure"] =
      sim.ise_measure == isotone::IseMeasure::empirical ? "empirical" : "grid";
  j["n_components"] = sim.n_components;
  j["tol"] = sim.fit.tol;
  j["max_cycles"] = sim.fit.max_cycles;
  return j;
}

json component_mise_json(const isotone::ComponentMise& m) {
  json j;
  j["mise_backfit"] = m.mise_backfit;
  j["mise_oracle"] = m.mise_oracle;
  j["ratio"] = m.ratio;
  j["se_backfit"] = m.se_backfit;
  j["se_oracle"] = m.se_oracle;
  j["se_ratio"] = m.se_ratio;
  return j;
}

int cmd_fit(const CommonFlags& flags) {
  check_format(flags, "json");
  const KvConfig cfg = load_config(flags);
  cfg.require_known_keys({"tol", "max_cycles"});
  const isotone::FitConfig fc = fit_config_from(cfg, flags);

  isotone::CsvTable table;
  try {
    table = isotone::read_numeric_csv_file(flags.input);
  } catch (const isotone::CsvError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw input_error(e.what());
  }
  if (table.header.size() < 2) {
    throw input_error("need a response column plus at least one covariate");
  }
  const std::size_t n = table.rows.size();
  const std::size_t d = table.header.size() - 1;
  std::vector<double> y(n);
  std::vector<std::vector<double>> x(d, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = table.rows[i][0];
    for (std::size_t j = 0; j < d; ++j) x[j][i] = table.rows[i][j + 1];
  }
  isotone::Dataset ds;
  try {
    ds = isotone::build_dataset(std::move(y), std::move(x));
  } catch (const std::invalid_argument& e) {
    throw input_error(e.what());
  }
  const isotone::AdditiveFit fit = isotone::backfit(ds, fc);

  json out;
  out["n"] = n;
  out["d"] = d;
  out["c_hat"] = fit.c_hat;
  out["components"] = json::array();
  for (std::size_t j = 0; j < fit.components.size(); ++j) {
    json comp;
    comp["name"] = table.header[j + 1];
    comp["knots"] = fit.components[j].knots;
    comp["levels"] = fit.components[j].levels;
    comp["block_weights"] = fit.components[j].block_weights;
    out["components"].push_back(comp);
  }
  out["n_cycles"] = fit.n_cycles;
  out["converged"] = fit.converged;
  out["final_objective"] = fit.final_objective;
  out["last_sum_change"] = fit.last_sum_change;
  out["monotone_decrease_violations"] = fit.monotone_decrease_violations;
  write_output(flags.output, out.dump(2) + "\n");
  return 0;
}

int cmd_simulate(const CommonFlags& flags) {
  check_format(flags, "json");
  const KvConfig cfg = load_config(flags);
  cfg.require_known_keys({"n", "rho", "noise_sd", "m1", "m2", "reps",
                          "master_seed", "stream", "trunc_lo", "trunc_hi",
                          "grid_lo", "grid_hi", "grid_points", "ise_measure",
                          "n_components", "tol", "max_cycles"});
  isotone::SimConfig sim;
  try {
    sim = sim_config_from(cfg, flags);
  } catch (const std::invalid_argument& e) {
    throw input_error(e.what());
  }
  const isotone::MiseReport report = isotone::mise_experiment(sim);
  if (report.reps_completed == 0) {
    throw std::runtime_error("every replication failed; nothing to report");
  }
  json out;
  out["config"] = sim_config_json(report.config);
  out["m1"] = component_mise_json(report.m1);
  if (sim.n_components == 2) out["m2"] = component_mise_json(report.m2);
  out["reps_completed"] = report.reps_completed;
  out["failures"] = report.failures;
  write_output(flags.output, out.dump(2) + "\n");
  return 0;
}

int cmd_reproduce_table(const CommonFlags& flags) {
  check_format(flags, "csv");
  const KvConfig cfg = load_config(flags);
  cfg.require_known_keys({"table", "reps", "master_seed", "tol", "max_cycles"});
  isotone::TablePreset preset;
  try {
    preset = isotone::table_preset_from_name(cfg.get_string("table", "table1"));
  } catch (const std::invalid_argument& e) {
    throw input_error(e.what());
  }
  const int reps =
      flags.reps ? *flags.reps : static_cast<int>(cfg.get_int("reps", 1000));
  const std::uint64_t seed =
      flags.seed ? *flags.seed : cfg.get_u64("master_seed", 1);
  const isotone::FitConfig fc = fit_config_from(cfg, flags);

  const std::vector<isotone::TableRow> rows =
      isotone::reproduce_table(preset, reps, seed, fc);

  std::string payload =
      "n,rho,m1_backfit,m1_oracle,m1_ratio,m2_backfit,m2_oracle,m2_ratio,"
      "m1_backfit_se,m1_oracle_se,m1_ratio_se,"
      "m2_backfit_se,m2_oracle_se,m2_ratio_se\n";
  char shortbuf[32];
  for (const auto& row : rows) {
    auto [p, ec] = std::to_chars(shortbuf, shortbuf + sizeof(shortbuf), row.rho);
    payload += std::to_string(row.n);
    payload += ',';
    payload.append(shortbuf, p);
    for (double v :
         {row.m1.mise_backfit, row.m1.mise_oracle, row.m1.ratio,
          row.m2.mise_backfit, row.m2.mise_oracle, row.m2.ratio,
          row.m1.se_backfit, row.m1.se_oracle, row.m1.se_ratio,
          row.m2.se_backfit, row.m2.se_oracle, row.m2.se_ratio}) {
      payload += ',';
      payload += isotone::format_double(v);
    }
    payload += '\n';
  }
  write_output(flags.output, payload);
  return 0;
}

int cmd_oracle_check(const CommonFlags& flags) {
  check_format(flags, "json");
  const KvConfig cfg = load_config(flags);
  cfg.require_known_keys({"ns", "rho", "reps", "master_seed", "stream",
                          "noise_sd", "m1", "m2", "trunc_lo", "trunc_hi",
                          "n_components", "tol", "max_cycles"});
  std::vector<int> ns;
  for (long long v : cfg.get_int_list("ns")) ns.push_back(static_cast<int>(v));
  if (ns.empty()) throw input_error("config key 'ns' is required");
  isotone::SimConfig base;
  try {
    base = sim_config_from(cfg, flags);
  } catch (const std::invalid_argument& e) {
    throw input_error(e.what());
  }
  const std::vector<isotone::OraclePropertyStat> stats =
      isotone::oracle_property_experiment(ns, base);

  json out;
  out["rho"] = base.rho;
  out["reps"] = base.reps;
  out["master_seed"] = base.master_seed;
  out["per_n"] = json::array();
  for (const auto& st : stats) {
    json j;
    j["n"] = st.n;
    j["reps"] = st.reps;
    j["median_sup"] = st.median_sup;
    j["normalized_ratio"] = st.normalized_ratio;
    out["per_n"].push_back(j);
  }
  if (stats.size() >= 2) {
    bool decreasing = true;
    for (std::size_t i = 1; i < stats.size(); ++i) {
      if (!(stats[i].normalized_ratio < stats[i - 1].normalized_ratio)) {
        decreasing = false;
      }
    }
    out["trend_decreasing"] = decreasing;
  } else {
    out["trend_decreasing"] = nullptr;
  }
  write_output(flags.output, out.dump(2) + "\n");
  return 0;
}

int cmd_quantile_curves(const CommonFlags& flags) {
  check_format(flags, "csv");
  const KvConfig cfg = load_config(flags);
  cfg.require_known_keys({"n", "rho", "noise_sd", "m1", "m2", "reps",
                          "master_seed", "stream", "trunc_lo", "trunc_hi",
                          "grid_lo", "grid_hi", "grid_points", "quantiles",
                          "tol", "max_cycles"});
  std::vector<double> quantiles = cfg.get_double_list("quantiles");
  if (quantiles.empty()) quantiles = {0.25, 0.5, 0.75};
  isotone::SimConfig sim;
  try {
    sim = sim_config_from(cfg, flags);
  } catch (const std::invalid_argument& e) {
    throw input_error(e.what());
  }
  const isotone::QuantileCurves curves = isotone::quantile_curves(sim, quantiles);

  std::string payload = "x,value,series,quantile\n";
  char shortbuf[32];
  const auto short_num = [&](double v) {
    auto [p, ec] = std::to_chars(shortbuf, shortbuf + sizeof(shortbuf), v);
    return std::string(shortbuf, p);
  };
  for (const auto& entry : curves.entries) {
    const std::string q = short_num(entry.quantile);
    for (std::size_t i = 0; i < curves.grid.size(); ++i) {
      const std::string x = isotone::format_double(curves.grid[i]);
      payload += x + "," + isotone::format_double(entry.truth[i]) + ",true," + q + "\n";
      payload += x + "," + isotone::format_double(entry.backfit[i]) + ",backfit," + q + "\n";
      payload += x + "," + isotone::format_double(entry.oracle[i]) + ",oracle," + q + "\n";
    }
  }
  write_output(flags.output, payload);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Additive isotone regression: fitting and Monte Carlo harness"};
  app.require_subcommand(1);

  CommonFlags fit_flags, sim_flags, table_flags, oracle_flags, quant_flags;
  CLI::App* fit = app.add_subcommand("fit", "Fit an additive isotone model to a CSV dataset");
  add_common_flags(fit, fit_flags, true);
  CLI::App* sim = app.add_subcommand("simulate", "Run one backfitting-vs-oracle MISE experiment");
  add_common_flags(sim, sim_flags, false);
  CLI::App* table = app.add_subcommand("reproduce-table", "Run a full benchmark table preset");
  add_common_flags(table, table_flags, false);
  CLI::App* oracle = app.add_subcommand("oracle-check", "Sup-difference scaling across sample sizes");
  add_common_flags(oracle, oracle_flags, false);
  CLI::App* quant = app.add_subcommand("quantile-curves", "Emit quantile-ranked curve bundles");
  add_common_flags(quant, quant_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_flags);
    if (sim->parsed()) return cmd_simulate(sim_flags);
    if (table->parsed()) return cmd_reproduce_table(table_flags);
    if (oracle->parsed()) return cmd_oracle_check(oracle_flags);
    if (quant->parsed()) return cmd_quantile_curves(quant_flags);
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const isotone::CsvError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
