#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tcoupler/config.hpp"
#include "tcoupler/experiments.hpp"
#include "tcoupler/hysteresis.hpp"
#include "tcoupler/io.hpp"
#include "tcoupler/sequences.hpp"

using namespace tcoupler;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;

struct Output {
  CsvTable table;
  json fits = json::object();
  json extra = json::object();  // additional top-level sidecar entries
};

Output from_result(const ExperimentResult& result, double bias) {
  Output out{experiment_table(result), result.fits, json::object()};
  if (std::isfinite(bias)) out.fits["bias_uA"] = bias / kMicro;
  return out;
}

Output coupler_curve(const RunConfig& c) {
  const auto& x = c.coupler_curve;
  CouplingCurveOptions options;
  options.trace_points = x.trace_points;
  options.resolution_floor = x.resolution_floor_MHz * kMega;
  options.timing = c.chevron.timing();
  const auto points = run_coupling_curve(x.bias_uA.values(kMicro), c.device, c.simulation.settings(), options);

  Output out;
  out.table.columns = {"bias_uA", "omega_c_theory_MHz", "omega_c_fitted_MHz"};
  json rows = json::array();
  for (const auto& p : points) {
    out.table.add_row({p.bias / kMicro, p.theory / kMega, p.fitted / kMega});
    rows.push_back({{"bias_uA", p.bias / kMicro},
                    {"omega_c_theory_MHz", p.theory / kMega},
                    {"omega_c_fitted_MHz", p.fitted / kMega},
                    {"sub_period", p.sub_period},
                    {"below_floor", p.below_floor},
                    {"decay_limited", p.decay_limited}});
  }
  out.fits["points"] = rows;
  out.fits["resolution_floor_MHz"] = x.resolution_floor_MHz;
  return out;
}

Output spectroscopy(const RunConfig& c) {
  const auto& x = c.spectroscopy;
  const double bias = x.bias.resolve(c.device);
  SpectroscopyOptions options;
  options.probe_amp = kTwoPi * x.probe_amp_MHz * kMega;
  options.timing.probe_duration = x.probe_duration_ns * kNano;
  options.timing.probe_phase_b = x.probe_phase_b_rad;
  return from_result(run_spectroscopy(bias, x.delta_MHz.values(kMega), x.probe_MHz.values(kMega), c.device,
                                      c.simulation.settings(), options),
                     bias);
}

Output crosstalk(const RunConfig& c) {
  const auto& x = c.crosstalk;
  CrosstalkTiming timing;
  timing.rabi_amp = kTwoPi * x.rabi_MHz * kMega;
  timing.idle_detuning = x.idle_detuning_MHz * kMega;
  return from_result(run_crosstalk_scan(x.bias_uA.values(kMicro), x.t_rabi_ns.values(kNano), c.device,
                                        c.simulation.settings(), timing),
                     std::numeric_limits<double>::quiet_NaN());
}

Output chevron(const RunConfig& c) {
  const auto& x = c.chevron;
  const double bias = x.bias.resolve(c.device);
  return from_result(run_swap_chevron(bias, x.delta_MHz.values(kMega), x.t_swap_ns.values(kNano), c.device,
                                      c.simulation.settings(), x.timing()),
                     bias);
}

Output min_coupling(const RunConfig& c) {
  const auto& x = c.min_coupling;
  std::vector<double> omega;
  for (double v : x.coupling_MHz) omega.push_back(v * kMega);
  MinCouplingOptions options;
  options.shots = x.shots;
  options.threshold = x.f_threshold;
  const auto study =
      run_min_coupling_study(omega, x.t1_ns * kNano, x.t_ns.values(kNano), c.device, c.simulation.settings(), options);
  return from_result(study.traces, std::numeric_limits<double>::quiet_NaN());
}

Output reset_sim(const RunConfig& c) {
  const ResetOutcome outcome = simulate_reset(c.reset.initial(), c.reset.reset(), c.device);
  Output out;
  out.table.columns = {"cycle", "residual_error"};
  out.table.integer_columns = {true, false};
  for (std::size_t k = 0; k < outcome.residual_per_cycle.size(); ++k) {
    out.table.add_row({static_cast<double>(k + 1), outcome.residual_per_cycle[k]});
  }
  json dist = json::object();
  for (const auto& [id, mass] : outcome.final_distribution) dist[std::to_string(id)] = mass;
  out.fits["final_distribution"] = dist;
  out.fits["eliminated"] = outcome.eliminated;
  out.fits["beta"] = beta(c.device);
  out.extra["residual_error"] = outcome.residual_error;
  return out;
}

Output branch_map(const RunConfig& c) {
  Output out;
  out.table.columns = {"bias_uA", "delta_rad", "flux_Phi0", "stable", "branch_id"};
  out.table.integer_columns = {false, false, false, true, true};
  std::map<int, bool> stable_ids;
  for (double bias : c.branch_map.bias_uA.values(kMicro)) {
    for (const BranchPoint& p : enumerate_branches(bias, c.device)) {
      out.table.add_row({bias / kMicro, p.delta, p.flux / kFluxQuantum, p.stable ? 1.0 : 0.0,
                         static_cast<double>(p.branch_id)});
      if (p.stable) stable_ids[p.branch_id] = true;
    }
  }
  json ids = json::array();
  for (const auto& [id, unused] : stable_ids) ids.push_back(id);
  int at_zero = 0;
  for (const BranchPoint& p : enumerate_branches(0.0, c.device)) at_zero += p.stable ? 1 : 0;
  out.fits["beta"] = beta(c.device);
  out.fits["stable_branch_ids"] = ids;
  out.fits["stable_at_zero_bias"] = at_zero;
  return out;
}

Output dump_sequence(const RunConfig& c) {
  const auto& x = c.dump_sequence;
  const double bias = x.bias.resolve(c.device);
  PulseSequence seq;
  if (x.kind == "swap") {
    seq = build_swap_sequence(x.delta_MHz * kMega, bias, x.t_ns * kNano, c.device, c.chevron.timing());
  } else if (x.kind == "spectroscopy") {
    SpectroscopyTiming timing;
    timing.probe_duration = c.spectroscopy.probe_duration_ns * kNano;
    timing.probe_phase_b = c.spectroscopy.probe_phase_b_rad;
    seq = build_spectroscopy_sequence(x.delta_MHz * kMega, x.probe_MHz * kMega,
                                      kTwoPi * c.spectroscopy.probe_amp_MHz * kMega, bias, c.device, timing);
  } else {
    CrosstalkTiming timing;
    timing.rabi_amp = kTwoPi * c.crosstalk.rabi_MHz * kMega;
    timing.idle_detuning = c.crosstalk.idle_detuning_MHz * kMega;
    seq = build_crosstalk_sequence(x.driven == "A" ? Qubit::a : Qubit::b, x.t_ns * kNano, bias, c.device, timing);
  }

  Output out;
  out.table.columns = {"t_ns", "z_a_Hz", "z_b_Hz", "uw_a_rad_per_s", "uw_b_rad_per_s", "coupler_uA",
                       "f_a_GHz", "f_b_GHz"};
  const double step = x.sample_dt_ns * kNano;
  const auto n = static_cast<long long>(std::floor(seq.total_duration / step + 1e-9));
  for (long long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * step;
    out.table.add_row({t / kNano, seq.channel(ChannelId::z_a).value(t), seq.channel(ChannelId::z_b).value(t),
                       seq.channel(ChannelId::uw_a).value(t), seq.channel(ChannelId::uw_b).value(t),
                       seq.channel(ChannelId::coupler).value(t) / kMicro,
                       qubit_frequency(seq, c.device, 0, t) / kGiga, qubit_frequency(seq, c.device, 1, t) / kGiga});
  }
  out.fits["bias_uA"] = bias / kMicro;
  out.extra["sequence"] = to_json(seq);
  return out;
}

const std::map<std::string, std::function<Output(const RunConfig&)>>& commands() {
  static const std::map<std::string, std::function<Output(const RunConfig&)>> table{
      {"coupler-curve", coupler_curve}, {"spectroscopy", spectroscopy}, {"crosstalk", crosstalk},
      {"chevron", chevron},             {"min-coupling", min_coupling}, {"reset-sim", reset_sim},
      {"branch-map", branch_map},       {"dump-sequence", dump_sequence}};
  return table;
}

const std::map<std::string, std::string> kDescriptions{
    {"coupler-curve", "theory vs fitted coupling strength over a bias sweep"},
    {"spectroscopy", "static-coupling spectroscopy map and avoided-crossing fit"},
    {"crosstalk", "measurement crosstalk ratio over coupler bias"},
    {"chevron", "swap chevron over detuning and interaction time"},
    {"min-coupling", "resolvability of weak couplings under T1 and shot noise"},
    {"reset-sim", "branch occupation through repeated coupler reset cycles"},
    {"branch-map", "coupler flux branches and their stability over bias"},
    {"dump-sequence", "sampled control waveforms of one pulse sequence"}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two phase qubits with a current-biased junction coupler: simulation and analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> shots;
  std::optional<double> dt_ns;
  app.add_option("--config", config_path, "JSON config file (defaults used when omitted)");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "seed for shot sampling");
  app.add_option("--shots", shots, "sample N shots per grid point instead of exact probabilities");
  app.add_option("--dt-ns", dt_ns, "integration step in ns");

  for (const auto& [name, unused] : commands()) app.add_subcommand(name, kDescriptions.at(name))->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    RunConfig config = config_path.empty() ? parse_config("") : load_config(config_path);
    if (seed) config.simulation.seed = *seed;
    if (shots) {
      if (*shots < 1) throw ValidationError("--shots", "must be >= 1");
      config.simulation.mode = "shots";
      config.simulation.shots = *shots;
      config.min_coupling.shots = *shots;
    }
    if (dt_ns) {
      if (!(*dt_ns > 0.0) || !std::isfinite(*dt_ns)) throw ValidationError("--dt-ns", "must be strictly positive");
      config.simulation.dt_ns = *dt_ns;
    }
    validate(config);

    const json resolved = to_json(config);
    const std::string hash = sha256_hex(resolved.dump());

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw ValidationError("--out", "cannot create " + out_dir + ": " + ec.message());

    Output out = commands().at(command)(config);

    const std::filesystem::path base = std::filesystem::path(out_dir) / command;
    const std::string csv_name = command + ".csv";
    json sidecar = out.extra;
    sidecar["command"] = command;
    sidecar["config"] = resolved;
    sidecar["config_sha256"] = hash;
    sidecar["seed"] = config.simulation.seed;
    sidecar["fits"] = out.fits;
    sidecar["csv"] = {{"file", csv_name}, {"columns", out.table.columns}, {"rows", out.table.rows.size()}};

    write_file(base.string() + ".csv", to_csv(out.table));
    write_file(base.string() + ".json", canonical_dump(sidecar));
    std::cerr << command << ": wrote " << out.table.rows.size() << " rows to " << base.string() << ".csv\n";
    return kExitOk;
  } catch (const ValidationError& e) {
    std::cerr << "tcoupler: invalid configuration: " << e.what() << "\n";
    return kExitInput;
  } catch (const ParseError& e) {
    std::cerr << "tcoupler: config parse error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "tcoupler: invalid argument: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "tcoupler: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "tcoupler: " << e.what() << "\n";
    return kExitNumerical;
  }
}
