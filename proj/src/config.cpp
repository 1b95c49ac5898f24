#include "tcoupler/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "tcoupler/constants.hpp"
#include "tcoupler/errors.hpp"

namespace tcoupler {

namespace {

using nlohmann::json;

// SI value expressed in a config unit, trimmed to 15 significant digits so
// defaults print as written (1.58, not 1.5799999999999998).
double in_units(double si, double unit) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", si / unit);
  return std::strtod(buf, nullptr);
}

// Reads one object of the config, remembering which keys were consumed so
// that anything left over can be reported.
class Block {
 public:
  Block(const json* obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (obj_ != nullptr && !obj_->is_object()) throw ValidationError(path_, "expected an object");
  }

  Block child(const std::string& name) {
    known_.insert(name);
    const json* sub = nullptr;
    if (obj_ != nullptr) {
      auto it = obj_->find(name);
      if (it != obj_->end()) sub = &*it;
    }
    return Block(sub, key(name));
  }

  bool has(const std::string& name) const { return obj_ != nullptr && obj_->contains(name); }

  double number(const std::string& name, double fallback) {
    const json* v = find(name);
    if (v == nullptr) return fallback;
    if (!v->is_number()) throw ValidationError(key(name), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ValidationError(key(name), "must be finite");
    return x;
  }

  double positive(const std::string& name, double fallback) {
    const double x = number(name, fallback);
    if (!(x > 0.0)) throw ValidationError(key(name), "must be strictly positive");
    return x;
  }

  std::int64_t integer(const std::string& name, std::int64_t fallback) {
    const json* v = find(name);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer()) throw ValidationError(key(name), "expected an integer");
    return v->get<std::int64_t>();
  }

  bool boolean(const std::string& name, bool fallback) {
    const json* v = find(name);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) throw ValidationError(key(name), "expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& name, const std::string& fallback, std::initializer_list<const char*> allowed) {
    const json* v = find(name);
    if (v == nullptr) return fallback;
    if (!v->is_string()) throw ValidationError(key(name), "expected a string");
    const auto s = v->get<std::string>();
    for (const char* a : allowed) {
      if (s == a) return s;
    }
    throw ValidationError(key(name), "unsupported value \"" + s + "\"");
  }

  template <typename T>
  std::vector<T> list(const std::string& name, const std::vector<T>& fallback) {
    const json* v = find(name);
    if (v == nullptr) return fallback;
    if (!v->is_array()) throw ValidationError(key(name), "expected an array");
    std::vector<T> out;
    for (const auto& e : *v) {
      if (std::is_integral_v<T> ? !e.is_number_integer() : !e.is_number()) {
        throw ValidationError(key(name), "unexpected element type");
      }
      out.push_back(e.get<T>());
    }
    return out;
  }

  GridSpec grid(const std::string& prefix, const GridSpec& fallback, const std::string& unit) {
    GridSpec g;
    g.min = number(prefix + "_min_" + unit, fallback.min);
    g.max = number(prefix + "_max_" + unit, fallback.max);
    const auto n = integer(prefix + "_points", fallback.points);
    if (n < 1 || n > 1000000) throw ValidationError(key(prefix + "_points"), "must lie in [1, 1e6]");
    g.points = static_cast<int>(n);
    if (g.points > 1 && !(g.max > g.min)) throw ValidationError(key(prefix + "_max_" + unit), "must exceed the minimum");
    return g;
  }

  BiasSpec bias(const BiasSpec& fallback) {
    BiasSpec b = fallback;
    if (has("i_cb_uA")) {
      if (has("coupling_MHz")) throw ValidationError(key("i_cb_uA"), "give either i_cb_uA or coupling_MHz");
      b.explicit_bias = true;
      b.i_cb_uA = number("i_cb_uA", 0.0);
    } else {
      known_.insert("i_cb_uA");
      b.explicit_bias = false;
      b.coupling_MHz = number("coupling_MHz", fallback.coupling_MHz);
      if (b.coupling_MHz < 0.0) throw ValidationError(key("coupling_MHz"), "must be >= 0");
    }
    return b;
  }

  void finish() const {
    if (obj_ == nullptr) return;
    for (const auto& [name, value] : obj_->items()) {
      if (!known_.count(name)) throw ValidationError(key(name), "unknown key");
    }
  }

  std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }

 private:
  const json* find(const std::string& name) {
    known_.insert(name);
    if (obj_ == nullptr) return nullptr;
    auto it = obj_->find(name);
    return it == obj_->end() ? nullptr : &*it;
  }

  const json* obj_;
  std::string path_;
  std::set<std::string> known_;
};

void read_device(Block b, DeviceParams& d) {
  d.i_c0 = b.positive("i_c0_uA", in_units(d.i_c0, kMicro)) * kMicro;
  d.m = b.positive("m_pH", in_units(d.m, kPico)) * kPico;
  d.l_m = b.positive("l_m_pH", in_units(d.l_m, kPico)) * kPico;
  d.l_s = b.positive("l_s_pH", in_units(d.l_s, kPico)) * kPico;
  d.l = b.positive("l_pH", in_units(d.l, kPico)) * kPico;
  d.l_z = b.positive("l_z_nH", in_units(d.l_z, kNano)) * kNano;
  d.c = b.positive("c_pF", in_units(d.c, kPico)) * kPico;
  d.f10_a = b.positive("f10a_GHz", in_units(d.f10_a, kGiga)) * kGiga;
  d.f10_b = b.positive("f10b_GHz", in_units(d.f10_b, kGiga)) * kGiga;
  d.t1_a = b.positive("t1a_ns", in_units(d.t1_a, kNano)) * kNano;
  d.t1_b = b.positive("t1b_ns", in_units(d.t1_b, kNano)) * kNano;
  d.n_a = b.number("n_a", d.n_a);
  d.n_b = b.number("n_b", d.n_b);
  if (!(d.n_a >= 2.0)) throw ValidationError(b.key("n_a"), "well depth must be >= 2");
  if (!(d.n_b >= 2.0)) throw ValidationError(b.key("n_b"), "well depth must be >= 2");
  d.omega_c0 = b.positive("omega_c0_GHz", in_units(d.omega_c0, kTwoPi * kGiga)) * kTwoPi * kGiga;
  d.bias_shift_coeff = b.number("bias_shift_coeff_MHz_per_uA", in_units(d.bias_shift_coeff, kMega / kMicro)) * (kMega / kMicro);
  d.l_offset = b.number("l_offset_pH", in_units(d.l_offset, kPico)) * kPico;
  b.finish();
  validate(d);
}

void read_simulation(Block b, SimulationConfig& s) {
  s.dt_ns = b.positive("dt_ns", s.dt_ns);
  s.rwa = b.boolean("rwa", s.rwa);
  s.zz = b.boolean("zz", s.zz);
  s.mode = b.text("mode", s.mode, {"ensemble", "shots"});
  s.shots = b.integer("shots", s.shots);
  if (s.shots < 1) throw ValidationError(b.key("shots"), "must be >= 1");
  const auto seed = b.integer("seed", static_cast<std::int64_t>(s.seed));
  if (seed < 0) throw ValidationError(b.key("seed"), "must be >= 0");
  s.seed = static_cast<std::uint64_t>(seed);
  for (auto [name, field] : {std::pair{"readout_e0_a", &s.readout_e0_a}, std::pair{"readout_e1_a", &s.readout_e1_a},
                             std::pair{"readout_e0_b", &s.readout_e0_b}, std::pair{"readout_e1_b", &s.readout_e1_b}}) {
    *field = b.number(name, *field);
    if (*field < 0.0 || *field > 1.0) throw ValidationError(b.key(name), "must lie in [0, 1]");
  }
  b.finish();
}

void read_reset(Block b, ResetBlock& r, const DeviceParams& d) {
  const double rail = in_units(0.8 * d.i_c0, kMicro);
  r.i_cb_minus_uA = b.number("i_cb_minus_uA", -rail);
  r.i_cb_plus_uA = b.number("i_cb_plus_uA", rail);
  const auto n = b.integer("n_cycles", r.n_cycles);
  if (n < 1 || n > 1000000) throw ValidationError(b.key("n_cycles"), "must lie in [1, 1e6]");
  r.n_cycles = static_cast<int>(n);
  r.q = b.number("q", r.q);
  r.initial_branches = b.list<int>("initial_branches", r.initial_branches);
  if (r.initial_branches.empty()) throw ValidationError(b.key("initial_branches"), "must not be empty");
  b.finish();
  try {
    validate(r.reset());
  } catch (const ValidationError& e) {
    const std::string name = e.key() == "i_cb_minus" ? "i_cb_minus_uA" : e.key();
    throw ValidationError(b.key(name), e.what());
  }
}

void read_experiments(Block b, RunConfig& c) {
  {
    Block e = b.child("coupler_curve");
    auto& x = c.coupler_curve;
    x.bias_uA = e.grid("bias", x.bias_uA, "uA");
    const auto n = e.integer("trace_points", x.trace_points);
    if (n < 16 || n > 100000) throw ValidationError(e.key("trace_points"), "must lie in [16, 1e5]");
    x.trace_points = static_cast<int>(n);
    x.resolution_floor_MHz = e.positive("resolution_floor_MHz", x.resolution_floor_MHz);
    e.finish();
  }
  {
    Block e = b.child("spectroscopy");
    auto& x = c.spectroscopy;
    x.bias = e.bias(x.bias);
    x.delta_MHz = e.grid("delta", x.delta_MHz, "MHz");
    x.probe_MHz = e.grid("probe", x.probe_MHz, "MHz");
    x.probe_amp_MHz = e.positive("probe_amp_MHz", x.probe_amp_MHz);
    x.probe_duration_ns = e.positive("probe_duration_ns", x.probe_duration_ns);
    x.probe_phase_b_rad = e.number("probe_phase_b_rad", x.probe_phase_b_rad);
    e.finish();
  }
  {
    Block e = b.child("crosstalk");
    auto& x = c.crosstalk;
    x.bias_uA = e.grid("bias", x.bias_uA, "uA");
    x.t_rabi_ns = e.grid("t_rabi", x.t_rabi_ns, "ns");
    if (x.t_rabi_ns.min < 0.0) throw ValidationError(e.key("t_rabi_min_ns"), "must be >= 0");
    x.rabi_MHz = e.positive("rabi_MHz", x.rabi_MHz);
    x.idle_detuning_MHz = e.positive("idle_detuning_MHz", x.idle_detuning_MHz);
    e.finish();
  }
  {
    Block e = b.child("chevron");
    auto& x = c.chevron;
    x.bias = e.bias(x.bias);
    x.delta_MHz = e.grid("delta", x.delta_MHz, "MHz");
    x.t_swap_ns = e.grid("t_swap", x.t_swap_ns, "ns");
    if (x.t_swap_ns.min < 0.0) throw ValidationError(e.key("t_swap_min_ns"), "must be >= 0");
    x.pi_duration_ns = e.positive("pi_duration_ns", x.pi_duration_ns);
    x.rise_fall_ns = e.number("rise_fall_ns", x.rise_fall_ns);
    if (x.rise_fall_ns < 0.0) throw ValidationError(e.key("rise_fall_ns"), "must be >= 0");
    x.settle_ns = e.number("settle_ns", x.settle_ns);
    if (x.settle_ns < 0.0) throw ValidationError(e.key("settle_ns"), "must be >= 0");
    x.idle_detuning_MHz = e.positive("idle_detuning_MHz", x.idle_detuning_MHz);
    e.finish();
  }
  {
    Block e = b.child("min_coupling");
    auto& x = c.min_coupling;
    x.coupling_MHz = e.list<double>("coupling_MHz", x.coupling_MHz);
    if (x.coupling_MHz.empty()) throw ValidationError(e.key("coupling_MHz"), "must not be empty");
    for (double v : x.coupling_MHz) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(e.key("coupling_MHz"), "entries must be >= 0");
    }
    x.t1_ns = e.positive("t1_ns", x.t1_ns);
    x.t_ns = e.grid("t", x.t_ns, "ns");
    if (x.t_ns.points < 8) throw ValidationError(e.key("t_points"), "must be >= 8");
    if (x.t_ns.min < 0.0) throw ValidationError(e.key("t_min_ns"), "must be >= 0");
    x.shots = e.integer("shots", x.shots);
    if (x.shots < 1) throw ValidationError(e.key("shots"), "must be >= 1");
    x.f_threshold = e.positive("f_threshold", x.f_threshold);
    e.finish();
  }
  {
    Block e = b.child("branch_map");
    const double w = in_units(0.6 * c.device.i_c0, kMicro);
    c.branch_map.bias_uA = e.grid("bias", GridSpec{-w, w, 121}, "uA");
    e.finish();
  }
  {
    Block e = b.child("dump_sequence");
    auto& x = c.dump_sequence;
    x.kind = e.text("kind", x.kind, {"swap", "spectroscopy", "crosstalk"});
    x.bias = e.bias(x.bias);
    x.delta_MHz = e.number("delta_MHz", x.delta_MHz);
    x.t_ns = e.number("t_ns", x.t_ns);
    if (x.t_ns < 0.0) throw ValidationError(e.key("t_ns"), "must be >= 0");
    x.probe_MHz = e.number("probe_MHz", x.probe_MHz);
    x.driven = e.text("driven", x.driven, {"A", "B"});
    x.sample_dt_ns = e.positive("sample_dt_ns", x.sample_dt_ns);
    e.finish();
  }
  b.finish();
}

// 1-based line and column of a byte offset.
std::pair<std::size_t, std::size_t> locate(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

json grid_json(const GridSpec& g, const std::string& prefix, const std::string& unit) {
  return {{prefix + "_min_" + unit, g.min}, {prefix + "_max_" + unit, g.max}, {prefix + "_points", g.points}};
}

void merge(json& into, const json& from) {
  for (const auto& [k, v] : from.items()) into[k] = v;
}

json bias_json(const BiasSpec& b) {
  if (b.explicit_bias) return {{"i_cb_uA", b.i_cb_uA}};
  return {{"coupling_MHz", b.coupling_MHz}};
}

}  // namespace

std::vector<double> GridSpec::values(double unit) const {
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    const double v = points == 1 ? min : min + (max - min) * k / (points - 1);
    out[static_cast<std::size_t>(k)] = v * unit;
  }
  return out;
}

double BiasSpec::resolve(const DeviceParams& params) const {
  if (explicit_bias) return i_cb_uA * kMicro;
  return bias_for_target(params, coupling_MHz * kMega);
}

SimSettings SimulationConfig::settings() const {
  SimSettings s;
  s.dt = dt_ns * kNano;
  s.dynamics.rwa = rwa;
  s.dynamics.include_zz = zz;
  s.measurement = MeasurementModel::independent(readout_e0_a, readout_e1_a, readout_e0_b, readout_e1_b);
  if (mode == "shots") s.shots = shots;
  s.seed = seed;
  return s;
}

ResetConfig ResetBlock::reset() const {
  return ResetConfig{i_cb_minus_uA * kMicro, i_cb_plus_uA * kMicro, n_cycles, q};
}

BranchDistribution ResetBlock::initial() const {
  BranchDistribution d;
  for (int id : initial_branches) d[id] += 1.0 / static_cast<double>(initial_branches.size());
  return d;
}

SwapTiming ChevronBlock::timing() const {
  SwapTiming t;
  t.pi_duration = pi_duration_ns * kNano;
  t.rise_fall = rise_fall_ns * kNano;
  t.settle = settle_ns * kNano;
  t.idle_detuning = idle_detuning_MHz * kMega;
  return t;
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  json root = json::object();
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      const auto [line, column] = locate(text, e.byte == 0 ? 0 : e.byte - 1);
      throw ParseError(line, column, e.what());
    }
  }
  Block top(&root, "");
  read_device(top.child("device"), c.device);
  read_simulation(top.child("simulation"), c.simulation);
  read_reset(top.child("reset"), c.reset, c.device);
  read_experiments(top.child("experiments"), c);
  top.finish();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("config", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const RunConfig& c) {
  validate(c.device);
  if (!(c.simulation.dt_ns > 0.0)) throw ValidationError("simulation.dt_ns", "must be strictly positive");
  if (c.simulation.shots < 1) throw ValidationError("simulation.shots", "must be >= 1");
  validate(c.reset.reset());
}

nlohmann::json to_json(const RunConfig& c) {
  const auto& d = c.device;
  json device = {
      {"i_c0_uA", in_units(d.i_c0, kMicro)},
      {"m_pH", in_units(d.m, kPico)},
      {"l_m_pH", in_units(d.l_m, kPico)},
      {"l_s_pH", in_units(d.l_s, kPico)},
      {"l_pH", in_units(d.l, kPico)},
      {"l_z_nH", in_units(d.l_z, kNano)},
      {"c_pF", in_units(d.c, kPico)},
      {"f10a_GHz", in_units(d.f10_a, kGiga)},
      {"f10b_GHz", in_units(d.f10_b, kGiga)},
      {"t1a_ns", in_units(d.t1_a, kNano)},
      {"t1b_ns", in_units(d.t1_b, kNano)},
      {"n_a", d.n_a},
      {"n_b", d.n_b},
      {"omega_c0_GHz", in_units(d.omega_c0, kTwoPi * kGiga)},
      {"bias_shift_coeff_MHz_per_uA", in_units(d.bias_shift_coeff, kMega / kMicro)},
      {"l_offset_pH", in_units(d.l_offset, kPico)},
  };
  const auto& s = c.simulation;
  json simulation = {{"dt_ns", s.dt_ns},
                     {"rwa", s.rwa},
                     {"zz", s.zz},
                     {"mode", s.mode},
                     {"shots", s.shots},
                     {"seed", s.seed},
                     {"readout_e0_a", s.readout_e0_a},
                     {"readout_e1_a", s.readout_e1_a},
                     {"readout_e0_b", s.readout_e0_b},
                     {"readout_e1_b", s.readout_e1_b}};
  json reset = {{"i_cb_minus_uA", c.reset.i_cb_minus_uA},
                {"i_cb_plus_uA", c.reset.i_cb_plus_uA},
                {"n_cycles", c.reset.n_cycles},
                {"q", c.reset.q},
                {"initial_branches", c.reset.initial_branches}};

  json curve = grid_json(c.coupler_curve.bias_uA, "bias", "uA");
  curve["trace_points"] = c.coupler_curve.trace_points;
  curve["resolution_floor_MHz"] = c.coupler_curve.resolution_floor_MHz;

  json spectro = bias_json(c.spectroscopy.bias);
  merge(spectro, grid_json(c.spectroscopy.delta_MHz, "delta", "MHz"));
  merge(spectro, grid_json(c.spectroscopy.probe_MHz, "probe", "MHz"));
  spectro["probe_amp_MHz"] = c.spectroscopy.probe_amp_MHz;
  spectro["probe_duration_ns"] = c.spectroscopy.probe_duration_ns;
  spectro["probe_phase_b_rad"] = c.spectroscopy.probe_phase_b_rad;

  json cross = grid_json(c.crosstalk.bias_uA, "bias", "uA");
  merge(cross, grid_json(c.crosstalk.t_rabi_ns, "t_rabi", "ns"));
  cross["rabi_MHz"] = c.crosstalk.rabi_MHz;
  cross["idle_detuning_MHz"] = c.crosstalk.idle_detuning_MHz;

  json chev = bias_json(c.chevron.bias);
  merge(chev, grid_json(c.chevron.delta_MHz, "delta", "MHz"));
  merge(chev, grid_json(c.chevron.t_swap_ns, "t_swap", "ns"));
  chev["pi_duration_ns"] = c.chevron.pi_duration_ns;
  chev["rise_fall_ns"] = c.chevron.rise_fall_ns;
  chev["settle_ns"] = c.chevron.settle_ns;
  chev["idle_detuning_MHz"] = c.chevron.idle_detuning_MHz;

  json minc = grid_json(c.min_coupling.t_ns, "t", "ns");
  minc["coupling_MHz"] = c.min_coupling.coupling_MHz;
  minc["t1_ns"] = c.min_coupling.t1_ns;
  minc["shots"] = c.min_coupling.shots;
  minc["f_threshold"] = c.min_coupling.f_threshold;

  json dump = bias_json(c.dump_sequence.bias);
  merge(dump, {{"kind", c.dump_sequence.kind},
               {"delta_MHz", c.dump_sequence.delta_MHz},
               {"t_ns", c.dump_sequence.t_ns},
               {"probe_MHz", c.dump_sequence.probe_MHz},
               {"driven", c.dump_sequence.driven},
               {"sample_dt_ns", c.dump_sequence.sample_dt_ns}});

  return {{"device", device},
          {"simulation", simulation},
          {"reset", reset},
          {"experiments",
           {{"coupler_curve", curve},
            {"spectroscopy", spectro},
            {"crosstalk", cross},
            {"chevron", chev},
            {"min_coupling", minc},
            {"branch_map", grid_json(c.branch_map.bias_uA, "bias", "uA")},
            {"dump_sequence", dump}}}};
}

}  // namespace tcoupler
