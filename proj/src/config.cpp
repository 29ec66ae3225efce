#include "librotor/config.hpp"

#include <set>

#include "librotor/error.hpp"
#include "librotor/units.hpp"

namespace librotor {

namespace {

using io::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InputError(path + ": " + what);
}

// Typed access to one JSON object with a field path for messages; finish()
// rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "must be an object");
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    if (!has(key)) fail(at(key), "required");
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    if (!has(key)) {
      if (!def) fail(at(key), "required");
      return *def;
    }
    const json& v = j_.at(key);
    if (!v.is_number()) fail(at(key), "must be a number");
    return v.get<double>();
  }

  std::uint64_t count(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) fail(at(key), "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool flag(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(at(key), "must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> def = std::nullopt) {
    if (!has(key)) {
      if (!def) fail(at(key), "required");
      return *def;
    }
    const json& v = j_.at(key);
    if (!v.is_string()) fail(at(key), "must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    std::vector<double> out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_array()) fail(at(key), "must be an array of numbers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(at(key) + "[" + std::to_string(i) + "]", "must be a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::complex<double> field(const std::string& key) {
    const json& v = raw(key);
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
      return {v[0].get<double>(), v[1].get<double>()};
    fail(at(key), "must be a number or [re, im]");
  }

  template <typename F>
  auto parsed(const std::string& key, const std::string& def, F&& convert) {
    const std::string value = text(key, def);
    try {
      return convert(value);
    } catch (const InputError& e) {
      fail(at(key), e.what());
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) fail(at(key), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string_view to_string(TemperatureConvention c) {
  return c == TemperatureConvention::bose ? "bose" : "equipartition";
}

TemperatureConvention temperature_from_string(const std::string& s) {
  if (s == "bose") return TemperatureConvention::bose;
  if (s == "equipartition") return TemperatureConvention::equipartition;
  throw InputError("unknown temperature convention '" + s + "' (expected bose|equipartition)");
}

std::string_view to_string(GridSpec::Kind k) {
  switch (k) {
    case GridSpec::Kind::uniform: return "uniform";
    case GridSpec::Kind::sidebands: return "sidebands";
    case GridSpec::Kind::default_span: break;
  }
  return "default";
}

GridSpec::Kind grid_kind_from_string(const std::string& s) {
  if (s == "default") return GridSpec::Kind::default_span;
  if (s == "uniform") return GridSpec::Kind::uniform;
  if (s == "sidebands") return GridSpec::Kind::sidebands;
  throw InputError("unknown grid kind '" + s + "' (expected default|uniform|sidebands)");
}

json complex_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

// Runs a check that throws InputError and prefixes the field path.
template <typename F>
void check(const std::string& path, F&& f) {
  try {
    f();
  } catch (const InputError& e) {
    fail(path, e.what());
  }
}

}  // namespace

OpticalSetup make_optics(const RunConfig& config) {
  const OpticsConfig& o = config.optics;
  OpticalSetup s;
  s.e_tw0 = o.e_tw0;
  s.e_cav0 = o.e_cav0;
  s.kappa = hz_to_rad(o.kappa_hz);
  s.detuning = hz_to_rad(o.detuning_hz);
  s.wavelength = o.wavelength;
  s.pol_angle_phi = o.pol_angle_phi;
  s.n_cav = o.n_cav;
  s.finesse = o.finesse;
  s.fsr_hz = o.fsr_hz;
  s.waist_x = o.waist_x;
  s.waist_y = o.waist_y;
  s.waist_cav = o.waist_cav;
  return s;
}

NoiseProfile make_noise(const RunConfig& config) {
  const NoiseConfig& n = config.noise;
  NoiseProfile p;
  p.shot_level = n.shot_level;
  p.dark_level = n.dark_level;
  p.phase_noise_base = n.phase_noise_base;
  for (const NotchConfig& c : n.notches)
    p.notches.push_back({hz_to_rad(c.center_hz), c.depth_db, hz_to_rad(c.width_hz)});
  p.cavity_noise_width = hz_to_rad(n.cavity_noise_width_hz);
  p.cavity_noise_scale = n.cavity_noise_scale;
  p.seed = config.synthesis.seed;
  return p;
}

DetectorResponse make_response(const RunConfig& config) {
  DetectorResponse r;
  for (double f : config.response.freq_hz) r.freq_grid.push_back(hz_to_rad(f));
  r.gain = config.response.gain;
  return r;
}

void validate(const RunConfig& config) {
  check("config.rotor", [&] { validate(config.rotor); });
  const OpticsConfig& o = config.optics;
  if (!(o.kappa_hz > 0.0)) fail("config.optics.kappa_hz", "must be > 0");
  if (!std::isfinite(o.detuning_hz)) fail("config.optics.detuning_hz", "must be finite");
  check("config.optics", [&] { validate(make_optics(config)); });
  if (config.modes.empty()) fail("config.modes", "at least one mode is required");
  for (std::size_t i = 0; i < config.modes.size(); ++i) {
    const ModeConfig& m = config.modes[i];
    const std::string path = "config.modes[" + std::to_string(i) + "]";
    if (!(m.gamma_thermal >= 0.0)) fail(path + ".gamma_thermal", "must be >= 0");
    if (!(m.gamma_recoil >= 0.0)) fail(path + ".gamma_recoil", "must be >= 0");
    if (!(m.gamma_intrinsic_hz >= 0.0)) fail(path + ".gamma_intrinsic_hz", "must be >= 0");
    if (!(m.area_scale_c > 0.0)) fail(path + ".area_scale_c", "must be > 0");
    for (std::size_t k = 0; k < i; ++k)
      if (config.modes[k].label == m.label) fail(path + ".label", "duplicate mode");
  }
  check("config.noise", [&] { validate(make_noise(config)); });
  if (!config.response.freq_hz.empty() || !config.response.gain.empty())
    check("config.response", [&] { validate(make_response(config)); });
  const SynthesisConfig& s = config.synthesis;
  if (s.averages < 1) fail("config.synthesis.averages", "must be >= 1");
  if (s.calibration_averages < 1) fail("config.synthesis.calibration_averages", "must be >= 1");
  if (!(s.het_freq_hz > 0.0)) fail("config.synthesis.het_freq_hz", "must be > 0");
  for (std::size_t i = 0; i < s.detunings_hz.size(); ++i)
    if (!std::isfinite(s.detunings_hz[i]))
      fail("config.synthesis.detunings_hz[" + std::to_string(i) + "]", "must be finite");
  const GridSpec& g = s.grid;
  if (g.kind == GridSpec::Kind::uniform && !(g.hi_hz > g.lo_hz && g.bins >= 16))
    fail("config.synthesis.grid", "uniform grid needs hi_hz > lo_hz and bins >= 16");
  if (g.kind == GridSpec::Kind::sidebands && !(g.half_width_hz > 0.0 && g.bin_hz > 0.0))
    fail("config.synthesis.grid", "sideband grid needs half_width_hz > 0 and bin_hz > 0");
  const AnalysisConfig& a = config.analysis;
  if (a.c && !(*a.c > 0.0)) fail("config.analysis.c", "must be > 0");
  if (!(a.c_err >= 0.0)) fail("config.analysis.c_err", "must be >= 0");
  if (!(a.search_half_width_hz > 0.0)) fail("config.analysis.search_half_width_hz", "must be > 0");
  if (!(a.window_fwhm > 0.0)) fail("config.analysis.window_fwhm", "must be > 0");
  if (!(a.max_window_half_width_hz >= 0.0)) fail("config.analysis.max_window_half_width_hz", "must be >= 0");
  if (!(a.outliers.sigma > 0.0)) fail("config.analysis.outlier_sigma", "must be > 0");
  if (a.outliers.max_rounds < 0) fail("config.analysis.outlier_rounds", "must be >= 0");
  if (a.calibration.median_bins < 1) fail("config.analysis.calibration_median_bins", "must be >= 1");
  if (a.calibration.mean_bins < 0) fail("config.analysis.calibration_mean_bins", "must be >= 0");
  if (!(a.calibration.max_invalid_fraction >= 0.0 && a.calibration.max_invalid_fraction < 1.0))
    fail("config.analysis.calibration_max_invalid_fraction", "must lie in [0, 1)");
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "config");

  Section rotor(root.raw("rotor"), "config.rotor");
  c.rotor.inertia_a = rotor.number("inertia_a");
  c.rotor.inertia_b = rotor.number("inertia_b");
  c.rotor.inertia_c = rotor.number("inertia_c");
  c.rotor.chi_a = rotor.number("chi_a");
  c.rotor.chi_b = rotor.number("chi_b");
  c.rotor.chi_c = rotor.number("chi_c");
  c.rotor.volume = rotor.number("volume");
  c.rotor.gamma_euler_branch =
      rotor.parsed("gamma_euler_branch", "gamma_half_pi", [](const std::string& s) { return euler_branch_from_string(s); });
  rotor.finish();

  Section optics(root.raw("optics"), "config.optics");
  OpticsConfig& o = c.optics;
  o.e_tw0 = optics.field("e_tw0");
  o.e_cav0 = optics.field("e_cav0");
  o.kappa_hz = optics.number("kappa_hz");
  o.detuning_hz = optics.number("detuning_hz");
  o.wavelength = optics.number("wavelength", 1550e-9);
  o.pol_angle_phi = optics.number("pol_angle_phi", 0.0);
  o.n_cav = optics.number("n_cav", 0.0);
  o.finesse = optics.number("finesse", 0.0);
  o.fsr_hz = optics.number("fsr_hz", 0.0);
  o.waist_x = optics.number("waist_x", 0.0);
  o.waist_y = optics.number("waist_y", 0.0);
  o.waist_cav = optics.number("waist_cav", 0.0);
  optics.finish();

  const json& modes = root.raw("modes");
  if (!modes.is_array()) fail("config.modes", "must be an array");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    Section m(modes[i], "config.modes[" + std::to_string(i) + "]");
    ModeConfig mc;
    mc.label = m.parsed("label", "", [](const std::string& s) { return mode_label_from_string(s); });
    mc.gamma_thermal = m.number("gamma_thermal", 0.0);
    mc.gamma_recoil = m.number("gamma_recoil", 0.0);
    mc.gamma_intrinsic_hz = m.number("gamma_intrinsic_hz", 0.0);
    mc.area_scale_c = m.number("area_scale_c", 1.0);
    mc.channel = m.parsed("channel", std::string(to_string(cavity_channel_for(mc.label))),
                          [](const std::string& s) { return channel_from_string(s); });
    m.finish();
    c.modes.push_back(mc);
  }

  if (root.has("noise")) {
    Section n(j.at("noise"), "config.noise");
    c.noise.shot_level = n.number("shot_level", 1.0);
    c.noise.dark_level = n.number("dark_level", 0.0);
    c.noise.phase_noise_base = n.number("phase_noise_base", 1e-9);
    if (n.has("notches")) {
      const json& list = j.at("noise").at("notches");
      if (!list.is_array()) fail("config.noise.notches", "must be an array");
      for (std::size_t i = 0; i < list.size(); ++i) {
        Section ns(list[i], "config.noise.notches[" + std::to_string(i) + "]");
        NotchConfig nc;
        nc.center_hz = ns.number("center_hz");
        nc.depth_db = ns.number("depth_db");
        nc.width_hz = ns.number("width_hz");
        ns.finish();
        c.noise.notches.push_back(nc);
      }
    }
    c.noise.cavity_noise_width_hz = n.number("cavity_noise_width_hz", 0.0);
    c.noise.cavity_noise_scale = n.number("cavity_noise_scale", 0.0);
    n.finish();
  }

  if (root.has("response")) {
    Section r(j.at("response"), "config.response");
    c.response.freq_hz = r.numbers("freq_hz");
    c.response.gain = r.numbers("gain");
    r.finish();
  }

  if (root.has("synthesis")) {
    Section s(j.at("synthesis"), "config.synthesis");
    SynthesisConfig& sc = c.synthesis;
    sc.detunings_hz = s.numbers("detunings_hz");
    if (s.has("grid")) {
      Section g(j.at("synthesis").at("grid"), "config.synthesis.grid");
      sc.grid.kind = g.parsed("kind", "default", [](const std::string& v) { return grid_kind_from_string(v); });
      sc.grid.lo_hz = g.number("lo_hz", 0.0);
      sc.grid.hi_hz = g.number("hi_hz", 0.0);
      sc.grid.bins = g.count("bins", 2048);
      sc.grid.half_width_hz = g.number("half_width_hz", 0.0);
      sc.grid.bin_hz = g.number("bin_hz", 0.0);
      g.finish();
    }
    sc.averages = s.count("averages", 100);
    sc.calibration_averages = s.count("calibration_averages", 10000);
    sc.seed = s.count("seed", 0);
    sc.orientation = s.parsed("sideband_orientation", "lo_blue",
                              [](const std::string& v) { return orientation_from_string(v); });
    sc.het_freq_hz = s.number("het_freq_hz", 4.99814e6);
    s.finish();
  }

  if (root.has("analysis")) {
    Section a(j.at("analysis"), "config.analysis");
    AnalysisConfig& ac = c.analysis;
    ac.method = a.parsed("method", "ratio", [](const std::string& v) { return occupation_method_from_string(v); });
    if (a.has("c")) ac.c = a.number("c");
    ac.c_err = a.number("c_err", 0.0);
    ac.search_half_width_hz = a.number("search_half_width_hz", 30e3);
    ac.window_fwhm = a.number("window_fwhm", 10.0);
    ac.max_window_half_width_hz = a.number("max_window_half_width_hz", 0.0);
    ac.outliers.enabled = a.flag("outlier_rejection", true);
    ac.outliers.sigma = a.number("outlier_sigma", 5.0);
    ac.outliers.max_rounds = static_cast<int>(a.count("outlier_rounds", 2));
    ac.calibration.median_bins = static_cast<int>(a.count("calibration_median_bins", 5));
    ac.calibration.mean_bins = static_cast<int>(a.count("calibration_mean_bins", 65));
    ac.calibration.max_invalid_fraction = a.number("calibration_max_invalid_fraction", 0.2);
    ac.temperature = a.parsed("temperature", "bose", [](const std::string& v) { return temperature_from_string(v); });
    a.finish();
  }
  root.finish();
  validate(c);
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["rotor"] = {{"inertia_a", c.rotor.inertia_a},
                {"inertia_b", c.rotor.inertia_b},
                {"inertia_c", c.rotor.inertia_c},
                {"chi_a", c.rotor.chi_a},
                {"chi_b", c.rotor.chi_b},
                {"chi_c", c.rotor.chi_c},
                {"volume", c.rotor.volume},
                {"gamma_euler_branch", std::string(to_string(c.rotor.gamma_euler_branch))}};
  const OpticsConfig& o = c.optics;
  j["optics"] = {{"e_tw0", complex_json(o.e_tw0)},
                 {"e_cav0", complex_json(o.e_cav0)},
                 {"kappa_hz", o.kappa_hz},
                 {"detuning_hz", o.detuning_hz},
                 {"wavelength", o.wavelength},
                 {"pol_angle_phi", o.pol_angle_phi},
                 {"n_cav", o.n_cav},
                 {"finesse", o.finesse},
                 {"fsr_hz", o.fsr_hz},
                 {"waist_x", o.waist_x},
                 {"waist_y", o.waist_y},
                 {"waist_cav", o.waist_cav}};
  json modes = json::array();
  for (const ModeConfig& m : c.modes)
    modes.push_back({{"label", std::string(to_string(m.label))},
                     {"gamma_thermal", m.gamma_thermal},
                     {"gamma_recoil", m.gamma_recoil},
                     {"gamma_intrinsic_hz", m.gamma_intrinsic_hz},
                     {"area_scale_c", m.area_scale_c},
                     {"channel", std::string(to_string(m.channel))}});
  j["modes"] = modes;
  json notches = json::array();
  for (const NotchConfig& n : c.noise.notches)
    notches.push_back({{"center_hz", n.center_hz}, {"depth_db", n.depth_db}, {"width_hz", n.width_hz}});
  j["noise"] = {{"shot_level", c.noise.shot_level},
                {"dark_level", c.noise.dark_level},
                {"phase_noise_base", c.noise.phase_noise_base},
                {"notches", notches},
                {"cavity_noise_width_hz", c.noise.cavity_noise_width_hz},
                {"cavity_noise_scale", c.noise.cavity_noise_scale}};
  if (!c.response.freq_hz.empty()) j["response"] = {{"freq_hz", c.response.freq_hz}, {"gain", c.response.gain}};
  const SynthesisConfig& s = c.synthesis;
  j["synthesis"] = {{"detunings_hz", s.detunings_hz},
                    {"grid",
                     {{"kind", std::string(to_string(s.grid.kind))},
                      {"lo_hz", s.grid.lo_hz},
                      {"hi_hz", s.grid.hi_hz},
                      {"bins", static_cast<std::uint64_t>(s.grid.bins)},
                      {"half_width_hz", s.grid.half_width_hz},
                      {"bin_hz", s.grid.bin_hz}}},
                    {"averages", s.averages},
                    {"calibration_averages", s.calibration_averages},
                    {"seed", s.seed},
                    {"sideband_orientation", std::string(to_string(s.orientation))},
                    {"het_freq_hz", s.het_freq_hz}};
  const AnalysisConfig& a = c.analysis;
  j["analysis"] = {{"method", std::string(to_string(a.method))},
                   {"c_err", a.c_err},
                   {"search_half_width_hz", a.search_half_width_hz},
                   {"window_fwhm", a.window_fwhm},
                   {"max_window_half_width_hz", a.max_window_half_width_hz},
                   {"outlier_rejection", a.outliers.enabled},
                   {"outlier_sigma", a.outliers.sigma},
                   {"outlier_rounds", static_cast<std::uint64_t>(a.outliers.max_rounds)},
                   {"calibration_median_bins", static_cast<std::uint64_t>(a.calibration.median_bins)},
                   {"calibration_mean_bins", static_cast<std::uint64_t>(a.calibration.mean_bins)},
                   {"calibration_max_invalid_fraction", a.calibration.max_invalid_fraction},
                   {"temperature", std::string(to_string(a.temperature))}};
  if (a.c) j["analysis"]["c"] = *a.c;
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::vector<double> scan_detunings_hz(const RunConfig& config) {
  if (!config.synthesis.detunings_hz.empty()) return config.synthesis.detunings_hz;
  return {config.optics.detuning_hz};
}

ScanConfig make_scan_config(const RunConfig& config) {
  ScanConfig s;
  s.optics = make_optics(config);
  s.noise = make_noise(config);
  s.response = make_response(config);
  s.grid = config.synthesis.grid;
  s.averages = config.synthesis.averages;
  s.seed = config.synthesis.seed;
  s.het_freq_hz = config.synthesis.het_freq_hz;
  s.orientation = config.synthesis.orientation;
  for (const ModeConfig& m : config.modes) {
    ScanMode sm;
    try {
      sm.mode = make_mode(m.label, config.rotor, s.optics, m.gamma_thermal, m.gamma_recoil,
                          hz_to_rad(m.gamma_intrinsic_hz));
    } catch (const PhysicsError& e) {
      throw InputError(std::string("config.modes: ") + e.what());
    }
    sm.area_scale_c = m.area_scale_c;
    sm.channel = m.channel;
    s.modes.push_back(sm);
  }
  return s;
}

ScanAnalysisOptions make_analysis_options(const RunConfig& config) {
  const AnalysisConfig& a = config.analysis;
  ScanAnalysisOptions o;
  o.response = make_response(config);
  o.extract.method = a.method;
  if (a.c) o.extract.c_override = CFactor{*a.c, a.c_err};
  o.extract.search_half_width_hz = a.search_half_width_hz;
  o.extract.window_fwhm = a.window_fwhm;
  o.extract.max_window_half_width_hz = a.max_window_half_width_hz;
  o.outliers = a.outliers;
  for (const ModeConfig& m : config.modes) o.gamma_recoil[m.label] = m.gamma_recoil;
  o.branch = config.rotor.gamma_euler_branch;
  o.convention = a.temperature;
  return o;
}

RunConfig run_config_from_scenario(const Scenario& scenario) {
  RunConfig c;
  c.rotor = scenario.rotor;
  const OpticalSetup& o = scenario.optics;
  c.optics.e_tw0 = o.e_tw0;
  c.optics.e_cav0 = o.e_cav0;
  c.optics.kappa_hz = rad_to_hz(o.kappa);
  c.optics.detuning_hz = scenario.reference_detuning_hz;
  c.optics.wavelength = o.wavelength;
  c.optics.pol_angle_phi = o.pol_angle_phi;
  c.optics.n_cav = o.n_cav;
  c.optics.finesse = o.finesse;
  c.optics.fsr_hz = o.fsr_hz;
  c.optics.waist_x = o.waist_x;
  c.optics.waist_y = o.waist_y;
  c.optics.waist_cav = o.waist_cav;
  const ScanConfig& s = scenario.scan;
  for (const ScanMode& m : s.modes)
    c.modes.push_back({m.mode.label, m.mode.gamma_thermal, m.mode.gamma_recoil,
                       rad_to_hz(m.mode.gamma_intrinsic), m.area_scale_c, m.channel});
  c.noise.shot_level = s.noise.shot_level;
  c.noise.dark_level = s.noise.dark_level;
  c.noise.phase_noise_base = s.noise.phase_noise_base;
  for (const Notch& n : s.noise.notches)
    c.noise.notches.push_back({rad_to_hz(n.center), n.depth_db, rad_to_hz(n.width)});
  c.noise.cavity_noise_width_hz = rad_to_hz(s.noise.cavity_noise_width);
  c.noise.cavity_noise_scale = s.noise.cavity_noise_scale;
  for (double w : s.response.freq_grid) c.response.freq_hz.push_back(rad_to_hz(w));
  c.response.gain = s.response.gain;
  c.synthesis.detunings_hz = scenario.detunings_hz;
  c.synthesis.grid = s.grid;
  c.synthesis.averages = s.averages;
  c.synthesis.seed = s.seed;
  c.synthesis.orientation = s.orientation;
  c.synthesis.het_freq_hz = s.het_freq_hz;
  validate(c);
  return c;
}

}  // namespace librotor
