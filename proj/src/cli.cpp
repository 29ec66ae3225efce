#include "librotor/cli.hpp"

#include <glob.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "librotor/config.hpp"
#include "librotor/error.hpp"
#include "librotor/geometry.hpp"
#include "librotor/scenarios.hpp"
#include "librotor/thermometry.hpp"
#include "librotor/units.hpp"

namespace librotor {

namespace fs = std::filesystem;
using io::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string version_line() { return "librotor " + std::string(kToolVersion); }

// Digest entry with a path relative to `base` when possible.
json file_entry(const fs::path& path, const fs::path& base) {
  std::string shown = path.lexically_normal().string();
  if (!base.empty()) {
    const fs::path rel = path.lexically_normal().lexically_relative(base.lexically_normal());
    if (!rel.empty() && rel.native()[0] != '.') shown = rel.string();
  }
  return {{"path", shown}, {"sha256", io::sha256_file(path)}};
}

std::vector<fs::path> expand_patterns(const std::vector<std::string>& patterns) {
  std::vector<fs::path> out;
  for (const std::string& p : patterns) {
    glob_t g{};
    const int rc = ::glob(p.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc == GLOB_NOMATCH) throw InputError(p + ": no matching trace files");
    if (rc != 0) throw InputError(p + ": cannot expand pattern");
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

json occupation_json(const OccupationResult& r) {
  return {{"label", std::string(to_string(r.label))},
          {"method", std::string(to_string(r.method))},
          {"n", r.n},
          {"n_err", r.n_err},
          {"n_raw", r.n_raw},
          {"clamped", r.clamped},
          {"n_err_from_c", r.n_err_from_c},
          {"c", r.c_factor},
          {"c_err", r.c_factor_err},
          {"stokes_area", r.stokes_area},
          {"stokes_area_err", r.stokes_area_err},
          {"anti_stokes_area", r.anti_stokes_area},
          {"anti_stokes_area_err", r.anti_stokes_area_err},
          {"area_covariance", r.area_covariance},
          {"ground_state_prob", r.ground_state_prob},
          {"ground_state_prob_err", r.ground_state_prob_err}};
}

json pair_fit_json(const SidebandPairFit& f) {
  return {{"mode_freq_hz", f.mode_freq_hz},
          {"mode_freq_err_hz", f.mode_freq_err()},
          {"linewidth_fwhm_hz", f.linewidth_fwhm},
          {"linewidth_fwhm_err_hz", f.linewidth_err()},
          {"stokes_center_hz", f.stokes_center_hz()},
          {"anti_stokes_center_hz", f.anti_stokes_center_hz()},
          {"stokes_offset", f.stokes_offset},
          {"anti_stokes_offset", f.anti_stokes_offset},
          {"converged", f.converged},
          {"iterations", f.iterations},
          {"reduced_chi2", f.reduced_chi2},
          {"residual_rms", f.residual_rms},
          {"stokes_window_hz", {f.stokes_window.lo_hz, f.stokes_window.hi_hz}},
          {"anti_stokes_window_hz", {f.anti_stokes_window.lo_hz, f.anti_stokes_window.hi_hz}}};
}

json scan_fit_json(const ScanFitResult& r) {
  json j = {{"g_abs_hz", rad_to_hz(r.g_abs)},
            {"g_abs_err_hz", rad_to_hz(r.g_abs_err)},
            {"omega_bare_hz", rad_to_hz(r.omega_bare)},
            {"omega_bare_err_hz", rad_to_hz(r.omega_bare_err)},
            {"gamma_intrinsic_hz", rad_to_hz(r.gamma_intrinsic)},
            {"gamma_intrinsic_err_hz", rad_to_hz(r.gamma_intrinsic_err)},
            {"gamma_total_heating", r.gamma_total_heating},
            {"gamma_total_heating_err", r.gamma_total_heating_err},
            {"n_phase", r.n_phase},
            {"n_phase_err", r.n_phase_err},
            {"parameters", r.parameter_names},
            {"chi2", r.chi2},
            {"dof", r.dof},
            {"converged", r.converged},
            {"residuals", r.residuals}};
  j["gamma_thermal"] = r.gamma_thermal ? json(*r.gamma_thermal) : json(nullptr);
  json excluded = json::array();
  for (std::size_t i = 0; i < r.inlier.size(); ++i)
    if (!r.inlier[i]) excluded.push_back(i);
  j["excluded_points"] = excluded;
  return j;
}

std::string_view axis_name(InertiaAxis axis) { return axis == InertiaAxis::a ? "a" : "b"; }

json mode_report_json(const ModeScanReport& m) {
  json channels = json::array();
  for (Channel c : m.channels) channels.push_back(std::string(to_string(c)));
  json j = {{"label", std::string(to_string(m.label))},
            {"channels", channels},
            {"used_traces", m.used_traces},
            {"c",
             {{"value", m.c.c},
              {"err", m.c.c_err},
              {"chi2", m.c.chi2},
              {"dof", m.c.dof},
              {"p_value", m.c.p_value},
              {"inconsistent", m.c.inconsistent}}},
            {"frequency_fit", scan_fit_json(m.frequency)},
            {"linewidth_fit", scan_fit_json(m.linewidth)},
            {"occupation_fit", scan_fit_json(m.occupation)},
            {"model_min_detuning_hz", m.model_min_detuning_hz},
            {"model_min_n", m.model_min_n},
            {"best_n", m.best_n},
            {"best_n_err", m.best_n_err},
            {"best_detuning_hz", m.best_detuning_hz},
            {"inertia_axis", std::string(axis_name(m.axis))}};
  j["inertia"] = m.inertia ? json(*m.inertia) : json(nullptr);
  if (m.derived) {
    j["derived"] = {{"sigma_rad", m.derived->sigma},
                    {"temperature_k", m.derived->temperature},
                    {"revival_time_s", m.derived->t_rev},
                    {"mean_angular_momentum", m.derived->j_mean}};
  } else {
    j["derived"] = nullptr;
  }
  return j;
}

std::optional<DetectorResponse> load_calibration(const std::string& shot, const std::string& dark,
                                                 const CalibrationOptions& options, std::ostream& err) {
  if (shot.empty() && dark.empty()) {
    err << "warning: no shot/dark calibration given; assuming a flat detector response\n";
    return std::nullopt;
  }
  if (shot.empty() || dark.empty()) throw InputError("--shot and --dark must be given together");
  return calibrate_response(io::read_trace(shot), io::read_trace(dark), options);
}

void write_record(const fs::path& path, const std::string& command, json inputs, json outputs,
                  const std::string& started, json summary) {
  json record = {{"schema", "librotor-record/1"},
                 {"tool_version", std::string(kToolVersion)},
                 {"command", command},
                 {"inputs", std::move(inputs)},
                 {"outputs", std::move(outputs)},
                 {"summary", std::move(summary)},
                 {"timestamps", {{"started", started}, {"finished", utc_now()}}}};
  io::write_file_atomic(path, io::dump_json(record));
}

fs::path record_path_for(const fs::path& out) { return fs::path(out.string() + ".record.json"); }

// simulate

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<unsigned long long> seed;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const std::string started = utc_now();
  RunConfig config = load_config(a.config);
  if (a.seed) config.synthesis.seed = *a.seed;
  const ScanConfig scan = make_scan_config(config);
  const std::vector<double> detunings = scan_detunings_hz(config);
  const std::vector<ScanTrace> traces = scan_series(scan, detunings);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  json outputs = json::array();
  json truth = json::array();
  int invalid = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "trace_%03zu.csv", i);
    const fs::path csv = dir / name;
    io::write_trace(csv, traces[i].trace);
    outputs.push_back(file_entry(csv, dir));
    outputs.push_back(file_entry(io::meta_path_for(csv), dir));
    const TraceMeta& meta = traces[i].trace.meta;
    if (!meta.valid) {
      ++invalid;
      err << "warning: " << name << " (detuning " << io::format_double(meta.detuning_hz)
          << " Hz) marked invalid: " << meta.note << "\n";
    }
    json modes = json::array();
    for (const SidebandTruth& t : traces[i].truth)
      modes.push_back({{"label", std::string(to_string(t.label))},
                       {"n", t.n},
                       {"n_phase", t.n_phase},
                       {"linewidth_fwhm_hz", rad_to_hz(t.linewidth)},
                       {"center_hz", rad_to_hz(t.center)}});
    truth.push_back({{"file", name},
                     {"detuning_hz", meta.detuning_hz},
                     {"channel", std::string(to_string(meta.channel))},
                     {"valid", meta.valid},
                     {"modes", modes}});
  }

  // Calibration spectra on the same grid, seeded after the last trace.
  const std::vector<double>& grid = traces.front().trace.freq_hz;
  SynthesisOptions opts;
  opts.het_freq_hz = scan.het_freq_hz;
  opts.orientation = scan.orientation;
  opts.seed = trace_seed(scan.seed, traces.size());
  const PsdTrace shot =
      synthesize_shot_trace(scan.noise, scan.response, grid, config.synthesis.calibration_averages, opts);
  opts.seed = trace_seed(scan.seed, traces.size() + 1);
  const PsdTrace dark = synthesize_dark_trace(scan.noise, grid, config.synthesis.calibration_averages, opts);
  io::write_trace(dir / "shot.csv", shot);
  io::write_trace(dir / "dark.csv", dark);
  for (const char* name : {"shot.csv", "dark.csv"}) {
    outputs.push_back(file_entry(dir / name, dir));
    outputs.push_back(file_entry(io::meta_path_for(dir / name), dir));
  }

  json record = {{"schema", "librotor-run/1"},
                 {"tool_version", std::string(kToolVersion)},
                 {"command", "simulate"},
                 {"config", config_to_json(config)},
                 {"inputs", json::array({file_entry(a.config, {})})},
                 {"outputs", outputs},
                 {"summary",
                  {{"traces", traces.size()}, {"invalid_traces", invalid}, {"truth", truth}}},
                 {"timestamps", {{"started", started}, {"finished", utc_now()}}}};
  io::write_file_atomic(dir / "run_record.json", io::dump_json(record));
  out << "wrote " << traces.size() << " traces to " << dir.string() << "\n";
  return kExitOk;
}

// analyze

struct AnalyzeArgs {
  std::vector<std::string> traces;
  std::string shot;
  std::string dark;
  std::string out;
  std::string method = "ratio";
  std::optional<double> c;
  double c_err = 0.0;
  std::optional<double> mode_hz;
  std::optional<double> het_hz;
  double window_fwhm = 10.0;
  double search_half_width_hz = 30e3;
};

struct ModeJob {
  std::size_t trace = 0;
  ModeLabel label = ModeLabel::alpha;
  std::optional<TraceOccupation> result;
  std::string error;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  const std::string started = utc_now();
  const OccupationMethod method = occupation_method_from_string(a.method);
  if (a.c && !(*a.c > 0.0)) throw InputError("--c must be > 0");
  if (!(a.c_err >= 0.0)) throw InputError("--c-err must be >= 0");
  const std::vector<fs::path> files = expand_patterns(a.traces);
  const std::optional<DetectorResponse> calibrated = load_calibration(a.shot, a.dark, {}, err);
  const DetectorResponse resp = calibrated.value_or(DetectorResponse{});

  std::vector<PsdTrace> traces;
  std::vector<fs::path> used;
  json inputs = json::array();
  for (const fs::path& f : files) {
    PsdTrace t = io::read_trace(f);
    if (t.meta.kind != TraceKind::signal) {
      err << "warning: " << f.string() << ": calibration spectrum skipped\n";
      continue;
    }
    if (a.het_hz) t.meta.het_freq_hz = *a.het_hz;
    if (t.meta.modes.empty() && a.mode_hz) t.meta.modes.push_back({ModeLabel::alpha, *a.mode_hz});
    if (t.meta.modes.empty()) throw InputError(f.string() + ": no mode frequency in metadata; pass --mode-hz");
    if (!(t.meta.het_freq_hz > 0.0)) throw InputError(f.string() + ": no heterodyne frequency; pass --het-hz");
    inputs.push_back(file_entry(f, {}));
    if (fs::exists(io::meta_path_for(f))) inputs.push_back(file_entry(io::meta_path_for(f), {}));
    traces.push_back(std::move(t));
    used.push_back(f);
  }
  if (traces.empty()) throw InputError("no signal traces to analyze");
  if (!a.shot.empty()) {
    inputs.push_back(file_entry(a.shot, {}));
    inputs.push_back(file_entry(a.dark, {}));
  }

  // Ratio pass first; diffcal without a given C calibrates it per mode from these areas.
  ExtractOptions ratio_opts;
  ratio_opts.search_half_width_hz = a.search_half_width_hz;
  ratio_opts.window_fwhm = a.window_fwhm;
  std::vector<ModeJob> jobs;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    for (const ModeHint& hint : traces[i].meta.modes) {
      ModeJob job{i, hint.label, std::nullopt, {}};
      ExtractOptions opts = ratio_opts;
      if (method == OccupationMethod::difference_calibrated && a.c) {
        opts.method = method;
        opts.c_override = CFactor{*a.c, a.c_err};
      }
      try {
        job.result = extract_occupation(traces[i], resp, hint.hint_hz, opts, hint.label);
      } catch (const Error& e) {
        job.error = e.what();
      }
      jobs.push_back(std::move(job));
    }
  }

  json c_json = json::object();
  if (method == OccupationMethod::difference_calibrated && !a.c) {
    std::map<ModeLabel, std::vector<std::size_t>> by_label;
    for (std::size_t k = 0; k < jobs.size(); ++k)
      if (jobs[k].result) by_label[jobs[k].label].push_back(k);
    for (auto& [label, idx] : by_label) {
      std::vector<AreaEstimate> areas;
      for (std::size_t k : idx) {
        const OccupationResult& r = jobs[k].result->occupation;
        areas.push_back({r.stokes_area, r.anti_stokes_area, r.stokes_area_err * r.stokes_area_err,
                         r.anti_stokes_area_err * r.anti_stokes_area_err, r.area_covariance});
      }
      if (areas.size() < 2) {
        for (std::size_t k : idx) {
          jobs[k].result.reset();
          jobs[k].error = "C calibration needs at least 2 analysable spectra";
        }
        continue;
      }
      const CCalibration cal = calibrate_c(areas);
      if (cal.inconsistent)
        err << "warning: " << to_string(label) << ": sideband area differences inconsistent (p = "
            << io::format_double(cal.p_value) << ")\n";
      c_json[std::string(to_string(label))] = {
          {"value", cal.c}, {"err", cal.c_err}, {"chi2", cal.chi2}, {"dof", cal.dof},
          {"p_value", cal.p_value}, {"inconsistent", cal.inconsistent}};
      for (std::size_t i = 0; i < idx.size(); ++i) {
        ModeJob& job = jobs[idx[i]];
        try {
          const OccupationResult r =
              occupation_from_areas(areas[i], method, CFactor{cal.c, cal.c_err});
          job.result->occupation = r;
          job.result->occupation.label = label;
        } catch (const Error& e) {
          job.result.reset();
          job.error = e.what();
        }
      }
    }
  } else if (method == OccupationMethod::difference_calibrated) {
    c_json["given"] = {{"value", *a.c}, {"err", a.c_err}};
  }

  const fs::path out_path(a.out);
  fs::path plot_dir = out_path;
  plot_dir.replace_extension(".plot");
  json outputs = json::array();
  json entries = json::array();
  int ok = 0;
  int failed = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    json modes = json::array();
    for (const ModeJob& job : jobs) {
      if (job.trace != i) continue;
      json m = {{"label", std::string(to_string(job.label))}};
      if (job.result) {
        ++ok;
        m["occupation"] = occupation_json(job.result->occupation);
        m["fit"] = pair_fit_json(job.result->fit);
        const PlotData p = plot_data(job.result->normalized, job.result->fit);
        const fs::path plot =
            plot_dir / (used[i].stem().string() + "_" + std::string(to_string(job.label)) + ".csv");
        io::write_file_atomic(plot, io::plot_csv(p.freq_hz, p.data, p.fit, p.residual));
        m["plot"] = plot.lexically_relative(out_path.has_parent_path() ? out_path.parent_path() : ".").string();
        outputs.push_back(file_entry(plot, {}));
        m["error"] = nullptr;
      } else {
        ++failed;
        m["error"] = job.error;
        err << "warning: " << used[i].string() << " [" << to_string(job.label) << "]: " << job.error << "\n";
      }
      modes.push_back(m);
    }
    const TraceMeta& meta = traces[i].meta;
    entries.push_back({{"file", used[i].filename().string()},
                       {"detuning_hz", meta.detuning_hz},
                       {"channel", std::string(to_string(meta.channel))},
                       {"modes", modes}});
  }

  json results = {{"schema", "librotor-results/1"},
                  {"tool_version", std::string(kToolVersion)},
                  {"method", std::string(to_string(method))},
                  {"calibration", calibrated ? "shot_dark" : "flat"},
                  {"c", c_json},
                  {"traces", entries},
                  {"summary", {{"analysed", ok}, {"failed", failed}}}};
  io::write_file_atomic(out_path, io::dump_json(results));
  outputs.insert(outputs.begin(), file_entry(out_path, {}));
  write_record(record_path_for(out_path), "analyze", inputs, outputs, started,
               {{"analysed", ok}, {"failed", failed}});
  out << "analysed " << ok << " sideband pairs, " << failed << " failed\n";
  return ok == 0 ? kExitAnalysis : kExitOk;
}

// scanfit

struct ScanfitArgs {
  std::string traces;
  std::string out;
  std::string config;
};

int cmd_scanfit(const ScanfitArgs& a, std::ostream& out, std::ostream& err) {
  const std::string started = utc_now();
  const fs::path dir(a.traces);
  if (!fs::is_directory(dir)) throw InputError(dir.string() + ": not a directory");
  json inputs = json::array();
  RunConfig config;
  if (!a.config.empty()) {
    config = load_config(a.config);
    inputs.push_back(file_entry(a.config, {}));
  } else {
    const fs::path rec = dir / "run_record.json";
    if (!fs::exists(rec)) throw InputError(dir.string() + ": no run_record.json; pass --config");
    json j;
    try {
      j = json::parse(io::read_file(rec));
    } catch (const json::parse_error& e) {
      throw InputError(rec.string() + ": " + e.what());
    }
    if (!j.contains("config")) throw InputError(rec.string() + ": no config snapshot");
    config = config_from_json(j.at("config"));
    inputs.push_back(file_entry(rec, {}));
  }
  ScanAnalysisOptions options = make_analysis_options(config);
  if (fs::exists(dir / "shot.csv") && fs::exists(dir / "dark.csv")) {
    options.response = *load_calibration((dir / "shot.csv").string(), (dir / "dark.csv").string(),
                                         config.analysis.calibration, err);
    inputs.push_back(file_entry(dir / "shot.csv", {}));
    inputs.push_back(file_entry(dir / "dark.csv", {}));
  } else {
    err << "warning: no shot.csv/dark.csv in " << dir.string() << "; assuming a flat detector response\n";
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path& p = entry.path();
    if (p.extension() == ".csv" && p.filename().string().rfind("trace_", 0) == 0) files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  std::vector<PsdTrace> traces;
  for (const fs::path& f : files) {
    traces.push_back(io::read_trace(f));
    inputs.push_back(file_entry(f, {}));
  }
  if (traces.size() < 4) throw FitError("underdetermined scan: fewer than 4 traces in " + dir.string());

  const ScanReport report = analyze_scan(traces, make_optics(config), options);
  json trace_entries = json::array();
  for (const TraceAnalysis& t : report.traces) {
    json e = {{"file", files[t.index].filename().string()},
              {"label", std::string(to_string(t.label))},
              {"channel", std::string(to_string(t.channel))},
              {"detuning_hz", t.detuning_hz}};
    if (t.result) {
      e["occupation"] = occupation_json(t.result->occupation);
      e["fit"] = pair_fit_json(t.result->fit);
      e["error"] = nullptr;
    } else {
      e["error"] = t.error;
    }
    trace_entries.push_back(e);
  }
  json modes = json::array();
  for (const ModeScanReport& m : report.modes) modes.push_back(mode_report_json(m));
  json results = {{"schema", "librotor-scanfit/1"},
                  {"tool_version", std::string(kToolVersion)},
                  {"method", std::string(to_string(options.extract.method))},
                  {"traces", trace_entries},
                  {"modes", modes}};
  const fs::path out_path(a.out);
  io::write_file_atomic(out_path, io::dump_json(results));
  write_record(record_path_for(out_path), "scanfit", inputs, json::array({file_entry(out_path, {})}),
               started, {{"modes", report.modes.size()}, {"traces", report.traces.size()}});
  out << "fitted " << report.modes.size() << " mode(s) from " << traces.size() << " traces\n";
  return kExitOk;
}

// classify

struct ClassifyArgs {
  std::string input;
  std::string out;
};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t");
    const auto e = field.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_field(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw InputError(where + ": malformed number '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v)) throw InputError(where + ": malformed number '" + text + "'");
  return v;
}

int cmd_classify(const ClassifyArgs& a, std::ostream& out, std::ostream&) {
  const std::string started = utc_now();
  const std::string text = io::read_file(a.input);
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  json rows = json::array();
  int ok = 0;
  int failed = 0;
  std::map<std::string, int> counts;
  bool header_seen = false;
  while (std::getline(ss, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#')
      continue;
    const std::vector<std::string> f = split_fields(line);
    const std::string where = a.input + ":" + std::to_string(line_no);
    if (!header_seen && !rows.size() && f.size() >= 4 && f[0] == "gamma_x") {
      if (f[1] != "sigma_x" || f[2] != "gamma_y" || f[3] != "sigma_y" || (f.size() == 5 && f[4] != "label") ||
          f.size() > 5)
        throw InputError(where + ": expected header gamma_x,sigma_x,gamma_y,sigma_y[,label]");
      header_seen = true;
      continue;
    }
    if (f.size() != 4 && f.size() != 5) throw InputError(where + ": expected 4 or 5 fields");
    DampingMeasurement m;
    m.gamma_x = parse_field(f[0], where);
    m.gamma_x_err = parse_field(f[1], where);
    m.gamma_y = parse_field(f[2], where);
    m.gamma_y_err = parse_field(f[3], where);
    json row = {{"line", line_no},
                {"gamma_x", m.gamma_x},
                {"sigma_x", m.gamma_x_err},
                {"gamma_y", m.gamma_y},
                {"sigma_y", m.gamma_y_err}};
    row["label"] = f.size() == 5 ? json(f[4]) : json(nullptr);
    try {
      const GeometryClass g = classify(m);
      json candidates = json::array();
      for (Geometry c : g.candidates) candidates.push_back(std::string(to_string(c)));
      row["geometry"] = std::string(to_string(g.label));
      row["ratio"] = g.ratio;
      row["ratio_sigma"] = g.sigma;
      row["confidence"] = g.confidence;
      row["candidates"] = candidates;
      row["note"] = g.note;
      row["error"] = nullptr;
      ++counts[std::string(to_string(g.label))];
      ++ok;
    } catch (const InputError& e) {
      row["error"] = e.what();
      ++failed;
    }
    rows.push_back(row);
  }
  if (rows.empty()) throw InputError(a.input + ": no measurement rows");
  json bands = json::array();
  for (const ReferenceBand& b : reference_bands())
    bands.push_back({{"geometry", std::string(to_string(b.label))}, {"lo", b.lo}, {"hi", b.hi}});
  json results = {{"schema", "librotor-classification/1"},
                  {"tool_version", std::string(kToolVersion)},
                  {"reference_bands", bands},
                  {"rows", rows},
                  {"summary", {{"classified", ok}, {"failed", failed}, {"counts", counts}}}};
  const fs::path out_path(a.out);
  io::write_file_atomic(out_path, io::dump_json(results));
  write_record(record_path_for(out_path), "classify", json::array({file_entry(a.input, {})}),
               json::array({file_entry(out_path, {})}), started, {{"classified", ok}, {"failed", failed}});
  out << "classified " << ok << " row(s), " << failed << " failed\n";
  return kExitOk;
}

// scenario

struct ScenarioArgs {
  std::string name;
  std::string out;
};

int cmd_scenario(const ScenarioArgs& a, std::ostream& out, std::ostream&) {
  Scenario s;
  if (a.name == "replica_1d")
    s = replica_1d();
  else if (a.name == "replica_2d")
    s = replica_2d();
  else
    throw InputError("unknown scenario '" + a.name + "' (expected replica_1d|replica_2d)");
  io::write_file_atomic(a.out, io::dump_json(config_to_json(run_config_from_scenario(s))));
  out << "wrote " << a.out << "\n";
  return kExitOk;
}

}  // namespace

json without_timestamps(json record) {
  if (record.is_object()) record.erase("timestamps");
  return record;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Libration cooling models, synthetic heterodyne spectra and sideband thermometry.", "librotor"};
  app.set_version_flag("--version", version_line());
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Synthesize a detuning scan of PSD traces from a config");
  simulate->set_version_flag("--version", version_line());
  simulate->add_option("--config", sim.config, "Run configuration JSON")->required();
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "Override the configured seed");

  AnalyzeArgs an;
  CLI::App* analyze = app.add_subcommand("analyze", "Sideband thermometry on PSD traces");
  analyze->set_version_flag("--version", version_line());
  analyze->add_option("--traces", an.traces, "Trace files or glob patterns")->required();
  analyze->add_option("--shot", an.shot, "Local-oscillator-only calibration trace");
  analyze->add_option("--dark", an.dark, "Dark calibration trace");
  analyze->add_option("--out", an.out, "Results JSON")->required();
  analyze->add_option("--method", an.method, "ratio or diffcal")->check(CLI::IsMember({"ratio", "diffcal"}));
  analyze->add_option("--c", an.c, "Fixed area scale C for diffcal");
  analyze->add_option("--c-err", an.c_err, "Standard error of --c");
  analyze->add_option("--mode-hz", an.mode_hz, "Mode frequency for traces without metadata");
  analyze->add_option("--het-hz", an.het_hz, "Heterodyne frequency override");
  analyze->add_option("--window-fwhm", an.window_fwhm, "Fit window half-width in linewidths");
  analyze->add_option("--search-hz", an.search_half_width_hz, "Peak search half-width");

  ScanfitArgs sf;
  CLI::App* scanfit = app.add_subcommand("scanfit", "Fit spring, damping and occupation across a detuning scan");
  scanfit->set_version_flag("--version", version_line());
  scanfit->add_option("--traces", sf.traces, "Directory written by simulate")->required();
  scanfit->add_option("--out", sf.out, "Results JSON")->required();
  scanfit->add_option("--config", sf.config, "Setup config (default: the directory's run record)");

  ClassifyArgs cl;
  CLI::App* classify_cmd = app.add_subcommand("classify", "Geometry from translational damping anisotropy");
  classify_cmd->set_version_flag("--version", version_line());
  classify_cmd->add_option("--input", cl.input, "CSV of gamma_x,sigma_x,gamma_y,sigma_y[,label]")->required();
  classify_cmd->add_option("--out", cl.out, "Results JSON")->required();

  ScenarioArgs sc;
  CLI::App* scenario = app.add_subcommand("scenario", "Write a built-in scenario as a config file");
  scenario->set_version_flag("--version", version_line());
  scenario->add_option("--name", sc.name, "replica_1d or replica_2d")->required();
  scenario->add_option("--out", sc.out, "Config JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out, err);
    if (analyze->parsed()) return cmd_analyze(an, out, err);
    if (scanfit->parsed()) return cmd_scanfit(sf, out, err);
    if (classify_cmd->parsed()) return cmd_classify(cl, out, err);
    if (scenario->parsed()) return cmd_scenario(sc, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitAnalysis;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace librotor
