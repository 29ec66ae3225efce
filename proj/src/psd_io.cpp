#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "librotor/error.hpp"
#include "librotor/io.hpp"

namespace librotor::io {

namespace {

void append_number(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

bool parse_number(std::string_view field, double& out) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  return res.ec == std::errc() && res.ptr == field.data() + field.size() && std::isfinite(out);
}

}  // namespace

std::string psd_csv(const PsdTrace& trace) {
  std::string out;
  out.reserve(trace.values.size() * 44 + 32);
  out.append(kPsdHeader).push_back('\n');
  out.append(kPsdColumns).push_back('\n');
  for (std::size_t i = 0; i < trace.values.size(); ++i) {
    append_number(out, trace.freq_hz[i]);
    out.push_back(',');
    append_number(out, trace.values[i]);
    out.push_back('\n');
  }
  return out;
}

PsdTrace parse_psd_csv(std::string_view text, const std::string& source) {
  PsdTrace trace;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) {
    throw InputError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != kPsdHeader) fail("expected header '" + std::string(kPsdHeader) + "'");
      continue;
    }
    if (line_no == 2) {
      if (line != kPsdColumns) fail("expected column line '" + std::string(kPsdColumns) + "'");
      continue;
    }
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos)
      fail("expected two comma-separated fields");
    double f = 0.0;
    double v = 0.0;
    if (!parse_number(line.substr(0, comma), f)) fail("malformed frequency");
    if (!parse_number(line.substr(comma + 1), v)) fail("malformed PSD value");
    trace.freq_hz.push_back(f);
    trace.values.push_back(v);
  }
  if (line_no < 2) {
    line_no = std::max<std::size_t>(line_no, 1);
    fail("missing header");
  }
  try {
    validate(trace);
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
  return trace;
}

json meta_to_json(const TraceMeta& meta) {
  json j;
  j["detuning_hz"] = meta.detuning_hz;
  j["het_freq_hz"] = meta.het_freq_hz;
  j["averages"] = meta.averages;
  j["seed"] = meta.seed;
  j["channel"] = std::string(to_string(meta.channel));
  j["kind"] = std::string(to_string(meta.kind));
  j["orientation"] = std::string(to_string(meta.orientation));
  j["valid"] = meta.valid;
  j["note"] = meta.note;
  json modes = json::array();
  for (const ModeHint& m : meta.modes)
    modes.push_back({{"label", std::string(to_string(m.label))}, {"hint_hz", m.hint_hz}});
  j["modes"] = modes;
  return j;
}

TraceMeta meta_from_json(const json& j, const std::string& source) {
  if (!j.is_object()) throw InputError(source + ": metadata must be a JSON object");
  TraceMeta m;
  static const char* known[] = {"detuning_hz", "het_freq_hz", "averages", "seed", "channel",
                                "kind",        "orientation", "valid",    "note", "modes"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      throw InputError(source + ": " + key + ": unknown key");
  }
  try {
    if (j.contains("detuning_hz")) m.detuning_hz = j.at("detuning_hz").get<double>();
    if (j.contains("het_freq_hz")) m.het_freq_hz = j.at("het_freq_hz").get<double>();
    if (j.contains("averages")) m.averages = j.at("averages").get<std::uint64_t>();
    if (j.contains("seed")) m.seed = j.at("seed").get<unsigned long long>();
    if (j.contains("channel")) m.channel = channel_from_string(j.at("channel").get<std::string>());
    if (j.contains("kind")) m.kind = trace_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("orientation"))
      m.orientation = orientation_from_string(j.at("orientation").get<std::string>());
    if (j.contains("valid")) m.valid = j.at("valid").get<bool>();
    if (j.contains("note")) m.note = j.at("note").get<std::string>();
    if (j.contains("modes")) {
      for (const json& mode : j.at("modes"))
        m.modes.push_back({mode_label_from_string(mode.at("label").get<std::string>()),
                           mode.at("hint_hz").get<double>()});
    }
  } catch (const json::exception& e) {
    throw InputError(source + ": " + e.what());
  }
  return m;
}

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

void write_trace(const std::filesystem::path& csv_path, const PsdTrace& trace) {
  write_file_atomic(csv_path, psd_csv(trace));
  write_file_atomic(meta_path_for(csv_path), dump_json(meta_to_json(trace.meta)));
}

PsdTrace read_trace(const std::filesystem::path& csv_path) {
  PsdTrace trace = parse_psd_csv(read_file(csv_path), csv_path.string());
  const std::filesystem::path meta = meta_path_for(csv_path);
  if (std::filesystem::exists(meta)) {
    json j;
    try {
      j = json::parse(read_file(meta));
    } catch (const json::parse_error& e) {
      throw InputError(meta.string() + ": " + e.what());
    }
    trace.meta = meta_from_json(j, meta.string());
  }
  return trace;
}

std::string plot_csv(std::span<const double> freq_hz, std::span<const double> data,
                     std::span<const double> fit, std::span<const double> residual) {
  std::string out = "freq_hz,data,fit,residual\n";
  for (std::size_t i = 0; i < freq_hz.size(); ++i) {
    append_number(out, freq_hz[i]);
    out.push_back(',');
    append_number(out, data[i]);
    out.push_back(',');
    append_number(out, fit[i]);
    out.push_back(',');
    append_number(out, residual[i]);
    out.push_back('\n');
  }
  return out;
}

}  // namespace librotor::io
