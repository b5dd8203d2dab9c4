#include "muxsim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>

namespace muxsim {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void field_error(const std::string& path, std::string_view what) {
  throw ConfigurationError(fmt::format("{}: {}", path, what));
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& path) {
  if (!obj.is_object()) field_error(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) field_error(path.empty() ? key : path + "." + key, "unknown field");
  }
}

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
}

double number_or(const json& obj, std::string_view key, double fallback, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) field_error(join(path, key), "expected a number");
  return it->get<double>();
}

std::uint64_t unsigned_or(const json& obj, std::string_view key, std::uint64_t fallback, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number()) {
    const double v = it->get<double>();
    if (v >= 0.0 && std::floor(v) == v && v < 1.8e19) return static_cast<std::uint64_t>(v);
  }
  field_error(join(path, key), "expected a non-negative integer");
}

int int_or(const json& obj, std::string_view key, int fallback, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (it->is_number()) {
    const double v = it->get<double>();
    if (std::floor(v) == v && std::abs(v) < 2e9) return static_cast<int>(v);
  }
  field_error(join(path, key), "expected an integer");
}

bool bool_or(const json& obj, std::string_view key, bool fallback, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) field_error(join(path, key), "expected true or false");
  return it->get<bool>();
}

const json* array_field(const json& obj, std::string_view key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  if (!it->is_array()) field_error(join(path, key), "expected an array");
  return &*it;
}

PairNumberDistribution source_from_json(const json& j, const std::string& path) {
  check_keys(j, {"kind", "mu", "n_max"}, path);
  PairNumberDistribution d;
  const auto kind = j.find("kind");
  if (kind == j.end()) field_error(join(path, "kind"), "required (poissonian, thermal or point_mass)");
  if (!kind->is_string()) field_error(join(path, "kind"), "expected a string");
  try {
    d.kind = pair_statistics_from_string(kind->get<std::string>());
  } catch (const InvalidParameterError& e) {
    field_error(join(path, "kind"), e.what());
  }
  if (!j.contains("mu")) field_error(join(path, "mu"), "required");
  d.mu = number_or(j, "mu", 0.0, path);
  d.n_max = int_or(j, "n_max", PairNumberDistribution::kDefaultNMax, path);
  return d;
}

ChannelSpec channel_from_json(const json& j, const std::string& path) {
  check_keys(j, {"eta"}, path);
  return {number_or(j, "eta", 1.0, path)};
}

DetectorSpec detector_from_json(const json& j, const std::string& path) {
  check_keys(j, {"efficiency", "dark_prob"}, path);
  return {number_or(j, "efficiency", 1.0, path), number_or(j, "dark_prob", 0.0, path)};
}

SwitchSpec switch_from_json(const json& j, const std::string& path) {
  check_keys(j, {"input_transmissions"}, path);
  SwitchSpec sw;
  if (const json* inputs = array_field(j, "input_transmissions", path)) {
    sw.input_transmissions.clear();
    for (std::size_t i = 0; i < inputs->size(); ++i) {
      const json& t = (*inputs)[i];
      if (!t.is_number()) field_error(fmt::format("{}.input_transmissions[{}]", path, i), "expected a number");
      sw.input_transmissions.push_back(t.get<double>());
    }
  }
  return sw;
}

template <typename T, typename Parse>
std::vector<T> per_source_list(const json& sys, std::string_view key, std::size_t n, Parse parse, const T& fallback) {
  const json* list = array_field(sys, key, "system");
  if (!list) return std::vector<T>(n, fallback);
  std::vector<T> out;
  for (std::size_t k = 0; k < list->size(); ++k) {
    out.push_back(parse((*list)[k], fmt::format("system.{}[{}]", key, k)));
  }
  return out;
}

json detector_to_json(const DetectorSpec& d) { return {{"efficiency", d.efficiency}, {"dark_prob", d.dark_prob}}; }

std::size_t line_of(std::string_view text, std::size_t byte, std::size_t* column) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  *column = col;
  return line;
}

void set_at(json& node, const std::vector<std::string>& segments, std::size_t index, double value,
            std::string_view full_path) {
  if (index == segments.size()) {
    if (!node.is_number()) {
      throw ConfigurationError(fmt::format("sweep parameter '{}' does not resolve to a numeric field", full_path));
    }
    node = value;
    return;
  }
  const std::string& seg = segments[index];
  if (node.is_object()) {
    auto it = node.find(seg);
    if (it == node.end()) {
      throw ConfigurationError(fmt::format("sweep parameter '{}': no field '{}'", full_path, seg));
    }
    set_at(*it, segments, index + 1, value, full_path);
  } else if (node.is_array()) {
    if (seg == "*") {
      for (auto& element : node) set_at(element, segments, index + 1, value, full_path);
      return;
    }
    std::size_t pos = 0;
    std::size_t element = 0;
    try {
      element = std::stoul(seg, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != seg.size() || element >= node.size()) {
      throw ConfigurationError(fmt::format("sweep parameter '{}': bad array index '{}'", full_path, seg));
    }
    set_at(node[element], segments, index + 1, value, full_path);
  } else {
    throw ConfigurationError(fmt::format("sweep parameter '{}' does not resolve to a numeric field", full_path));
  }
}

}  // namespace

std::vector<double> SweepSpec::values() const {
  std::vector<double> out(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double f = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    out[i] = log_scale ? from * std::pow(to / from, f) : from + (to - from) * f;
  }
  if (steps > 1) out.back() = to;
  return out;
}

SystemConfig system_from_json(const json& sys) {
  check_keys(sys,
             {"sources", "signal_channels", "idler_channels", "herald_detectors", "switch_tree",
              "switch_path_override", "routing", "output_detector", "hbt_enabled", "hbt_detectors",
              "repetition_period_s", "pulses"},
             "system");
  SystemConfig cfg;
  const json* sources = array_field(sys, "sources", "system");
  if (!sources || sources->empty()) field_error("system.sources", "at least one source is required");
  for (std::size_t k = 0; k < sources->size(); ++k) {
    cfg.sources.push_back(source_from_json((*sources)[k], fmt::format("system.sources[{}]", k)));
  }
  const std::size_t n = cfg.sources.size();

  cfg.signal_channels = per_source_list(sys, "signal_channels", n, channel_from_json, ChannelSpec{});
  cfg.idler_channels = per_source_list(sys, "idler_channels", n, channel_from_json, ChannelSpec{});
  cfg.herald_detectors = per_source_list(sys, "herald_detectors", n, detector_from_json, DetectorSpec{});

  if (const json* tree = array_field(sys, "switch_tree", "system")) {
    for (std::size_t s = 0; s < tree->size(); ++s) {
      cfg.switch_tree.push_back(switch_from_json((*tree)[s], fmt::format("system.switch_tree[{}]", s)));
    }
  } else {
    cfg.switch_tree.assign(switch_count(n), SwitchSpec{});
  }

  if (const json* path = array_field(sys, "switch_path_override", "system")) {
    std::vector<double> values;
    for (std::size_t k = 0; k < path->size(); ++k) {
      if (!(*path)[k].is_number()) field_error(fmt::format("system.switch_path_override[{}]", k), "expected a number");
      values.push_back((*path)[k].get<double>());
    }
    cfg.switch_path_override = std::move(values);
  }

  cfg.routing = RoutingPolicy::priority(n);
  if (const auto it = sys.find("routing"); it != sys.end()) {
    check_keys(*it, {"kind", "order"}, "system.routing");
    if (const auto kind = it->find("kind"); kind != it->end() && *kind != "priority_order") {
      field_error("system.routing.kind", "only priority_order is supported");
    }
    if (const json* order = array_field(*it, "order", "system.routing")) {
      cfg.routing.order.clear();
      for (std::size_t i = 0; i < order->size(); ++i) {
        const json& v = (*order)[i];
        if (!v.is_number_unsigned()) field_error(fmt::format("system.routing.order[{}]", i), "expected a source index");
        cfg.routing.order.push_back(v.get<std::size_t>());
      }
    }
  }

  if (const auto it = sys.find("output_detector"); it != sys.end()) {
    cfg.output_detector = detector_from_json(*it, "system.output_detector");
  }
  cfg.hbt_enabled = bool_or(sys, "hbt_enabled", false, "system");
  if (const json* hbt = array_field(sys, "hbt_detectors", "system")) {
    if (hbt->size() != 2) field_error("system.hbt_detectors", "expected exactly two detectors");
    cfg.hbt_detectors[0] = detector_from_json((*hbt)[0], "system.hbt_detectors[0]");
    cfg.hbt_detectors[1] = detector_from_json((*hbt)[1], "system.hbt_detectors[1]");
  }
  cfg.repetition_period = number_or(sys, "repetition_period_s", cfg.repetition_period, "system");
  cfg.pulses = unsigned_or(sys, "pulses", cfg.pulses, "system");

  try {
    validate(cfg);
  } catch (const ConfigurationError& e) {
    throw ConfigurationError(fmt::format("system.{}", e.what()));
  }
  return cfg;
}

json system_to_json(const SystemConfig& cfg) {
  json sys;
  json sources = json::array();
  for (const auto& s : cfg.sources) {
    sources.push_back({{"kind", std::string(to_string(s.kind))}, {"mu", s.mu}, {"n_max", s.n_max}});
  }
  sys["sources"] = std::move(sources);
  auto channels = [](const std::vector<ChannelSpec>& list) {
    json out = json::array();
    for (const auto& c : list) out.push_back({{"eta", c.transmission}});
    return out;
  };
  sys["signal_channels"] = channels(cfg.signal_channels);
  sys["idler_channels"] = channels(cfg.idler_channels);
  json heralds = json::array();
  for (const auto& d : cfg.herald_detectors) heralds.push_back(detector_to_json(d));
  sys["herald_detectors"] = std::move(heralds);
  json tree = json::array();
  for (const auto& sw : cfg.switch_tree) tree.push_back({{"input_transmissions", sw.input_transmissions}});
  sys["switch_tree"] = std::move(tree);
  sys["switch_path_override"] = cfg.switch_path_override ? json(*cfg.switch_path_override) : json(nullptr);
  sys["routing"] = {{"kind", "priority_order"}, {"order", cfg.routing.order}};
  sys["output_detector"] = detector_to_json(cfg.output_detector);
  sys["hbt_enabled"] = cfg.hbt_enabled;
  sys["hbt_detectors"] = json::array({detector_to_json(cfg.hbt_detectors[0]), detector_to_json(cfg.hbt_detectors[1])});
  sys["repetition_period_s"] = cfg.repetition_period;
  sys["pulses"] = cfg.pulses;
  return sys;
}

json scenario_to_json(const Scenario& scenario) {
  json j;
  j["schema_version"] = scenario.schema_version;
  j["seed"] = scenario.seed;
  j["output"] = scenario.output;
  j["system"] = system_to_json(scenario.system);
  if (scenario.sweep) {
    const SweepSpec& s = *scenario.sweep;
    j["sweep"] = {{"parameter", s.parameter}, {"from", s.from}, {"to", s.to}, {"steps", s.steps},
                  {"log_scale", s.log_scale}};
  } else {
    j["sweep"] = nullptr;
  }
  return j;
}

SystemConfig apply_parameter(const SystemConfig& cfg, std::string_view path, double value) {
  std::string trimmed(path);
  if (trimmed.rfind("system.", 0) == 0) trimmed.erase(0, 7);
  std::vector<std::string> segments;
  std::stringstream ss(trimmed);
  for (std::string seg; std::getline(ss, seg, '.');) segments.push_back(seg);
  if (segments.empty()) throw ConfigurationError("sweep parameter path is empty");
  json sys = system_to_json(cfg);
  set_at(sys, segments, 0, value, path);
  return system_from_json(sys);
}

Scenario parse_scenario(std::string_view text, std::string_view source_name) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t column = 0;
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1, &column);
    throw ParseError(fmt::format("{}:{}:{}: {}", source_name, line, column, e.what()));
  }

  check_keys(j, {"schema_version", "seed", "output", "system", "sweep", "run"}, "");
  Scenario sc;
  if (!j.contains("schema_version")) field_error("schema_version", "required");
  sc.schema_version = int_or(j, "schema_version", kSchemaVersion, "");
  if (sc.schema_version != kSchemaVersion) {
    field_error("schema_version", fmt::format("unsupported version {} (expected {})", sc.schema_version, kSchemaVersion));
  }
  sc.seed = unsigned_or(j, "seed", sc.seed, "");
  if (const auto it = j.find("output"); it != j.end()) {
    if (!it->is_string()) field_error("output", "expected a string");
    sc.output = it->get<std::string>();
  }
  const auto sys = j.find("system");
  if (sys == j.end()) field_error("system", "required");
  sc.system = system_from_json(*sys);

  if (const auto it = j.find("sweep"); it != j.end() && !it->is_null()) {
    check_keys(*it, {"parameter", "from", "to", "steps", "log_scale"}, "sweep");
    SweepSpec sw;
    const auto param = it->find("parameter");
    if (param == it->end() || !param->is_string()) field_error("sweep.parameter", "expected a field path string");
    sw.parameter = param->get<std::string>();
    if (!it->contains("from") || !it->contains("to")) field_error("sweep", "'from' and 'to' are required");
    sw.from = number_or(*it, "from", 0.0, "sweep");
    sw.to = number_or(*it, "to", 0.0, "sweep");
    sw.steps = int_or(*it, "steps", 11, "sweep");
    sw.log_scale = bool_or(*it, "log_scale", false, "sweep");
    if (sw.steps < 1) field_error("sweep.steps", "must be >= 1");
    if (!std::isfinite(sw.from) || !std::isfinite(sw.to)) field_error("sweep", "bounds must be finite");
    if (sw.log_scale && !(sw.from > 0.0 && sw.to > 0.0)) field_error("sweep", "log_scale needs positive bounds");
    // Both endpoints must produce a valid system.
    apply_parameter(sc.system, sw.parameter, sw.from);
    apply_parameter(sc.system, sw.parameter, sw.to);
    sc.sweep = sw;
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open scenario file '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path.string());
}

}  // namespace muxsim
