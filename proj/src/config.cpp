#include "lfr/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include <nlohmann/json.hpp>

#include "lfr/errors.hpp"

namespace lfr {

using nlohmann::json;

namespace {

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + text + "'");
  }
}

int parse_int(const std::string& key, const std::string& text) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + text + "'");
  }
  return v;
}

void require(bool ok, const std::string& key, const char* what) {
  if (!ok) throw ConfigError("config key '" + key + "' " + what);
}

struct Field {
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<json(const PipelineConfig&)> get;
};

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    auto real = [&t](const std::string& name, auto member, double lo, bool lo_inclusive) {
      t[name] = Field{[=](PipelineConfig& c, const std::string& key, const std::string& text) {
                        const double v = parse_double(key, text);
                        require(lo_inclusive ? v >= lo : v > lo, key, lo_inclusive ? "must be >= bound" : "must exceed bound");
                        member(c) = v;
                      },
                      [=](const PipelineConfig& c) { return json(member(c)); }};
    };
    auto integer = [&t](const std::string& name, auto member, int lo) {
      t[name] = Field{[=](PipelineConfig& c, const std::string& key, const std::string& text) {
                        const int v = parse_int(key, text);
                        require(v >= lo, key, "is below its minimum");
                        member(c) = v;
                      },
                      [=](const PipelineConfig& c) { return json(member(c)); }};
    };
    integer("octaves", [](auto& c) -> auto& { return c.detector.octaves; }, 1);
    integer("intervals", [](auto& c) -> auto& { return c.detector.intervals; }, 1);
    real("sigma0", [](auto& c) -> auto& { return c.detector.sigma0; }, 0.5, false);
    real("contrast_thresh", [](auto& c) -> auto& { return c.detector.contrast_thresh; }, 0.0, true);
    real("edge_thresh", [](auto& c) -> auto& { return c.detector.edge_thresh; }, 1.0, false);
    t["k_template"] = Field{[](PipelineConfig& c, const std::string& key, const std::string& text) {
                              const double v = parse_double(key, text);
                              require(v > 0.0, key, "must be positive");
                              c.curves.k_template = v;
                              c.detector.k_template = v;
                            },
                            [](const PipelineConfig& c) { return json(c.curves.k_template); }};
    real("corr_mask_thresh", [](auto& c) -> auto& { return c.curves.corr_mask_thresh; }, -1.0, true);
    t["view_span"] = Field{[](PipelineConfig& c, const std::string& key, const std::string& text) {
                             const int v = parse_int(key, text);
                             require(v == 0 || (v >= 3 && v % 2 == 1), key, "must be 0 or an odd count >= 3");
                             c.curves.view_span = v;
                           },
                           [](const PipelineConfig& c) { return json(c.curves.view_span); }};
    integer("search_radius", [](auto& c) -> auto& { return c.curves.search_radius; }, 0);
    real("min_span_frac", [](auto& c) -> auto& { return c.curves.min_span_frac; }, 0.0, true);
    real("max_step_px", [](auto& c) -> auto& { return c.curves.max_step_px; }, 0.0, false);
    real("max_slope_px_per_view", [](auto& c) -> auto& { return c.curves.max_slope_px_per_view; }, 0.0,
         true);
    real("planar_thresh", [](auto& c) -> auto& { return c.thresholds.planar_thresh; }, 0.0, true);
    real("slope_thresh", [](auto& c) -> auto& { return c.thresholds.slope_thresh; }, 0.0, true);
    real("xu_thresh", [](auto& c) -> auto& { return c.thresholds.xu_thresh; }, 0.0, true);
    integer("min_samples", [](auto& c) -> auto& { return c.thresholds.min_samples; }, 4);
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, field] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(cfg, key, value);
}

json config_to_json(const PipelineConfig& cfg) {
  json j = json::object();
  for (const auto& [name, field] : fields()) j[name] = field.get(cfg);
  return j;
}

PipelineConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) throw ConfigError("config key '" + key + "' must be numeric");
    set_config_value(cfg, key, value.is_number_integer() ? std::to_string(value.get<long long>()) : value.dump());
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

}  // namespace lfr
