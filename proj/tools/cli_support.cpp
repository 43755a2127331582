#include "cli_support.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace obstacle_walk::cli {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json Table::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) rows_json.push_back(r);
  return {{"name", name},
          {"columns", columns},
          {"units", units},
          {"provenance", provenance},
          {"rows", rows_json}};
}

namespace {

std::string csv_cell(const json& v) {
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_null()) return "";
  const std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (const char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

}  // namespace

std::string Table::to_csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_cell(r[i]);
    out << '\n';
  }
  return out.str();
}

const json& Args::get(const std::string& key) const {
  if (!values_.contains(key) || values_.at(key).is_null()) {
    throw SchemaError("missing argument '" + key + "'");
  }
  return values_.at(key);
}

bool Args::has(const std::string& key) const {
  return values_.contains(key) && !values_.at(key).is_null();
}

std::string Args::str(const std::string& key) const { return get(key).get<std::string>(); }
double Args::num(const std::string& key) const { return get(key).get<double>(); }
std::int64_t Args::integer(const std::string& key) const { return get(key).get<std::int64_t>(); }
bool Args::flag(const std::string& key) const { return has(key) && get(key).get<bool>(); }

std::vector<std::string> Args::list(const std::string& key) const {
  if (!has(key)) return {};
  return get(key).get<std::vector<std::string>>();
}

namespace {

json convert(const Param& p, const json& v) {
  const std::string where = "argument '" + p.name + "'";
  switch (p.kind) {
    case ParamKind::kString:
      if (v.is_string()) return v;
      if (v.is_number()) return v.dump();
      break;
    case ParamKind::kNumber:
      if (v.is_number()) return v.get<double>();
      if (v.is_string()) {
        const std::string s = v.get<std::string>();
        double x = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
        if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return x;
      }
      break;
    case ParamKind::kInteger:
      if (v.is_number_integer()) return v.get<std::int64_t>();
      if (v.is_number_float()) {
        const double x = v.get<double>();
        if (std::floor(x) == x && std::fabs(x) < 9e15) return static_cast<std::int64_t>(x);
      }
      if (v.is_string()) {
        const std::string s = v.get<std::string>();
        std::int64_t x = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
        if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return x;
      }
      break;
    case ParamKind::kFlag:
      if (v.is_boolean()) return v;
      break;
    case ParamKind::kList:
      if (v.is_array()) {
        json out = json::array();
        for (const auto& item : v) {
          if (item.is_string()) {
            out.push_back(item);
          } else if (item.is_number()) {
            out.push_back(item.dump());
          } else {
            throw SchemaError(where + " must be a list of strings");
          }
        }
        return out;
      }
      if (v.is_string()) return json::array({v});
      break;
  }
  throw SchemaError(where + " has the wrong type: " + v.dump());
}

}  // namespace

json resolve_args(const CommandSpec& spec, const json& given) {
  if (!given.is_object()) throw SchemaError("arguments of '" + spec.name + "' must be an object");
  for (const auto& [key, value] : given.items()) {
    const bool known = std::any_of(spec.params.begin(), spec.params.end(),
                                   [&](const Param& p) { return p.name == key; });
    if (!known) throw SchemaError("unknown argument '" + key + "' for '" + spec.name + "'");
  }
  json out = json::object();
  for (const auto& p : spec.params) {
    if (given.contains(p.name) && !given.at(p.name).is_null()) {
      out[p.name] = convert(p, given.at(p.name));
    } else if (p.required) {
      throw SchemaError("'" + spec.name + "' needs --" + p.name);
    } else if (p.kind == ParamKind::kFlag) {
      out[p.name] = p.fallback.is_null() ? json(false) : p.fallback;
    } else if (!p.fallback.is_null()) {
      out[p.name] = convert(p, p.fallback);
    }
  }
  return out;
}

const CommandSpec& find_command(const std::string& name) {
  for (const auto& c : commands()) {
    if (c.name == name) return c;
  }
  throw SchemaError("unknown command '" + name + "'");
}

}  // namespace obstacle_walk::cli
