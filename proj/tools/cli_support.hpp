#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace obstacle_walk::cli {

using json = nlohmann::json;

/// Malformed flags or config: exit status 2.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ParamKind { kString, kNumber, kInteger, kFlag, kList };

struct Param {
  std::string name;
  ParamKind kind = ParamKind::kString;
  std::string help;
  bool required = false;
  /// Default value; null means "absent unless given".
  json fallback = nullptr;
};

/// Numeric table with per-column units and a provenance tag
/// ("exact", "monte_carlo(n, seed)" or "fitted").
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::string> units;
  std::string provenance = "exact";
  std::vector<std::vector<json>> rows;

  json to_json() const;
  std::string to_csv() const;
};

struct StepResult {
  json outputs = json::object();
  std::vector<Table> tables;
  /// Names of the asserted invariants that failed; empty means pass.
  std::vector<std::string> failures;
  /// Table written when --out ends in .csv.
  std::string primary_table;
};

/// Typed access to a resolved argument object.
class Args {
 public:
  explicit Args(json values) : values_(std::move(values)) {}

  bool has(const std::string& key) const;
  std::string str(const std::string& key) const;
  double num(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;
  const json& raw() const { return values_; }

 private:
  const json& get(const std::string& key) const;
  json values_;
};

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<Param> params;
  std::function<StepResult(const Args&)> run;
  /// The command writes its own artifact to --out, so bundles go to --bundle only.
  bool owns_out = false;
};

const std::vector<CommandSpec>& commands();
const CommandSpec& find_command(const std::string& name);

/// Fills defaults, converts string values to the declared kinds and rejects
/// unknown or missing keys.
json resolve_args(const CommandSpec& spec, const json& given);

std::string format_number(double v);
std::string hex64(std::uint64_t v);

}  // namespace obstacle_walk::cli
