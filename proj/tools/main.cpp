#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "cli_support.hpp"
#include "obstacle_walk/env_io.hpp"
#include "obstacle_walk/error.hpp"
#include "obstacle_walk/parallel.hpp"

namespace {

using namespace obstacle_walk;
using namespace obstacle_walk::cli;

constexpr const char* kCodeVersion = "0.1.0";
constexpr int kBundleFormatVersion = 1;

enum Exit { kPass = 0, kInvariantFailure = 1, kSchemaError = 2, kRuntimeError = 3 };

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

std::string checksum(const json& payload) {
  const std::string text = payload.dump();
  return hex64(fnv1a64({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()}));
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << text;
}

struct Step {
  std::string command;
  json args;
};

struct StepOutcome {
  json record;
  StepResult result;
  bool pass = true;
};

/// Pipeline state. Steps append their records; a thrown error marks the bundle
/// and leaves the completed steps in place.
struct Bundle {
  json config;
  json steps = json::array();
  std::vector<std::string> failures;
  std::string status = "pass";
  std::string error;
  int exit_code = kPass;

  json to_json(double runtime) const {
    json payload = {{"steps", steps}};
    json out = {{"format", "obstacle-walk-bundle"},
                {"format_version", kBundleFormatVersion},
                {"code_version", kCodeVersion},
                {"env_format_version", kEnvFormatVersion},
                {"config", config},
                {"status", status},
                {"failures", failures},
                {"steps", steps},
                {"checksums", {{"payload", checksum(payload)}}},
                {"metrics", {{"runtime_seconds", runtime}, {"threads", thread_count()}}}};
    if (!error.empty()) out["error"] = error;
    return out;
  }
};

StepOutcome run_step(const Step& step) {
  const CommandSpec& spec = find_command(step.command);
  const json resolved = resolve_args(spec, step.args);
  StepOutcome o;
  o.result = spec.run(Args(resolved));
  o.pass = o.result.failures.empty();
  json tables = json::array();
  for (const auto& t : o.result.tables) tables.push_back(t.to_json());
  o.record = {{"command", step.command},
              {"args", resolved},
              {"status", o.pass ? "pass" : "fail"},
              {"failures", o.result.failures},
              {"outputs", o.result.outputs},
              {"tables", tables},
              {"checksums", {{"outputs", checksum(o.result.outputs)}, {"tables", checksum(tables)}}}};
  return o;
}

/// Runs the steps in order and stops at the first error. The returned exit
/// code is 0 only when every asserted invariant held.
void run_pipeline(Bundle& bundle, const std::vector<Step>& steps, std::vector<StepOutcome>* keep) {
  for (const auto& step : steps) {
    try {
      StepOutcome o = run_step(step);
      bundle.steps.push_back(o.record);
      for (const auto& f : o.result.failures) bundle.failures.push_back(step.command + ":" + f);
      if (!o.pass) {
        bundle.status = "fail";
        bundle.exit_code = kInvariantFailure;
      }
      if (keep) keep->push_back(std::move(o));
    } catch (const SchemaError& e) {
      bundle.status = "error";
      bundle.error = step.command + ": " + e.what();
      bundle.exit_code = kSchemaError;
      return;
    } catch (const InvalidArgument& e) {
      bundle.status = "error";
      bundle.error = step.command + ": " + e.what();
      bundle.exit_code = kSchemaError;
      return;
    } catch (const FormatError& e) {
      bundle.status = "error";
      bundle.error = step.command + ": " + e.what();
      bundle.exit_code = kSchemaError;
      return;
    } catch (const InvariantViolation& e) {
      bundle.status = "fail";
      bundle.error = step.command + ": " + e.what();
      bundle.failures.push_back(step.command + ":" + e.what());
      bundle.exit_code = kInvariantFailure;
      return;
    } catch (const std::exception& e) {
      bundle.status = "error";
      bundle.error = step.command + ": " + e.what();
      bundle.exit_code = kRuntimeError;
      return;
    }
  }
}

/// Accepts {"pipeline": [...]}, a bundle (its echoed config is rerun) or a
/// single-command config {"command": ..., "args": {...}}.
std::vector<Step> pipeline_from(const json& root, json& echo) {
  if (!root.is_object()) throw SchemaError("pipeline config must be a JSON object");
  const json& cfg = root.contains("config") ? root.at("config") : root;
  if (!cfg.is_object()) throw SchemaError("'config' must be an object");
  std::vector<Step> steps;
  if (cfg.contains("pipeline")) {
    const json& list = cfg.at("pipeline");
    if (!list.is_array()) throw SchemaError("'pipeline' must be an array");
    for (const auto& item : list) {
      if (!item.is_object() || !item.contains("command") || !item.at("command").is_string()) {
        throw SchemaError("each pipeline step needs a string 'command'");
      }
      for (const auto& [key, value] : item.items()) {
        if (key != "command" && key != "args") throw SchemaError("unknown pipeline step key '" + key + "'");
      }
      const std::string name = item.at("command").get<std::string>();
      find_command(name);
      steps.push_back({name, item.value("args", json::object())});
    }
  } else if (cfg.contains("command")) {
    const std::string name = cfg.at("command").get<std::string>();
    find_command(name);
    steps.push_back({name, cfg.value("args", json::object())});
  } else {
    throw SchemaError("config needs 'pipeline' or 'command'");
  }
  json pipeline = json::array();
  for (const auto& s : steps) pipeline.push_back({{"command", s.command}, {"args", s.args}});
  echo = {{"command", "run"}, {"pipeline", pipeline}};
  return steps;
}

int emit(const Bundle& bundle, double runtime, const std::string& out, const std::string& bundle_path,
         const StepOutcome* single, bool owns_out) {
  const std::string text = bundle.to_json(runtime).dump(2) + "\n";
  bool printed = false;
  if (!out.empty() && !owns_out) {
    if (ends_with(out, ".csv")) {
      if (single != nullptr) {
        const auto& r = single->result;
        const auto it = std::find_if(r.tables.begin(), r.tables.end(),
                                     [&](const Table& t) { return t.name == r.primary_table; });
        if (it == r.tables.end()) {
          std::cerr << "error: this command has no table to write as CSV\n";
          return kSchemaError;
        }
        write_file(out, it->to_csv());
      }
    } else {
      write_file(out, text);
    }
    printed = true;
  }
  if (!bundle_path.empty()) {
    write_file(bundle_path, text);
    printed = true;
  }
  if (!printed) std::cout << text;
  if (!bundle.error.empty()) std::cerr << "error: " << bundle.error << "\n";
  for (const auto& f : bundle.failures) std::cerr << "invariant failed: " << f << "\n";
  return bundle.exit_code;
}

void add_param(CLI::App* sub, const Param& p, std::map<std::string, std::string>& strings,
               std::map<std::string, std::vector<std::string>>& lists, std::map<std::string, bool>& flags) {
  std::string help = p.help;
  if (!p.fallback.is_null()) help += " [" + (p.fallback.is_string() ? p.fallback.get<std::string>() : p.fallback.dump()) + "]";
  switch (p.kind) {
    case ParamKind::kFlag:
      sub->add_flag("--" + p.name, flags[p.name], help);
      break;
    case ParamKind::kList:
      sub->add_option("--" + p.name, lists[p.name], help)->allow_extra_args();
      break;
    default:
      sub->add_option("--" + p.name, strings[p.name], help);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Killed random walks among Bernoulli obstacles"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker cap (defaults to OBSTACLE_WALK_THREADS, else 1)")
      ->check(CLI::PositiveNumber);

  struct Slot {
    const CommandSpec* spec = nullptr;
    CLI::App* sub = nullptr;
    std::map<std::string, std::string> strings;
    std::map<std::string, std::vector<std::string>> lists;
    std::map<std::string, bool> flags;
    std::string config;
    std::string bundle;
  };
  std::vector<Slot> slots(commands().size());
  for (std::size_t i = 0; i < commands().size(); ++i) {
    Slot& s = slots[i];
    s.spec = &commands()[i];
    s.sub = app.add_subcommand(s.spec->name, s.spec->help);
    for (const auto& p : s.spec->params) add_param(s.sub, p, s.strings, s.lists, s.flags);
    s.sub->add_option("--config", s.config, "JSON object of arguments; overrides flags");
    s.sub->add_option("--bundle", s.bundle, "write the result bundle here");
  }
  std::string run_config, run_out, run_bundle;
  CLI::App* run = app.add_subcommand("run", "Run a pipeline config or rerun a bundle's echoed config");
  run->add_option("--config", run_config, "pipeline JSON or bundle")->required();
  run->add_option("--out", run_out, "write the result bundle here");
  run->add_option("--bundle", run_bundle, "write the result bundle here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSchemaError;
  }
  if (threads > 0) set_thread_count(threads);

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  try {
    if (run->parsed()) {
      Bundle bundle;
      const std::vector<Step> steps = pipeline_from(read_json(run_config), bundle.config);
      run_pipeline(bundle, steps, nullptr);
      return emit(bundle, elapsed(), run_out, run_bundle, nullptr, false);
    }
    for (Slot& s : slots) {
      if (!s.sub->parsed()) continue;
      json given = json::object();
      for (const auto& p : s.spec->params) {
        if (s.sub->count("--" + p.name) == 0) continue;
        if (p.kind == ParamKind::kFlag) {
          given[p.name] = s.flags[p.name];
        } else if (p.kind == ParamKind::kList) {
          given[p.name] = s.lists[p.name];
        } else {
          given[p.name] = s.strings[p.name];
        }
      }
      if (!s.config.empty()) {
        const json file = read_json(s.config);
        if (!file.is_object()) throw SchemaError("--config must hold a JSON object");
        for (const auto& [key, value] : file.items()) given[key] = value;
      }
      Bundle bundle;
      bundle.config = {{"command", s.spec->name}, {"args", resolve_args(*s.spec, given)}};
      std::vector<StepOutcome> kept;
      run_pipeline(bundle, {{s.spec->name, bundle.config.at("args")}}, &kept);
      const std::string out = bundle.config.at("args").value("out", "");
      return emit(bundle, elapsed(), out, s.bundle, kept.empty() ? nullptr : &kept.front(), s.spec->owns_out);
    }
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSchemaError;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSchemaError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kSchemaError;
}
