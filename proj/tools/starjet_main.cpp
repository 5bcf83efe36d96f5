// Batch driver: reads a job file, runs the declared tasks, and prints a
// deterministic report to stdout (text or JSON).  Timing and cache notes go
// to stderr so reports stay byte-identical across runs.
//
// Exit codes: 0 all checks pass, 1 checks failed, 2 malformed config,
// 3 violated precondition/truncation/context, 4 internal inconsistency.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "starjet/config.hpp"
#include "starjet/job.hpp"

namespace {

using nlohmann::ordered_json;
using namespace starjet;

ordered_json report_json(const RunReport& r) {
  ordered_json tasks = ordered_json::array();
  for (const TaskReport& t : r.tasks) {
    ordered_json jt;
    jt["task"] = t.kind;
    jt["status"] = t.ok ? "ok" : "checks-failed";
    ordered_json fields = ordered_json::object();
    for (const auto& [k, v] : t.fields) fields[k] = v;
    jt["fields"] = std::move(fields);
    ordered_json checks = ordered_json::array();
    for (const CheckOutcome& c : t.checks) {
      ordered_json jc;
      jc["label"] = c.label;
      jc["pass"] = c.pass;
      if (!c.pass && !c.residual.empty()) jc["residual"] = c.residual;
      checks.push_back(std::move(jc));
    }
    jt["checks"] = std::move(checks);
    tasks.push_back(std::move(jt));
  }
  ordered_json root;
  root["report"]["seed"] = r.seed;
  root["report"]["tasks"] = std::move(tasks);
  root["report"]["result"] = r.all_pass ? "pass" : "fail";
  return root;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Schema:
      return 2;
    case ErrorKind::Internal:
      return 4;
    default:
      return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"starjet: deformation-quantization batch driver"};
  std::string command = "run";
  std::string config_path;
  std::string cache_dir;
  std::string emit = "text";
  int order = -1;
  int truncation = -1;
  bool no_symmetrize = false;

  app.add_option("command", command,
                 "task selection: run (all declared tasks) or a single task kind")
      ->check(CLI::IsMember({"run", "validate", "connection", "fedosov", "star", "whitney-star",
                             "invariance", "reduce-check", "equiv"}));
  app.add_option("--config", config_path, "job file to execute")->required();
  app.add_option("--order", order, "override the expansion order K for every task")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--truncation", truncation, "override the filtration order N for every task")
      ->check(CLI::PositiveNumber);
  app.add_option("--cache-dir", cache_dir, "directory for cached flat structures");
  app.add_flag("--no-symmetrize", no_symmetrize,
               "skip the symmetrizing correction when building connections from metrics");
  app.add_option("--emit", emit, "report format")->check(CLI::IsMember({"text", "json"}));

  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "starjet: cannot open config file '" << config_path << "'\n";
      return 2;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    JobConfig cfg = parse_job_config(buf.str());

    RunOptions opt;
    opt.order_override = order;
    opt.truncation_override = truncation;
    opt.cache_dir = cache_dir;
    opt.no_symmetrize = no_symmetrize;
    opt.task_filter = command == "run" ? std::string() : command;
    opt.log = &std::cerr;

    RunReport rep = run_job(cfg, opt);
    for (const TaskReport& t : rep.tasks)
      std::cerr << "# task " << t.kind << ": " << t.elapsed_ms << " ms\n";
    if (emit == "json")
      std::cout << report_json(rep).dump(2) << "\n";
    else
      std::cout << report_text(rep);
    return rep.all_pass ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "starjet: error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "starjet: internal error: " << e.what() << "\n";
    return 4;
  }
}
