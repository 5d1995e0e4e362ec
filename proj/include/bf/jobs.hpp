#pragma once

#include <string>

#include "bf/common.hpp"

namespace bf {

// One parsed job file: a single command plus its payload and output routing.
// Unknown fields anywhere in the file are rejected with a JSON-pointer path.
struct JobFile {
  int version = 1;
  std::string id;       // optional label, echoed into reports
  std::string command;  // one of the dispatch table's command names
  json region;          // geometric domain, where the command needs one
  json payload;         // command-specific inputs
  json tolerances;      // optional numeric overrides, schema per command
  json output;          // optional {"expr":path, "report":path, "grid":path}

  static JobFile parse(const json& j);
};

// Options collected from the command line (and BORELFORGE_THREADS).
struct CliOptions {
  std::string command;
  std::string job_path;
  std::string out_dir = ".";
  int max_order = -1;  // <0: leave the job's own setting alone
  double tol = -1.0;   // <0: leave the job's own setting alone
  int threads = 0;     // 0: keep the library default
  bool dump_grid = false;
  bool paper_examples = false;
  int i_max = -1;  // check-filtration override
  int j_max = -1;  // check-filtration override
};

// Run one parsed job. Writes artifacts under opt.out_dir, prints a short
// summary, and returns the process exit code (0 ok, 3 failed verification).
// Throws validation_error / construction_error on bad inputs.
int dispatch(const JobFile& job, const CliOptions& opt);

// Full command-line entry point: flag parsing, job loading, error mapping
// (validation 1, construction 2, verification 3).
int run_cli(int argc, char** argv);

}  // namespace bf
