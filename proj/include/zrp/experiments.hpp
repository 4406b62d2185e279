#pragma once

#include <map>
#include <string>

#include "zrp/config.hpp"

namespace zrp {

struct ExperimentResult {
  bool pass = true;
  std::string summary;
  std::map<std::string, double> metrics;
};

// Worker count: requested (when > 0), capped by the ZRP_THREADS environment
// variable; defaults to the hardware concurrency.
int effective_threads(int requested);

// Runs one experiment; writes its CSV artifacts and manifest.json under
// out_dir.  The parallelism degree never changes the output bytes.
ExperimentResult run_experiment(Config cfg, const std::string& experiment,
                                const std::string& out_dir, int threads = 0);

extern const char* const kVersion;

}  // namespace zrp
