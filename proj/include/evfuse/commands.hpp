#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evfuse/config.hpp"

namespace evfuse {

namespace fs = std::filesystem;

// Each command writes a short human report to `log` and throws UsageError,
// FormatError or std::runtime_error on failure.

/// Stack one event file into a tensor.
void cmd_stack(const fs::path& events, const RunConfig& cfg, const fs::path& out, std::ostream& log);

/// Fuse depth into a stereo pair. Writes `<out>.left.*`, `<out>.right.*`
/// (tensors or event files per output.kind) and `<out>.hints.tensor`.
void cmd_fuse(const fs::path& left, const fs::path& right, const fs::path& depth, const RunConfig& cfg,
              const fs::path& out, std::ostream& log);

/// Match two stack tensors; guided fusion needs a hints tensor.
void cmd_match(const fs::path& left, const fs::path& right, const std::optional<fs::path>& hints,
               const RunConfig& cfg, const fs::path& out, std::ostream& log);

/// Metrics of a disparity tensor against ground truth. Writes an error map
/// when `out` is given.
void cmd_eval(const fs::path& pred, const fs::path& gt, const RunConfig& cfg, const std::optional<fs::path>& out,
              std::ostream& log);

/// Render a synthetic scene into `dir`: left.evt, right.evt, gt.tensor,
/// textureless.tensor and depth.csv.
void cmd_synth(const RunConfig& cfg, const fs::path& dir, std::ostream& log);

/// Run the configured suite; table to `log`, CSV to `csv` when given.
void cmd_bench(const RunConfig& cfg, const std::optional<fs::path>& csv, std::ostream& log);

/// Full command line, returns the process exit status:
/// 0 ok, 1 runtime failure, 2 usage or format error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace evfuse
