#pragma once

// Command-line front end: subcommands spectrum, sprime, solve, measure, mc, scale.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "toruslab/harness.hpp"
#include "toruslab/sprime.hpp"

namespace toruslab::cli {

/// Runs one invocation (arguments without the program name) and returns the
/// process exit status. Failures print a JSON error record to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Spectrum cache directory: $TORUSLAB_CACHE, else ".toruslab-cache".
std::filesystem::path default_cache_dir();

/// Output directory `root/name` populated through a staging directory and
/// renamed into place once complete. An existing directory is never touched.
class Artifact {
 public:
  Artifact(std::filesystem::path root, std::string name);

  const std::filesystem::path& path() const { return final_; }
  /// True when a complete artifact with this name already exists.
  bool up_to_date() const;

  void add(std::string file, std::string content);
  /// Writes every file plus manifest.json (with an "outputs" digest list).
  void commit(nlohmann::json manifest);

 private:
  std::filesystem::path root_;
  std::filesystem::path final_;
  std::vector<std::pair<std::string, std::string>> files_;
};

struct ErrPoint {
  Norm m_k = 0;
  Quantiles err;
};

struct PlotInputs {
  std::vector<ErrPoint> err;
  std::optional<SPrimeWindow> window;
  std::vector<EventFrequency> events;
};

/// Tidy CSV series: err_vs_lambda, density_vs_window or freq_vs_c0. Missing
/// inputs give a header-only file; unknown kinds are a validation error.
void emit_plotdata(const std::string& kind, const PlotInputs& in, std::ostream& out);

}  // namespace toruslab::cli
