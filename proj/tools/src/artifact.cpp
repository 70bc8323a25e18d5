#include <cstdlib>
#include <system_error>
#include <unistd.h>

#include "toruslab/cli.hpp"
#include "toruslab/error.hpp"
#include "toruslab/serialize.hpp"

namespace toruslab::cli {

namespace fs = std::filesystem;

fs::path default_cache_dir() {
  if (const char* env = std::getenv("TORUSLAB_CACHE"); env && *env) return env;
  return ".toruslab-cache";
}

Artifact::Artifact(fs::path root, std::string name)
    : root_(std::move(root)), final_(root_ / std::move(name)) {}

bool Artifact::up_to_date() const {
  std::error_code ec;
  if (!fs::exists(final_, ec)) return false;
  if (!fs::exists(final_ / "manifest.json", ec)) {
    fail(ErrorKind::Io, final_.string() + " exists but has no manifest; refusing to modify it");
  }
  return true;
}

void Artifact::add(std::string file, std::string content) {
  files_.emplace_back(std::move(file), std::move(content));
}

void Artifact::commit(nlohmann::json manifest) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + root_.string() + ": " + ec.message());
  const auto staging =
      root_ / (".staging-" + final_.filename().string() + "-" + std::to_string(::getpid()));
  fs::remove_all(staging, ec);
  fs::create_directory(staging, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + staging.string() + ": " + ec.message());

  auto outputs = nlohmann::json::array();
  for (const auto& [file, content] : files_) {
    write_file_atomic(staging / file, content);
    outputs.push_back({{"file", file}, {"bytes", content.size()}, {"fnv1a", hex64(fnv1a(content))}});
  }
  manifest["outputs"] = outputs;
  write_file_atomic(staging / "manifest.json", manifest.dump(2) + "\n");

  fs::rename(staging, final_, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove_all(staging, ignore);
    // Lost a race against an identical run.
    if (fs::exists(final_ / "manifest.json", ignore)) return;
    fail(ErrorKind::Io, "cannot move " + staging.string() + " into place: " + ec.message());
  }
}

}  // namespace toruslab::cli
