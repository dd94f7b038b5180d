#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "s2srl/config.hpp"

namespace s2srl {

/// A stage was run before the stage it depends on, or its inputs disagree.
struct StageError : ConfigError {
  using ConfigError::ConfigError;
};

// Exit codes of run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;

/// Files every stage reads from and writes to inside the work directory.
struct WorkdirLayout {
  std::filesystem::path dir;

  std::filesystem::path corpus() const { return dir / "corpus.txt"; }
  std::filesystem::path vocab() const { return dir / "vocab.txt"; }
  std::filesystem::path mle() const { return dir / "mle.ckpt"; }
  std::filesystem::path backward() const { return dir / "backward.ckpt"; }
  std::filesystem::path mi() const { return dir / "mi.ckpt"; }
  std::filesystem::path rl() const { return dir / "rl.ckpt"; }
};

struct ManifestEntry {
  std::string stage;  // mle | backward | mi | rl
  std::filesystem::path path;
  bool present = false;
  std::uint64_t vocab_hash = 0;
};

struct Manifest {
  std::optional<std::uint64_t> vocab_hash;  // of vocab.txt, when present
  std::vector<ManifestEntry> stages;        // always the four stages, in pipeline order

  const ManifestEntry& at(const std::string& stage) const;
};

/// Which stage checkpoints exist and which vocab they were built on. Throws
/// StageError listing every checkpoint whose vocab hash disagrees.
Manifest pipeline_manifest(const std::filesystem::path& workdir);

/// Runs one subcommand. `args` excludes the program name. Errors are reported
/// as a single `error: ...` line on `err`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace s2srl
