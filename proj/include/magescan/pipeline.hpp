#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "magescan/config.hpp"

namespace magescan {

// One pipeline stage per CLI subcommand. Every stage reads its inputs from
// files and writes its artifacts under cfg.out_dir, so `pipeline` is exactly
// the composition of the stages and re-runs overwrite byte-identically.
void run_gen(const RunConfig& cfg);
void run_ingest(const RunConfig& cfg);
void run_dfa(const RunConfig& cfg);
void run_features(const RunConfig& cfg);
void run_train(const RunConfig& cfg);
void run_attack(const RunConfig& cfg);
void run_explain(const RunConfig& cfg);
void run_pipeline(const RunConfig& cfg);

// Serializes ownership of the output directory (lock file). Throws IoError
// when another process holds the lock.
class OutputDirLock {
 public:
  explicit OutputDirLock(const std::filesystem::path& out_dir);
  ~OutputDirLock();
  OutputDirLock(const OutputDirLock&) = delete;
  OutputDirLock& operator=(const OutputDirLock&) = delete;

 private:
  std::filesystem::path lock_path_;
  bool held_ = false;
};

}  // namespace magescan
