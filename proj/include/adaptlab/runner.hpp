#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "adaptlab/config.hpp"
#include "adaptlab/dataset.hpp"
#include "adaptlab/gradcheck.hpp"
#include "adaptlab/nn.hpp"

namespace adaptlab::harness {

struct Benchmark {
  Dataset id_train;
  EvalSuite suite;
  nn::Mlp trunk;
};

// Reads a benchmark directory written by cmd_synth (manifest.tsv plus the
// embedding and checkpoint files it lists).
Benchmark load_benchmark(const std::filesystem::path& dir);

// Generates the synthetic benchmark and writes every dataset, the pretrained
// trunk and the manifest into out_dir. Deterministic: rerunning with the same
// config overwrites byte-identically.
int cmd_synth(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// Executes every (protocol, seed) cell: load trunk, run the protocol, run the
// full evaluation, append one CSV row. Cells already present in the CSV under
// the same config hash are skipped, so interrupted runs resume. Rows are
// flushed in cell order regardless of worker count.
int cmd_run(const ExperimentConfig& config, const std::filesystem::path& bench_dir,
            const std::filesystem::path& out_csv, int workers);

// Renders the Markdown report from a results CSV.
int cmd_report(const std::filesystem::path& in_csv,
               const std::filesystem::path& out_md);

// Runs the finite-difference verification battery, one line per check.
// Returns 0 when everything passes, 3 otherwise.
int cmd_gradcheck(std::ostream& out, const gradcheck::Options& options = {});

}  // namespace adaptlab::harness
