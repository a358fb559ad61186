#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "adaptlab/common.hpp"

namespace adaptlab::harness {

inline constexpr std::string_view kResultsHeader =
    "protocol,seed,mca,rmse,auroc_mean,id_acc,ood_acc,wall_time_s,config_hash";

// One (protocol, seed) cell of a run.
struct ResultRow {
  std::string protocol;
  std::uint64_t seed = 0;
  double mca = 0.0;
  double rmse = 0.0;
  double auroc_mean = 0.0;
  double id_acc = 0.0;
  double ood_acc = 0.0;
  double wall_time_s = 0.0;
  std::string config_hash;
};

std::string format_result_row(const ResultRow& row);

// Parses the results CSV. The header must match kResultsHeader. A trailing
// line interrupted mid-write is skipped so a restarted run can pick up after
// a crash.
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

}  // namespace adaptlab::harness
