#include "adaptlab/results.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace adaptlab::harness {

namespace {

std::string format_metric(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::optional<ResultRow> parse_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) {
    fields.push_back(field);
  }
  if (fields.size() != 9) {
    return std::nullopt;
  }
  try {
    ResultRow row;
    row.protocol = fields[0];
    row.seed = std::stoull(fields[1]);
    row.mca = std::stod(fields[2]);
    row.rmse = std::stod(fields[3]);
    row.auroc_mean = std::stod(fields[4]);
    row.id_acc = std::stod(fields[5]);
    row.ood_acc = std::stod(fields[6]);
    row.wall_time_s = std::stod(fields[7]);
    row.config_hash = fields[8];
    return row;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

std::string format_result_row(const ResultRow& row) {
  std::string line = row.protocol;
  line += ',';
  line += std::to_string(row.seed);
  for (double value : {row.mca, row.rmse, row.auroc_mean, row.id_acc, row.ood_acc}) {
    line += ',';
    line += format_metric(value);
  }
  char wall[32];
  std::snprintf(wall, sizeof(wall), "%.3f", row.wall_time_s);
  line += ',';
  line += wall;
  line += ',';
  line += row.config_hash;
  return line;
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open results file '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("results file '" + path.string() + "' is empty");
  }
  if (line != kResultsHeader) {
    throw FormatError("results file '" + path.string() + "' has an unexpected header");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    if (auto row = parse_row(line)) {
      rows.push_back(std::move(*row));
    }
  }
  return rows;
}

}  // namespace adaptlab::harness
