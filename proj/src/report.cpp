#include "adaptlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace adaptlab::harness {

namespace {

struct ProtocolMean {
  std::string protocol;
  // mca, rmse, auroc, id_acc, ood_acc in table column order
  double metrics[5] = {0, 0, 0, 0, 0};
};

bool contains_token(const std::string& name, const std::string& token) {
  return name.find(token) != std::string::npos;
}

int group_of(const std::string& protocol) {
  if (contains_token(protocol, "vat")) {
    return 2;
  }
  for (const char* token : {"mixup", "cutmix", "noise", "cutout"}) {
    if (contains_token(protocol, token)) {
      return 1;
    }
  }
  return 0;
}

std::string format_value(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value);
  return buffer;
}

void append_table(std::string& out, const std::string& title,
                  const std::vector<ProtocolMean>& rows) {
  out += "## " + title + "\n\n";
  out += "| Protocol | mCA | RMSE ↓ | AUROC | ID Acc. | OOD Acc. |\n";
  out += "|:---|---:|---:|---:|---:|---:|\n";

  // Column ranking: RMSE (index 1) is better when lower.
  double best[5];
  double second[5];
  for (int col = 0; col < 5; ++col) {
    const bool lower_better = col == 1;
    std::vector<double> values;
    values.reserve(rows.size());
    for (const ProtocolMean& row : rows) {
      values.push_back(row.metrics[col]);
    }
    std::sort(values.begin(), values.end());
    if (lower_better) {
      best[col] = values.front();
    } else {
      std::reverse(values.begin(), values.end());
      best[col] = values.front();
    }
    second[col] = std::numeric_limits<double>::quiet_NaN();
    for (double v : values) {
      if (v != best[col]) {
        second[col] = v;
        break;
      }
    }
  }

  for (const ProtocolMean& row : rows) {
    out += "| " + row.protocol + " |";
    for (int col = 0; col < 5; ++col) {
      const std::string text = format_value(row.metrics[col]);
      if (row.metrics[col] == best[col]) {
        out += " **" + text + "** |";
      } else if (!std::isnan(second[col]) && row.metrics[col] == second[col]) {
        out += " <u>" + text + "</u> |";
      } else {
        out += " " + text + " |";
      }
    }
    out += "\n";
  }
  out += "\n";
}

}  // namespace

std::string generate_markdown_report(const std::vector<ResultRow>& rows) {
  if (rows.empty()) {
    throw ArgumentError("report: no result rows");
  }

  // Per-protocol seed means, first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ResultRow*>> by_protocol;
  for (const ResultRow& row : rows) {
    auto [it, inserted] = by_protocol.try_emplace(row.protocol);
    if (inserted) {
      order.push_back(row.protocol);
    }
    it->second.push_back(&row);
  }

  std::vector<ProtocolMean> means;
  means.reserve(order.size());
  for (const std::string& protocol : order) {
    const auto& cells = by_protocol[protocol];
    ProtocolMean mean;
    mean.protocol = protocol;
    for (const ResultRow* row : cells) {
      mean.metrics[0] += row->mca;
      mean.metrics[1] += row->rmse;
      mean.metrics[2] += row->auroc_mean;
      mean.metrics[3] += row->id_acc;
      mean.metrics[4] += row->ood_acc;
    }
    for (double& value : mean.metrics) {
      value /= static_cast<double>(cells.size());
    }
    means.push_back(std::move(mean));
  }

  const char* titles[3] = {"Base protocols", "Augmented protocols",
                           "Hardness-promoting protocols"};
  std::string out = "# Adaptation protocol report\n\n";
  for (int group = 0; group < 3; ++group) {
    std::vector<ProtocolMean> members;
    for (const ProtocolMean& mean : means) {
      if (group_of(mean.protocol) == group) {
        members.push_back(mean);
      }
    }
    if (!members.empty()) {
      append_table(out, titles[group], members);
    }
  }
  return out;
}

}  // namespace adaptlab::harness
