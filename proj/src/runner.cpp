#include "adaptlab/runner.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "adaptlab/embedding_io.hpp"
#include "adaptlab/metrics.hpp"
#include "adaptlab/report.hpp"
#include "adaptlab/results.hpp"

namespace adaptlab::harness {

namespace {

constexpr std::uint64_t kTrunkSeedSalt = 0xB001;
constexpr std::uint64_t kHeadSeedSalt = 0xB002;

struct ManifestRow {
  std::string role;
  std::string family = "-";
  int severity = 0;
  std::string path;
  int n = 0;
  int d = 0;
  int c = 0;
  std::uint64_t seed = 0;
};

std::string manifest_line(const ManifestRow& row) {
  std::ostringstream out;
  out << row.role << '\t' << row.family << '\t' << row.severity << '\t'
      << row.path << '\t' << row.n << '\t' << row.d << '\t' << row.c << '\t'
      << row.seed;
  return out.str();
}

ManifestRow parse_manifest_line(const std::string& line,
                                const std::filesystem::path& manifest) {
  std::istringstream in(line);
  ManifestRow row;
  if (!(in >> row.role >> row.family >> row.severity >> row.path >> row.n >>
        row.d >> row.c >> row.seed)) {
    throw FormatError("malformed manifest line in '" + manifest.string() +
                      "': " + line);
  }
  return row;
}

ManifestRow dataset_manifest_row(const Dataset& dataset, const std::string& role,
                                 const std::string& path, std::uint64_t seed) {
  ManifestRow row;
  row.role = role;
  if (dataset.corruption.has_value()) {
    row.family = dataset.corruption->family;
    row.severity = dataset.corruption->severity;
  }
  row.path = path;
  row.n = dataset.rows();
  row.d = dataset.dim();
  row.c = dataset.num_classes;
  row.seed = seed;
  return row;
}

}  // namespace

Benchmark load_benchmark(const std::filesystem::path& dir) {
  const std::filesystem::path manifest = dir / "manifest.tsv";
  std::ifstream in(manifest);
  if (!in) {
    throw ConfigError("benchmark manifest not found: '" + manifest.string() + "'");
  }

  Benchmark bench;
  bool have_id_train = false, have_id_test = false, have_ood = false,
       have_trunk = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const ManifestRow row = parse_manifest_line(line, manifest);
    const std::filesystem::path path = dir / row.path;
    if (row.role == "trunk") {
      bench.trunk = nn::load_model(path);
      have_trunk = true;
      continue;
    }
    if (row.role == "source") {
      continue;  // not needed at run time
    }
    DatasetMeta meta;
    meta.name = path.stem().string();
    meta.role = role_from_string(row.role);
    if (meta.role == Role::corrupted) {
      meta.corruption = CorruptionTag{row.family, row.severity};
    }
    Dataset dataset = read_embedding_file(path, meta);
    switch (meta.role) {
      case Role::id_train:
        bench.id_train = std::move(dataset);
        have_id_train = true;
        break;
      case Role::id_test:
        bench.suite.id_test = std::move(dataset);
        have_id_test = true;
        break;
      case Role::ood_test:
        bench.suite.ood_test = std::move(dataset);
        have_ood = true;
        break;
      case Role::corrupted:
        bench.suite.corrupted.push_back(std::move(dataset));
        break;
      case Role::anomaly:
        bench.suite.anomaly_sets.push_back(std::move(dataset));
        break;
    }
  }
  if (!have_trunk || !have_id_train || !have_id_test || !have_ood) {
    throw ConfigError("benchmark at '" + dir.string() +
                      "' is missing required assets");
  }
  bench.suite.validate();
  return bench;
}

int cmd_synth(const ExperimentConfig& config,
              const std::filesystem::path& out_dir) {
  if (!config.synth_spec.has_value()) {
    throw ConfigError("cmd_synth: config has no dataset.synth block");
  }
  const synth::SynthSpec& spec = *config.synth_spec;
  const synth::SynthTask task = synth::generate_task(spec);
  const nn::Mlp trunk =
      synth::pretrain_trunk(task.source, spec.trunk_widths, spec.pretrain_epochs,
                            mix_seed(spec.seed, kTrunkSeedSalt));

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create benchmark directory '" + out_dir.string() +
                  "': " + ec.message());
  }

  std::vector<ManifestRow> rows;
  auto emit = [&](const Dataset& dataset, const std::string& role,
                  const std::string& filename) {
    write_embedding_file(dataset, out_dir / filename);
    rows.push_back(dataset_manifest_row(dataset, role, filename, spec.seed));
  };

  emit(task.source, "source", "source.aemb");
  emit(task.id_train, "id_train", "id_train.aemb");
  emit(task.suite.id_test, "id_test", "id_test.aemb");
  emit(task.suite.ood_test, "ood_test", "ood_test.aemb");
  for (const Dataset& set : task.suite.corrupted) {
    emit(set, "corrupted",
         "corrupt_" + set.corruption->family + "_s" +
             std::to_string(set.corruption->severity) + ".aemb");
  }
  for (const Dataset& set : task.suite.anomaly_sets) {
    emit(set, "anomaly", set.name + ".aemb");
  }

  nn::save_model(trunk, out_dir / "trunk.amdl");
  ManifestRow trunk_row;
  trunk_row.role = "trunk";
  trunk_row.path = "trunk.amdl";
  trunk_row.d = trunk.input_dim();
  trunk_row.c = trunk.output_dim();
  trunk_row.seed = spec.seed;
  rows.push_back(trunk_row);

  std::ofstream manifest(out_dir / "manifest.tsv", std::ios::trunc);
  if (!manifest) {
    throw IoError("cannot write manifest in '" + out_dir.string() + "'");
  }
  manifest << "# role\tfamily\tseverity\tpath\tn\td\tC\tseed\n";
  for (const ManifestRow& row : rows) {
    manifest << manifest_line(row) << '\n';
  }
  manifest.flush();
  if (!manifest) {
    throw IoError("failed writing manifest in '" + out_dir.string() + "'");
  }
  return 0;
}

int cmd_run(const ExperimentConfig& config,
            const std::filesystem::path& bench_dir,
            const std::filesystem::path& out_csv, int workers) {
  if (workers < 1) {
    throw ConfigError("cmd_run: workers must be at least 1");
  }
  Benchmark bench = load_benchmark(bench_dir);

  if (!config.metrics.anomaly_sets.empty()) {
    std::vector<Dataset> selected;
    for (const std::string& wanted : config.metrics.anomaly_sets) {
      bool found = false;
      for (const Dataset& set : bench.suite.anomaly_sets) {
        if (set.name == wanted) {
          selected.push_back(set);
          found = true;
          break;
        }
      }
      if (!found) {
        throw ConfigError("anomaly set '" + wanted + "' not in the benchmark");
      }
    }
    bench.suite.anomaly_sets = std::move(selected);
    bench.suite.validate();
  }

  struct Cell {
    const ProtocolEntry* entry;
    std::uint64_t seed;
    std::string hash;
  };
  std::vector<Cell> cells;
  for (const ProtocolEntry& entry : config.protocols) {
    entry.resolve();  // config errors before any training starts
    const std::string hash = cell_config_hash(config, entry);
    for (std::uint64_t seed : config.seeds) {
      cells.push_back(Cell{&entry, seed, hash});
    }
  }

  std::set<std::string> done;
  const bool existing = std::filesystem::exists(out_csv);
  if (existing) {
    for (const ResultRow& row : read_results_csv(out_csv)) {
      done.insert(row.protocol + "|" + std::to_string(row.seed) + "|" +
                  row.config_hash);
    }
  }

  std::ofstream out(out_csv, std::ios::app);
  if (!out) {
    throw IoError("cannot open results file '" + out_csv.string() + "'");
  }
  if (!existing) {
    out << kResultsHeader << '\n';
    out.flush();
  }

  enum class SlotState { pending, skipped, computed };
  struct Slot {
    SlotState state = SlotState::pending;
    ResultRow row;
  };
  std::vector<Slot> slots(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex flush_mutex;
  std::size_t flushed = 0;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto compute_cell = [&](const Cell& cell) {
    protocols::ProtocolSpec spec = cell.entry->resolve();
    spec.seed = cell_seed(cell.seed, cell.entry->name);

    const auto started = std::chrono::steady_clock::now();
    const int feature_width = bench.trunk.output_dim();
    const nn::Mlp head_init = nn::init_params(
        {feature_width, bench.suite.num_classes()}, bench.trunk.activation,
        nn::InitScheme::fan_in_uniform, mix_seed(spec.seed, kHeadSeedSalt));
    protocols::AdaptedModel model(bench.trunk, head_init.layers[0]);
    auto [trained, log] = protocols::run_protocol(spec, std::move(model),
                                                  bench.id_train);
    (void)log;
    const metrics::MetricsReport report =
        metrics::evaluate_all(trained.net(), bench.suite, config.metrics.bins);
    const auto finished = std::chrono::steady_clock::now();

    ResultRow row;
    row.protocol = cell.entry->name;
    row.seed = cell.seed;
    row.mca = report.mca;
    row.rmse = report.rmse_calibration;
    row.auroc_mean = report.auroc_mean;
    row.id_acc = report.id_acc;
    row.ood_acc = report.ood_acc;
    row.wall_time_s =
        std::chrono::duration<double>(finished - started).count();
    row.config_hash = cell.hash;
    return row;
  };

  auto worker = [&]() {
    for (;;) {
      const std::size_t index = next.fetch_add(1);
      if (index >= cells.size()) {
        return;
      }
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure) {
          return;
        }
      }
      const Cell& cell = cells[index];
      Slot slot;
      try {
        const std::string key = cell.entry->name + "|" +
                                std::to_string(cell.seed) + "|" + cell.hash;
        if (done.count(key) > 0) {
          slot.state = SlotState::skipped;
        } else {
          slot.row = compute_cell(cell);
          slot.state = SlotState::computed;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        return;
      }
      // Rows reach the file in cell order regardless of completion order.
      std::lock_guard<std::mutex> lock(flush_mutex);
      slots[index] = std::move(slot);
      while (flushed < slots.size() &&
             slots[flushed].state != SlotState::pending) {
        if (slots[flushed].state == SlotState::computed) {
          out << format_result_row(slots[flushed].row) << '\n';
          out.flush();
        }
        ++flushed;
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int count = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(workers), cells.size()));
    pool.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      pool.emplace_back(worker);
    }
    for (std::thread& thread : pool) {
      thread.join();
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
  if (!out) {
    throw IoError("failed writing results to '" + out_csv.string() + "'");
  }
  return 0;
}

int cmd_report(const std::filesystem::path& in_csv,
               const std::filesystem::path& out_md) {
  const std::vector<ResultRow> rows = read_results_csv(in_csv);
  const std::string markdown = generate_markdown_report(rows);
  std::ofstream out(out_md, std::ios::trunc);
  if (!out) {
    throw IoError("cannot open report file '" + out_md.string() + "'");
  }
  out << markdown;
  out.flush();
  if (!out) {
    throw IoError("failed writing report '" + out_md.string() + "'");
  }
  return 0;
}

int cmd_gradcheck(std::ostream& out, const gradcheck::Options& options) {
  const std::vector<gradcheck::CheckLine> lines = gradcheck::run_battery(options);
  bool all_pass = true;
  for (const gradcheck::CheckLine& line : lines) {
    char buffer[160];
    std::snprintf(buffer, sizeof(buffer), "[%s] %-22s max_rel_err=%.3e",
                  line.pass ? "PASS" : "FAIL", line.name.c_str(),
                  line.max_rel_err);
    out << buffer << '\n';
    all_pass = all_pass && line.pass;
  }
  out << (all_pass ? "gradcheck: all checks passed"
                   : "gradcheck: FAILURES detected")
      << '\n';
  return all_pass ? 0 : 3;
}

}  // namespace adaptlab::harness
