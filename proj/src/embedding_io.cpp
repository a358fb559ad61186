#include "adaptlab/embedding_io.hpp"

#include <limits>

#include "binary_io.hpp"

namespace adaptlab {

namespace {

constexpr char kMagic[4] = {'A', 'E', 'M', 'B'};
constexpr std::uint32_t kVersion = 1;

Dataset read_payload(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  char magic[4] = {};
  if (!in.read(magic, 4)) {
    throw FormatError("truncated header (magic) in '" + path.string() + "'");
  }
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("bad magic in '" + path.string() + "'");
  }
  std::uint32_t version = 0, n = 0, d = 0, c = 0;
  if (!detail::get_u32(in, version) || !detail::get_u32(in, n) ||
      !detail::get_u32(in, d) || !detail::get_u32(in, c)) {
    throw FormatError("truncated header in '" + path.string() + "'");
  }
  if (version != kVersion) {
    throw FormatError("bad version " + std::to_string(version) + " in '" +
                      path.string() + "'");
  }
  if (n == 0) {
    throw EmptyDatasetError("empty dataset (n = 0) in '" + path.string() + "'");
  }
  if (d == 0) {
    throw FormatError("bad feature dimension (d = 0) in '" + path.string() + "'");
  }

  Dataset dataset;
  dataset.num_classes = static_cast<int>(c);
  dataset.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) {
      float v = 0.0f;
      if (!detail::get_f32(in, v)) {
        throw FormatError("truncated feature block in '" + path.string() + "'");
      }
      if (!std::isfinite(v)) {
        throw FormatError("non-finite feature value in '" + path.string() + "'");
      }
      dataset.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  if (c > 0) {
    dataset.labels.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      std::uint32_t y = 0;
      if (!detail::get_u32(in, y)) {
        throw FormatError("truncated label block in '" + path.string() + "'");
      }
      if (y >= c) {
        throw FormatError("label out of range in '" + path.string() + "'");
      }
      dataset.labels.push_back(static_cast<std::int32_t>(y));
    }
  }
  // Strict framing: anything after the declared payload is an error.
  char extra = 0;
  if (in.read(&extra, 1)) {
    throw FormatError("trailing bytes after payload in '" + path.string() + "'");
  }
  return dataset;
}

}  // namespace

Dataset read_embedding_file(const std::filesystem::path& path) {
  Dataset dataset = read_payload(path);
  dataset.name = path.stem().string();
  dataset.role = dataset.num_classes == 0 ? Role::anomaly : Role::id_train;
  dataset.validate();
  return dataset;
}

Dataset read_embedding_file(const std::filesystem::path& path,
                            const DatasetMeta& meta) {
  Dataset dataset = read_payload(path);
  const bool stored_anomaly = dataset.num_classes == 0;
  if (stored_anomaly != (meta.role == Role::anomaly)) {
    throw ArgumentError("role '" + role_to_string(meta.role) +
                        "' does not match the stored payload of '" +
                        path.string() + "'");
  }
  dataset.name = meta.name;
  dataset.role = meta.role;
  dataset.corruption = meta.corruption;
  dataset.validate();
  return dataset;
}

void write_embedding_file(const Dataset& dataset,
                          const std::filesystem::path& path) {
  dataset.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out.write(kMagic, 4);
  detail::put_u32(out, kVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(dataset.rows()));
  detail::put_u32(out, static_cast<std::uint32_t>(dataset.dim()));
  detail::put_u32(out, static_cast<std::uint32_t>(dataset.num_classes));
  for (Eigen::Index i = 0; i < dataset.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < dataset.features.cols(); ++j) {
      detail::put_f32(out, dataset.features(i, j));
    }
  }
  for (std::int32_t y : dataset.labels) {
    detail::put_u32(out, static_cast<std::uint32_t>(y));
  }
  out.flush();
  if (!out) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

}  // namespace adaptlab
