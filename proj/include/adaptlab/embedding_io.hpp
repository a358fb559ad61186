#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "adaptlab/dataset.hpp"

namespace adaptlab {

// AEMB container, little-endian throughout:
//   magic "AEMB" (4 bytes), version u32 = 1, n u32, d u32, C u32,
//   n*d features as float32 row-major, n labels as u32.
// Anomaly files use C = 0 and omit the label block.
//
// The container stores only the payload; name, role and corruption tag are
// out-of-band metadata (the benchmark manifest carries them).

struct DatasetMeta {
  std::string name;
  Role role = Role::id_train;
  std::optional<CorruptionTag> corruption;
};

// Reads with default metadata: role anomaly when C == 0, id_train otherwise,
// name taken from the file stem.
Dataset read_embedding_file(const std::filesystem::path& path);

// Reads and applies the supplied metadata. The role must be consistent with
// the stored payload (anomaly iff C == 0).
Dataset read_embedding_file(const std::filesystem::path& path,
                            const DatasetMeta& meta);

// Validates the dataset, then emits the bit-exact layout above. Identical
// datasets produce byte-identical files. Nothing is written on a failed
// validation.
void write_embedding_file(const Dataset& dataset,
                          const std::filesystem::path& path);

}  // namespace adaptlab
