#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace adaptlab {

// Rows are samples. Row-major so in-memory layout matches the on-disk
// row-major float blocks.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or violated precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Incompatible matrix/vector dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed on-disk payload (bad magic, bad version, truncation, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A file declaring zero rows. Empty datasets have no metric semantics.
class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment or stage configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// SplitMix64 finalizer. Used for deriving independent seed streams.
std::uint64_t splitmix64(std::uint64_t x);

// Derives a child seed from (seed, salt). Children with distinct salts are
// decorrelated, so adding a consumer never shifts another consumer's stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// FNV-1a 64-bit, used for stable text digests (protocol names, configs).
std::uint64_t fnv1a64(std::string_view text);

}  // namespace adaptlab
