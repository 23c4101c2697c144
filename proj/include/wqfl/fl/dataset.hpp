#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wqfl/rng.hpp"

namespace wqfl::fl {

/// Labelled samples stored one per column.
struct Dataset {
  Eigen::MatrixXd inputs;  // dim x size
  std::vector<int> labels;
  int num_classes = 10;

  std::size_t size() const { return labels.size(); }
  int dim() const { return static_cast<int>(inputs.rows()); }
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// A user's local data. Shards of one partition never share a sample.
struct DataShard {
  int owner = 0;
  Dataset data;
  std::vector<std::size_t> source_indices;  // positions in the partitioned dataset
};

/// Reads an IDX image file (magic 0x00000803) and its label file (magic
/// 0x00000801). Gzip-compressed and raw files are both accepted. Pixels are
/// scaled to [0, 1]. `limit` > 0 keeps only the first `limit` samples.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t limit = 0);

/// Loads the MNIST training or test split from `dir`, looking for the usual
/// file names with or without a ".gz" suffix.
Dataset load_mnist(const std::filesystem::path& dir, bool train, std::size_t limit = 0);

/// Gaussian class blobs. Class centres depend only on `seed`, so train and
/// test sets drawn with the same spec share them.
struct SyntheticSpec {
  int dim = 784;
  int classes = 10;
  double noise = 1.5;  // per-coordinate standard deviation
  std::uint64_t seed = 1;
};

Dataset make_synthetic(const SyntheticSpec& spec, std::size_t n, Rng& rng);

enum class PartitionMode { iid, noniid };

struct PartitionSpec {
  PartitionMode mode = PartitionMode::iid;
  int labels_per_user = 5;
  std::size_t samples_per_user = 200;
};

/// Splits the dataset into disjoint shards.
///
/// IID: a random permutation cut into equal shards. Non-IID: user n holds the
/// labels n, n+1, ..., n+labels_per_user-1 (mod classes) with an equal share
/// of samples from each, taken from per-label shuffled pools.
/// Throws std::invalid_argument when the dataset is too small.
std::vector<DataShard> partition(const Dataset& data, int n_users, const PartitionSpec& spec,
                                 Rng& rng);

/// Aggregation weights p_n = |shard_n| / sum |shard|.
std::vector<double> shard_weights(std::span<const DataShard> shards);

}  // namespace wqfl::fl
