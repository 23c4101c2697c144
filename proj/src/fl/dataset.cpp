#include "wqfl/fl/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace wqfl::fl {
namespace {

class GzFile {
 public:
  explicit GzFile(const std::filesystem::path& path) : path_(path.string()) {
    file_ = gzopen(path_.c_str(), "rb");
    if (!file_) throw std::runtime_error("cannot open " + path_);
  }
  ~GzFile() { gzclose(file_); }
  GzFile(const GzFile&) = delete;
  GzFile& operator=(const GzFile&) = delete;

  void read(void* dst, std::size_t n) {
    auto* out = static_cast<unsigned char*>(dst);
    while (n > 0) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
      const int got = gzread(file_, out, chunk);
      if (got <= 0) throw std::runtime_error("truncated IDX file " + path_);
      out += got;
      n -= static_cast<std::size_t>(got);
    }
  }

  std::uint32_t read_u32() {
    std::array<unsigned char, 4> b{};
    read(b.data(), b.size());
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
  }

 private:
  std::string path_;
  gzFile file_ = nullptr;
};

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.inputs.resize(inputs.rows(), static_cast<Eigen::Index>(indices.size()));
  out.labels.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= size()) throw std::out_of_range("sample index out of range");
    out.inputs.col(static_cast<Eigen::Index>(k)) = inputs.col(static_cast<Eigen::Index>(indices[k]));
    out.labels.push_back(labels[indices[k]]);
  }
  return out;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t limit) {
  GzFile img(images);
  if (img.read_u32() != 0x00000803u) throw std::runtime_error("bad image magic in " + images.string());
  const std::size_t count = img.read_u32();
  const std::size_t rows = img.read_u32();
  const std::size_t cols = img.read_u32();

  GzFile lab(labels);
  if (lab.read_u32() != 0x00000801u) throw std::runtime_error("bad label magic in " + labels.string());
  if (lab.read_u32() != count) throw std::runtime_error("image and label counts differ");

  const std::size_t n = limit > 0 ? std::min(limit, count) : count;
  const std::size_t dim = rows * cols;
  std::vector<unsigned char> pixels(n * dim);
  std::vector<unsigned char> raw_labels(n);
  img.read(pixels.data(), pixels.size());
  lab.read(raw_labels.data(), raw_labels.size());

  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t j = 0; j < dim; ++j) {
      out.inputs(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s)) = pixels[s * dim + j] / 255.0;
    }
  }
  out.labels.assign(raw_labels.begin(), raw_labels.end());
  int top = 0;
  for (int y : out.labels) top = std::max(top, y);
  out.num_classes = std::max(10, top + 1);
  return out;
}

Dataset load_mnist(const std::filesystem::path& dir, bool train, std::size_t limit) {
  const std::string prefix = train ? "train" : "t10k";
  auto find = [&](const std::string& stem) {
    for (const auto& name : {stem + ".gz", stem}) {
      if (std::filesystem::exists(dir / name)) return dir / name;
    }
    throw std::runtime_error("MNIST file " + stem + " not found in " + dir.string());
  };
  return load_idx(find(prefix + "-images-idx3-ubyte"), find(prefix + "-labels-idx1-ubyte"), limit);
}

Dataset make_synthetic(const SyntheticSpec& spec, std::size_t n, Rng& rng) {
  if (spec.dim < 1 || spec.classes < 2) throw std::invalid_argument("synthetic data needs dim >= 1, classes >= 2");
  if (!(spec.noise >= 0.0)) throw std::invalid_argument("noise must be >= 0");
  Rng centre_rng = derive_rng(spec.seed, Stream::dataset, {0});
  Eigen::MatrixXd centres(spec.dim, spec.classes);
  for (int c = 0; c < spec.classes; ++c) {
    for (int j = 0; j < spec.dim; ++j) centres(j, c) = uniform01(centre_rng);
  }

  Dataset out;
  out.num_classes = spec.classes;
  out.inputs.resize(spec.dim, static_cast<Eigen::Index>(n));
  out.labels.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    const int c = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(spec.classes)));
    out.labels[s] = c;
    for (int j = 0; j < spec.dim; ++j) {
      out.inputs(j, static_cast<Eigen::Index>(s)) = centres(j, c) + spec.noise * standard_normal(rng);
    }
  }
  return out;
}

std::vector<DataShard> partition(const Dataset& data, int n_users, const PartitionSpec& spec,
                                 Rng& rng) {
  if (n_users < 1) throw std::invalid_argument("need at least one user");
  if (spec.samples_per_user < 1) throw std::invalid_argument("samples_per_user must be >= 1");
  const std::size_t per_user = spec.samples_per_user;
  const std::size_t total = per_user * static_cast<std::size_t>(n_users);
  if (total > data.size()) {
    throw std::invalid_argument("dataset has " + std::to_string(data.size()) + " samples, " +
                                std::to_string(total) + " needed");
  }

  std::vector<std::vector<std::size_t>> owned(n_users);
  if (spec.mode == PartitionMode::iid) {
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    shuffle(idx, rng);
    for (int n = 0; n < n_users; ++n) {
      owned[n].assign(idx.begin() + n * per_user, idx.begin() + (n + 1) * per_user);
    }
  } else {
    const int classes = data.num_classes;
    const int k = spec.labels_per_user;
    if (k < 1 || k > classes) throw std::invalid_argument("labels_per_user must lie in [1, classes]");
    if (per_user < static_cast<std::size_t>(k)) {
      throw std::invalid_argument("samples_per_user must be >= labels_per_user");
    }
    std::vector<std::vector<std::size_t>> pool(classes);
    for (std::size_t s = 0; s < data.size(); ++s) pool[data.labels[s]].push_back(s);
    for (auto& p : pool) shuffle(p, rng);
    std::vector<std::size_t> next(classes, 0);
    for (int n = 0; n < n_users; ++n) {
      for (int j = 0; j < k; ++j) {
        const int label = (n + j) % classes;
        const std::size_t take = per_user / k + (static_cast<std::size_t>(j) < per_user % k ? 1 : 0);
        if (next[label] + take > pool[label].size()) {
          throw std::invalid_argument("not enough samples of label " + std::to_string(label));
        }
        auto first = pool[label].begin() + static_cast<std::ptrdiff_t>(next[label]);
        owned[n].insert(owned[n].end(), first, first + static_cast<std::ptrdiff_t>(take));
        next[label] += take;
      }
    }
  }

  std::vector<DataShard> shards(n_users);
  for (int n = 0; n < n_users; ++n) {
    shards[n].owner = n;
    shards[n].data = data.subset(owned[n]);
    shards[n].source_indices = std::move(owned[n]);
  }
  return shards;
}

std::vector<double> shard_weights(std::span<const DataShard> shards) {
  double total = 0.0;
  for (const auto& s : shards) total += static_cast<double>(s.data.size());
  if (!(total > 0.0)) throw std::invalid_argument("shards are empty");
  std::vector<double> p;
  for (const auto& s : shards) p.push_back(static_cast<double>(s.data.size()) / total);
  return p;
}

}  // namespace wqfl::fl
