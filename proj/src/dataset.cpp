#include "hflsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "hflsim/csv.hpp"
#include "hflsim/rng.hpp"

namespace hflsim {

std::vector<size_t> Dataset::label_histogram() const {
  std::vector<size_t> h(class_count, 0);
  for (uint8_t y : labels) ++h[y];
  return h;
}

void Dataset::require_consistent() const {
  if (labels.size() != count || images.size() != count * dim)
    throw std::invalid_argument("dataset images/labels sizes disagree");
  for (uint8_t y : labels)
    if (y >= class_count) throw std::invalid_argument("label exceeds class count");
}

namespace {

uint32_t read_be32(std::ifstream& f, const std::string& path, size_t offset) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (f.gcount() != 4)
    throw IdxError(path + ": truncated header at byte offset " + std::to_string(offset));
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 int class_count) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IdxError(images_path + ": cannot open");
  uint32_t magic = read_be32(img, images_path, 0);
  if (magic != 0x00000803)
    throw IdxError(images_path + ": bad image magic 0x" + [&] {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%08x", magic);
      return std::string(buf);
    }() + " at byte offset 0");
  uint32_t count = read_be32(img, images_path, 4);
  uint32_t rows = read_be32(img, images_path, 8);
  uint32_t cols = read_be32(img, images_path, 12);

  std::ifstream lbl(labels_path, std::ios::binary);
  if (!lbl) throw IdxError(labels_path + ": cannot open");
  uint32_t lmagic = read_be32(lbl, labels_path, 0);
  if (lmagic != 0x00000801)
    throw IdxError(labels_path + ": bad label magic at byte offset 0");
  uint32_t lcount = read_be32(lbl, labels_path, 4);
  if (count != lcount)
    throw IdxError(images_path + ": image count " + std::to_string(count) +
                   " != label count " + std::to_string(lcount));

  Dataset ds;
  ds.count = count;
  ds.dim = size_t(rows) * size_t(cols);
  ds.class_count = class_count;
  std::vector<uint8_t> raw(ds.count * ds.dim);
  img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<size_t>(img.gcount()) != raw.size())
    throw IdxError(images_path + ": truncated pixel data at byte offset " +
                   std::to_string(16 + img.gcount()));
  ds.images.resize(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) ds.images[i] = float(raw[i]) / 255.0f;

  ds.labels.resize(ds.count);
  lbl.read(reinterpret_cast<char*>(ds.labels.data()), static_cast<std::streamsize>(ds.count));
  if (static_cast<size_t>(lbl.gcount()) != ds.count)
    throw IdxError(labels_path + ": truncated label data at byte offset " +
                   std::to_string(8 + lbl.gcount()));
  ds.require_consistent();
  return ds;
}

Dataset select_balanced_subset(const Dataset& ds, size_t total, uint64_t seed) {
  ds.require_consistent();
  if (total == 0 || total > ds.count) throw std::invalid_argument("bad subset size");
  const int C = ds.class_count;
  std::vector<std::vector<uint32_t>> by_class(C);
  for (size_t i = 0; i < ds.count; ++i) by_class[ds.labels[i]].push_back(uint32_t(i));

  size_t base = total / C, extra = total % C;
  auto rng = make_rng(seed);
  std::vector<uint32_t> picked;
  for (int c = 0; c < C; ++c) {
    size_t want = base + (size_t(c) < extra ? 1 : 0);
    if (by_class[c].size() < want)
      throw std::invalid_argument("class " + std::to_string(c) + " has only " +
                                  std::to_string(by_class[c].size()) + " samples, need " +
                                  std::to_string(want));
    std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
    picked.insert(picked.end(), by_class[c].begin(), by_class[c].begin() + want);
  }
  std::shuffle(picked.begin(), picked.end(), rng);

  Dataset out;
  out.count = picked.size();
  out.dim = ds.dim;
  out.class_count = C;
  out.images.resize(out.count * out.dim);
  out.labels.resize(out.count);
  for (size_t i = 0; i < picked.size(); ++i) {
    std::copy_n(ds.row(picked[i]), ds.dim, out.images.data() + i * ds.dim);
    out.labels[i] = ds.labels[picked[i]];
  }
  return out;
}

void PartitionSpec::validate() const {
  if (classes_per_worker < 0 || classes_per_worker > 2)
    throw std::invalid_argument("classes_per_worker must be 0 (iid), 1 or 2");
  if (workers == 0) throw std::invalid_argument("need at least one worker");
  if (edges == 0) throw std::invalid_argument("need at least one edge");
  if (synthetic_fraction < 0.0 || synthetic_fraction > 0.25)
    throw std::invalid_argument("synthetic_fraction must lie in [0, 0.25]");
  // disjoint draws need pool >= rho/(1-rho) * partitioned samples, i.e.
  // pool_fraction >= rho; 1/3 covers the full rho range
  if (pool_fraction < 0.0 || pool_fraction > 1.0 / 3.0)
    throw std::invalid_argument("pool_fraction must lie in [0, 1/3]");
  if (pool_fraction < synthetic_fraction)
    throw std::invalid_argument("pool_fraction must be >= synthetic_fraction "
                                "(disjoint draws exhaust a smaller pool)");
  if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
  if (edge_mode == EdgeMode::FromEquilibrium) {
    if (edge_shares.size() != edges)
      throw std::invalid_argument("edge_shares must list one share per edge");
    double sum = 0.0;
    for (double s : edge_shares) {
      if (s < 0.0) throw std::invalid_argument("edge shares must be >= 0");
      sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("edge shares must sum to 1");
  }
}

void ClusterLayout::require_consistent() const {
  std::vector<size_t> sums(edge_sizes.size(), 0);
  for (size_t j = 0; j < worker_to_edge.size(); ++j) sums[worker_to_edge[j]] += worker_sizes[j];
  size_t total = 0;
  for (size_t n = 0; n < edge_sizes.size(); ++n) {
    if (sums[n] != edge_sizes[n]) throw std::invalid_argument("edge size mismatch");
    total += edge_sizes[n];
  }
  if (total != total_size) throw std::invalid_argument("total size mismatch");
}

SyntheticPool build_synthetic_pool(const Dataset& train, double pool_fraction,
                                   double noise_sigma, uint64_t seed) {
  train.require_consistent();
  if (pool_fraction < 0.0 || pool_fraction > 1.0 / 3.0)
    throw std::invalid_argument("pool_fraction must lie in [0, 1/3]");

  const int C = train.class_count;
  SyntheticPool out;
  out.data.dim = train.dim;
  out.data.class_count = C;

  size_t pool_size = static_cast<size_t>(std::llround(pool_fraction * double(train.count)));
  std::vector<std::vector<uint32_t>> by_class(C);
  for (size_t i = 0; i < train.count; ++i) by_class[train.labels[i]].push_back(uint32_t(i));

  auto rng = make_rng(seed);
  std::vector<bool> reserved(train.count, false);
  size_t base = pool_size / C, extra = pool_size % C;
  for (int c = 0; c < C; ++c) {
    size_t want = base + (size_t(c) < extra ? 1 : 0);
    if (by_class[c].size() < want)
      throw std::invalid_argument("pool needs " + std::to_string(want) + " samples of class " +
                                  std::to_string(c) + ", only " +
                                  std::to_string(by_class[c].size()) + " available");
    std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
    for (size_t k = 0; k < want; ++k) {
      uint32_t idx = by_class[c][k];
      reserved[idx] = true;
      out.source_indices.push_back(idx);
    }
  }
  std::sort(out.source_indices.begin(), out.source_indices.end());

  out.data.count = out.source_indices.size();
  out.data.images.resize(out.data.count * train.dim);
  out.data.labels.resize(out.data.count);
  std::normal_distribution<double> noise(0.0, noise_sigma);
  for (size_t i = 0; i < out.source_indices.size(); ++i) {
    const float* src = train.row(out.source_indices[i]);
    float* dst = out.data.images.data() + i * train.dim;
    if (noise_sigma == 0.0) {
      std::copy_n(src, train.dim, dst);
    } else {
      for (size_t k = 0; k < train.dim; ++k)
        dst[k] = std::clamp(src[k] + float(noise(rng)), 0.0f, 1.0f);
    }
    out.data.labels[i] = train.labels[out.source_indices[i]];
  }
  for (uint32_t i = 0; i < train.count; ++i)
    if (!reserved[i]) out.remaining.push_back(i);
  return out;
}

namespace {

// Splits each class's (seeded-shuffled) samples into equal blocks and checks
// the +-1 shard-size contract across classes.
std::vector<std::vector<std::vector<uint32_t>>> class_blocks(
    const Dataset& train, const std::vector<uint32_t>& available, int blocks_per_class,
    std::mt19937_64& rng) {
  const int C = train.class_count;
  std::vector<std::vector<uint32_t>> by_class(C);
  for (uint32_t i : available) by_class[train.labels[i]].push_back(i);

  std::vector<std::vector<std::vector<uint32_t>>> blocks(C);
  size_t min_block = SIZE_MAX, max_block = 0;
  for (int c = 0; c < C; ++c) {
    if (by_class[c].size() < static_cast<size_t>(blocks_per_class))
      throw std::invalid_argument("class " + std::to_string(c) +
                                  " cannot supply " + std::to_string(blocks_per_class) +
                                  " blocks");
    std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
    size_t n = by_class[c].size();
    for (int b = 0; b < blocks_per_class; ++b) {
      size_t lo = n * b / blocks_per_class, hi = n * (b + 1) / blocks_per_class;
      blocks[c].emplace_back(by_class[c].begin() + lo, by_class[c].begin() + hi);
      min_block = std::min(min_block, hi - lo);
      max_block = std::max(max_block, hi - lo);
    }
  }
  if (max_block > min_block + 1)
    throw std::invalid_argument("class supply too unbalanced for equal shards (+-1 sample); "
                                "block sizes span [" + std::to_string(min_block) + ", " +
                                std::to_string(max_block) + "]");
  return blocks;
}

}  // namespace

std::vector<WorkerShard> partition_noniid(const Dataset& train,
                                          const std::vector<uint32_t>& available,
                                          const PartitionSpec& spec) {
  spec.validate();
  if (spec.classes_per_worker != 1 && spec.classes_per_worker != 2)
    throw std::invalid_argument("partition_noniid requires classes_per_worker of 1 or 2");
  const int C = train.class_count;
  const uint32_t J = spec.workers;
  const int total_blocks = int(J) * spec.classes_per_worker;
  if (total_blocks % C != 0)
    throw std::invalid_argument("J * classes_per_worker = " + std::to_string(total_blocks) +
                                " must be divisible by the class count " + std::to_string(C));
  auto rng = make_rng(split_seed(spec.rng_seed, 101));
  auto blocks = class_blocks(train, available, total_blocks / C, rng);

  std::vector<WorkerShard> shards(J);
  for (uint32_t w = 0; w < J; ++w) shards[w].worker_id = w;

  if (spec.classes_per_worker == 1) {
    // class-major identity dealing: worker w takes block w
    int per_class = total_blocks / C;
    for (uint32_t w = 0; w < J; ++w) {
      int c = int(w) / per_class, b = int(w) % per_class;
      shards[w].local_indices = blocks[c][b];
    }
  } else {
    // repeatedly pair the two classes with most blocks left (ties: low class)
    std::vector<int> left(C);
    for (int c = 0; c < C; ++c) left[c] = int(blocks[c].size());
    for (uint32_t w = 0; w < J; ++w) {
      int c1 = -1, c2 = -1;
      for (int c = 0; c < C; ++c)
        if (left[c] > 0 && (c1 < 0 || left[c] > left[c1])) c1 = c;
      for (int c = 0; c < C; ++c)
        if (c != c1 && left[c] > 0 && (c2 < 0 || left[c] > left[c2])) c2 = c;
      if (c1 < 0 || c2 < 0)
        throw std::invalid_argument("cannot pair two distinct classes for worker " +
                                    std::to_string(w));
      for (int c : {std::min(c1, c2), std::max(c1, c2)}) {
        const auto& blk = blocks[c][blocks[c].size() - size_t(left[c])];
        shards[w].local_indices.insert(shards[w].local_indices.end(), blk.begin(), blk.end());
        --left[c];
      }
    }
  }
  return shards;
}

std::vector<WorkerShard> partition_iid(const Dataset& train,
                                       const std::vector<uint32_t>& available,
                                       const PartitionSpec& spec) {
  spec.validate();
  const int C = train.class_count;
  const uint32_t J = spec.workers;
  if (available.size() < J) throw std::invalid_argument("fewer samples than workers");

  std::vector<std::vector<uint32_t>> by_class(C);
  for (uint32_t i : available) by_class[train.labels[i]].push_back(i);
  auto rng = make_rng(split_seed(spec.rng_seed, 102));

  std::vector<WorkerShard> shards(J);
  for (uint32_t w = 0; w < J; ++w) shards[w].worker_id = w;
  // per-class round-robin with a rotating start keeps shard sizes within +-1
  size_t cursor = 0;
  for (int c = 0; c < C; ++c) {
    std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
    for (uint32_t idx : by_class[c]) {
      shards[cursor % J].local_indices.push_back(idx);
      ++cursor;
    }
  }
  return shards;
}

namespace {

int dominant_class(const Dataset& train, const WorkerShard& shard) {
  std::vector<size_t> h(train.class_count, 0);
  for (uint32_t i : shard.local_indices) ++h[train.labels[i]];
  return int(std::max_element(h.begin(), h.end()) - h.begin());
}

double edge_tv(const Dataset& train, const std::vector<WorkerShard>& shards,
               const std::vector<int>& edge_of, int edge, const std::vector<double>& global_frac) {
  std::vector<double> h(train.class_count, 0.0);
  double total = 0.0;
  for (const auto& s : shards)
    if (edge_of[s.worker_id] == edge)
      for (uint32_t i : s.local_indices) {
        h[train.labels[i]] += 1.0;
        total += 1.0;
      }
  if (total == 0.0) return 1.0;
  double tv = 0.0;
  for (int c = 0; c < train.class_count; ++c) tv += std::abs(h[c] / total - global_frac[c]);
  return 0.5 * tv;
}

}  // namespace

ClusterLayout assign_edges(const Dataset& train, std::vector<WorkerShard>& shards,
                           const PartitionSpec& spec) {
  spec.validate();
  const uint32_t J = uint32_t(shards.size());
  const uint32_t N = spec.edges;
  std::vector<int> edge_of(J, -1);

  if (spec.edge_mode == EdgeMode::FromEquilibrium) {
    // largest-remainder rounding of J * share_n, ties to the lower index
    std::vector<size_t> counts(N, 0);
    std::vector<std::pair<double, uint32_t>> rem;
    size_t assigned = 0;
    for (uint32_t n = 0; n < N; ++n) {
      double exact = double(J) * spec.edge_shares[n];
      counts[n] = size_t(std::floor(exact));
      assigned += counts[n];
      rem.push_back({exact - std::floor(exact), n});
    }
    // remainders equal up to fp noise count as ties and break to low index
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
      if (std::abs(a.first - b.first) > 1e-9) return a.first > b.first;
      return a.second < b.second;
    });
    for (size_t k = 0; assigned < J; ++k, ++assigned) ++counts[rem[k % N].second];

    std::vector<uint32_t> order(J);
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(split_seed(spec.rng_seed, 103));
    std::shuffle(order.begin(), order.end(), rng);
    size_t pos = 0;
    for (uint32_t n = 0; n < N; ++n)
      for (size_t k = 0; k < counts[n]; ++k) edge_of[order[pos++]] = int(n);
  } else {
    // sort workers by (dominant class, id); iid interleaves, noniid deals
    // contiguous runs to maximize edge-level skew
    std::vector<uint32_t> order(J);
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> dom(J);
    for (const auto& s : shards) dom[s.worker_id] = dominant_class(train, s);
    std::stable_sort(order.begin(), order.end(),
                     [&](uint32_t a, uint32_t b) { return dom[a] < dom[b]; });
    if (spec.edge_mode == EdgeMode::Iid) {
      for (uint32_t k = 0; k < J; ++k) edge_of[order[k]] = int(k % N);
    } else {
      size_t pos = 0;
      for (uint32_t n = 0; n < N; ++n) {
        size_t take = J / N + (n < J % N ? 1 : 0);
        for (size_t k = 0; k < take; ++k) edge_of[order[pos++]] = int(n);
      }
    }
  }

  ClusterLayout layout;
  layout.worker_to_edge.assign(edge_of.begin(), edge_of.end());
  layout.worker_sizes.resize(J);
  layout.edge_sizes.assign(N, 0);
  layout.edge_workers.assign(N, {});
  for (auto& s : shards) {
    s.edge_id = edge_of[s.worker_id];
    layout.worker_sizes[s.worker_id] = s.local_indices.size();
    layout.edge_sizes[s.edge_id] += s.local_indices.size();
    layout.total_size += s.local_indices.size();
    layout.edge_workers[s.edge_id].push_back(s.worker_id);
  }
  for (auto& ws : layout.edge_workers) std::sort(ws.begin(), ws.end());
  for (uint32_t n = 0; n < N; ++n)
    if (layout.edge_workers[n].empty())
      throw std::invalid_argument("edge " + std::to_string(n) + " received no workers");

  std::vector<double> global_frac(train.class_count, 0.0);
  {
    // global histogram over the partitioned samples only
    std::vector<double> h(train.class_count, 0.0);
    double total = 0.0;
    for (const auto& s : shards)
      for (uint32_t i : s.local_indices) {
        h[train.labels[i]] += 1.0;
        total += 1.0;
      }
    for (int c = 0; c < train.class_count; ++c) global_frac[c] = h[c] / total;
  }
  for (uint32_t n = 0; n < N; ++n)
    layout.max_edge_tv = std::max(layout.max_edge_tv,
                                  edge_tv(train, shards, edge_of, int(n), global_frac));

  if (spec.edge_mode == EdgeMode::Iid && spec.classes_per_worker == 0 &&
      layout.max_edge_tv >= 0.05)
    throw std::invalid_argument("iid edge mode failed the class-balance certificate: TV = " +
                                std::to_string(layout.max_edge_tv));
  layout.require_consistent();
  return layout;
}

void mix_synthetic(std::vector<WorkerShard>& shards, const SyntheticPool& pool, double rho,
                   uint64_t seed) {
  if (rho < 0.0 || rho > 0.25) throw std::invalid_argument("rho must lie in [0, 0.25]");
  if (rho == 0.0) return;
  const int C = pool.data.class_count;

  std::vector<std::vector<uint32_t>> by_class(C);
  for (size_t i = 0; i < pool.data.count; ++i)
    by_class[pool.data.labels[i]].push_back(uint32_t(i));
  auto rng = make_rng(split_seed(seed, 104));
  for (auto& v : by_class) std::shuffle(v.begin(), v.end(), rng);
  std::vector<size_t> cursor(C, 0);

  // remainder classes rotate through a global cursor so the pool drains
  // evenly and small draws spread over classes
  size_t rot = 0;
  for (auto& shard : shards) {
    size_t want = size_t(std::floor(rho * double(shard.local_indices.size()) / (1.0 - rho)));
    size_t base = want / C, extra = want % C;
    for (int k = 0; k < C; ++k) {
      int c = int((size_t(k) + rot) % size_t(C));
      size_t take = base + (size_t(k) < extra ? 1 : 0);
      if (cursor[c] + take > by_class[c].size())
        throw std::invalid_argument("synthetic pool exhausted for class " + std::to_string(c));
      for (size_t t = 0; t < take; ++t)
        shard.synthetic_indices.push_back(by_class[c][cursor[c]++]);
    }
    rot += extra;
  }
}

PartitionedData build_partition(Dataset train, Dataset test, const PartitionSpec& spec) {
  spec.validate();
  train.require_consistent();
  test.require_consistent();

  PartitionedData out;
  out.train = std::move(train);
  out.test = std::move(test);
  out.pool = build_synthetic_pool(out.train, spec.pool_fraction, spec.noise_sigma,
                                  split_seed(spec.rng_seed, 100));
  out.shards = spec.classes_per_worker == 0
                   ? partition_iid(out.train, out.pool.remaining, spec)
                   : partition_noniid(out.train, out.pool.remaining, spec);
  out.layout = assign_edges(out.train, out.shards, spec);
  mix_synthetic(out.shards, out.pool, spec.synthetic_fraction, spec.rng_seed);
  return out;
}

void write_partition_manifest(const PartitionedData& data, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : data.shards) {
    std::vector<bool> present(data.train.class_count, false);
    for (uint32_t i : s.local_indices) present[data.train.labels[i]] = true;
    std::string classes;
    for (int c = 0; c < data.train.class_count; ++c)
      if (present[c]) classes += (classes.empty() ? "" : ";") + std::to_string(c);
    rows.push_back({std::to_string(s.worker_id), std::to_string(s.edge_id),
                    std::to_string(s.local_indices.size()),
                    std::to_string(s.synthetic_indices.size()), classes});
  }
  emit_csv(path, {"worker_id", "edge_id", "local_size", "synthetic_size", "classes"}, rows);
}

}  // namespace hflsim
