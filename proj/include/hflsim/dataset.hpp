#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hflsim {

// Labeled image set; pixels scaled to [0,1], sample-major.
struct Dataset {
  std::vector<float> images;     // size() == count * dim
  std::vector<uint8_t> labels;   // values < class_count
  size_t count = 0;
  size_t dim = 0;
  int class_count = 10;

  const float* row(size_t i) const { return images.data() + i * dim; }
  std::vector<size_t> label_histogram() const;
  void require_consistent() const;
};

// IDX binary parse failure; message carries the byte offset.
struct IdxError : std::runtime_error {
  explicit IdxError(const std::string& what) : std::runtime_error(what) {}
};

// Reads an images/labels IDX pair (big-endian magics 0x803 / 0x801) and
// cross-checks the sample counts.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 int class_count = 10);

// Class-balanced deterministic subsample (counts within +-1 of total/C).
Dataset select_balanced_subset(const Dataset& ds, size_t total, uint64_t seed);

struct WorkerShard {
  uint32_t worker_id = 0;
  std::vector<uint32_t> local_indices;      // into the training set
  std::vector<uint32_t> synthetic_indices;  // into the synthetic pool
  int edge_id = -1;
};

enum class EdgeMode { Iid, NonIid, FromEquilibrium };

struct PartitionSpec {
  int classes_per_worker = 1;      // 0 = iid shards, else 1 or 2
  uint32_t workers = 50;           // J
  uint32_t edges = 3;              // N
  EdgeMode edge_mode = EdgeMode::NonIid;
  std::vector<double> edge_shares; // FromEquilibrium: per-edge worker shares
  double synthetic_fraction = 0.0; // rho in [0, 0.25]
  double pool_fraction = 0.1;      // reserved slice of the training set
  double noise_sigma = 0.1;        // pixel noise on the pool
  uint64_t rng_seed = 0;

  void validate() const;
};

// Worker -> edge map plus the aggregation weights |D_j^n|, |D^n|, |D|.
struct ClusterLayout {
  std::vector<int> worker_to_edge;
  std::vector<size_t> worker_sizes;          // |D_j^n| (local shard sizes)
  std::vector<size_t> edge_sizes;            // |D^n|
  size_t total_size = 0;                     // |D|
  std::vector<std::vector<uint32_t>> edge_workers;  // id-sorted per edge
  double max_edge_tv = 0.0;  // worst per-edge class-histogram TV vs global

  void require_consistent() const;
};

struct SyntheticPool {
  Dataset data;                         // noised copies, own storage
  std::vector<uint32_t> source_indices; // originating train indices
  std::vector<uint32_t> remaining;      // train indices left for partitioning
};

// Reserves a class-balanced slice before partitioning and perturbs it with
// clamped Gaussian pixel noise. Reserved indices never enter local shards.
SyntheticPool build_synthetic_pool(const Dataset& train, double pool_fraction,
                                   double noise_sigma, uint64_t seed);

// 1- or 2-class shards: label-sorted contiguous blocks dealt so each worker
// holds exactly classes_per_worker distinct classes; sizes equal within +-1.
std::vector<WorkerShard> partition_noniid(const Dataset& train,
                                          const std::vector<uint32_t>& available,
                                          const PartitionSpec& spec);

// Stratified near-uniform shards (classes_per_worker == 0).
std::vector<WorkerShard> partition_iid(const Dataset& train,
                                       const std::vector<uint32_t>& available,
                                       const PartitionSpec& spec);

// Assigns workers to edges, fills shard edge ids, and builds the layout.
ClusterLayout assign_edges(const Dataset& train, std::vector<WorkerShard>& shards,
                           const PartitionSpec& spec);

// Appends a class-balanced draw from the pool to each shard so its synthetic
// fraction is rho (count = floor(rho*|local|/(1-rho))); draws are disjoint.
void mix_synthetic(std::vector<WorkerShard>& shards, const SyntheticPool& pool, double rho,
                   uint64_t seed);

// Full pipeline output consumed by the HFL engine.
struct PartitionedData {
  Dataset train;
  Dataset test;
  SyntheticPool pool;
  std::vector<WorkerShard> shards;
  ClusterLayout layout;
};

PartitionedData build_partition(Dataset train, Dataset test, const PartitionSpec& spec);

// Reproducibility audit: worker id, edge id, local size, synthetic size,
// class list per shard.
void write_partition_manifest(const PartitionedData& data, const std::string& path);

}  // namespace hflsim
