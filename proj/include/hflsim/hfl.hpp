#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hflsim/dataset.hpp"
#include "hflsim/model.hpp"

namespace hflsim {

struct HFLConfig {
  uint32_t kappa1 = 5;     // local updates per intermediate aggregation
  uint32_t kappa2 = 2;     // intermediate aggregations per global aggregation
  uint32_t iterations = 300;  // K; must be a multiple of kappa1*kappa2
  double eta0 = 0.01;
  double decay = 0.995;    // eta_k = eta0 * decay^k
  uint32_t batch_size = 20;
  uint32_t eval_every = 0;  // 0: evaluate only at global aggregations
  bool eval_intermediate = false;  // also evaluate per-edge models
  Architecture arch;
  uint64_t rng_seed = 0;

  void validate() const;
};

// One evaluation record. scope: "global" at cloud aggregations, "edge" for
// intermediate models, "probe" for eval_every snapshots of the flat
// data-weighted worker average.
struct TraceRow {
  uint64_t iteration = 0;
  std::string scope;
  int edge_id = -1;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  double train_loss = 0.0;  // mean batch loss since the previous record
  double wall_ms = 0.0;     // wall clock of the elapsed cloud interval
};

enum class HFLStatus { Finished, Diverged };

struct TrainTrace {
  std::vector<TraceRow> rows;
  HFLStatus status = HFLStatus::Finished;
  uint64_t diverged_iteration = 0;
  double final_accuracy = 0.0;
  double final_loss = 0.0;
};

// eta_k = eta0 * decay^k with the global iteration index.
double step_size(const HFLConfig& cfg, uint32_t k);

// One mini-batch SGD step: params - eta * grad.
ModelParams sgd_step(const Architecture& arch, const ModelParams& params,
                     const Eigen::MatrixXd& batch, const std::vector<int>& labels, double eta);

// |D_j^n|-weighted average of the given worker parameter vectors; weights
// are the layout's local shard sizes and sum to 1 after normalization.
ModelParams intermediate_aggregate(int edge, const std::vector<ModelParams>& worker_params,
                                   const std::vector<uint32_t>& worker_ids,
                                   const ClusterLayout& layout);

// |D^n|/|D|-weighted average of per-edge parameters; algebraically equals
// the flat worker-weighted average.
ModelParams global_aggregate(const std::vector<ModelParams>& edge_params,
                             const ClusterLayout& layout);

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
};

// Top-1 accuracy (argmax ties break to the lowest class index) and mean
// cross-entropy on the test set.
EvalResult evaluate(const Architecture& arch, const ModelParams& params, const Dataset& test);

// Runs the full three-tier schedule: per-iteration local SGD, intermediate
// aggregation every kappa1 iterations, global aggregation every
// kappa1*kappa2. Deterministic under (cfg, data, seed).
TrainTrace run_hfl(const HFLConfig& cfg, const PartitionedData& data);

void write_trace_csv(const TrainTrace& trace, const std::string& path);

}  // namespace hflsim
