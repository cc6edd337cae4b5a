#include "hflsim/hfl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "hflsim/csv.hpp"
#include "hflsim/rng.hpp"

namespace hflsim {

void HFLConfig::validate() const {
  if (kappa1 == 0 || kappa2 == 0) throw std::invalid_argument("kappa1/kappa2 must be >= 1");
  if (iterations == 0 || iterations % (kappa1 * kappa2) != 0)
    throw std::invalid_argument("K must be a positive multiple of kappa1*kappa2");
  if (eta0 <= 0.0) throw std::invalid_argument("eta0 must be > 0");
  if (decay <= 0.0 || decay > 1.0) throw std::invalid_argument("decay must lie in (0, 1]");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  arch.validate();
}

double step_size(const HFLConfig& cfg, uint32_t k) {
  return cfg.eta0 * std::pow(cfg.decay, double(k));
}

ModelParams sgd_step(const Architecture& arch, const ModelParams& params,
                     const Eigen::MatrixXd& batch, const std::vector<int>& labels, double eta) {
  auto lg = loss_and_grad(arch, params, batch, labels);
  return params - eta * lg.grad;
}

ModelParams intermediate_aggregate(int edge, const std::vector<ModelParams>& worker_params,
                                   const std::vector<uint32_t>& worker_ids,
                                   const ClusterLayout& layout) {
  if (worker_params.empty()) throw std::invalid_argument("no worker parameters to aggregate");
  if (worker_params.size() != worker_ids.size())
    throw std::invalid_argument("worker parameter/id count mismatch");
  if (edge < 0 || size_t(edge) >= layout.edge_workers.size())
    throw std::invalid_argument("edge index out of range");
  if (worker_ids != layout.edge_workers[size_t(edge)])
    throw std::invalid_argument("worker set does not match the edge's cluster");
  double total = double(layout.edge_sizes[size_t(edge)]);
  ModelParams out = ModelParams::Zero(worker_params.front().size());
  for (size_t k = 0; k < worker_ids.size(); ++k) {
    if (worker_params[k].size() != out.size())
      throw std::invalid_argument("parameter length mismatch across workers");
    out += (double(layout.worker_sizes[worker_ids[k]]) / total) * worker_params[k];
  }
  return out;
}

ModelParams global_aggregate(const std::vector<ModelParams>& edge_params,
                             const ClusterLayout& layout) {
  if (edge_params.empty()) throw std::invalid_argument("no edge parameters to aggregate");
  if (edge_params.size() != layout.edge_sizes.size())
    throw std::invalid_argument("edge parameter count mismatch");
  double total = double(layout.total_size);
  ModelParams out = ModelParams::Zero(edge_params.front().size());
  for (size_t n = 0; n < edge_params.size(); ++n) {
    if (edge_params[n].size() != out.size())
      throw std::invalid_argument("parameter length mismatch across edges");
    out += (double(layout.edge_sizes[n]) / total) * edge_params[n];
  }
  return out;
}

EvalResult evaluate(const Architecture& arch, const ModelParams& params, const Dataset& test) {
  test.require_consistent();
  if (test.count == 0) throw std::invalid_argument("empty test set");
  const size_t chunk = 512;
  size_t correct = 0;
  double loss_sum = 0.0;
  for (size_t start = 0; start < test.count; start += chunk) {
    size_t b = std::min(chunk, test.count - start);
    Eigen::MatrixXd x(b, test.dim);
    for (size_t i = 0; i < b; ++i)
      for (size_t k = 0; k < test.dim; ++k) x(Eigen::Index(i), Eigen::Index(k)) = test.row(start + i)[k];
    Eigen::MatrixXd probs = forward(arch, params, x);
    for (size_t i = 0; i < b; ++i) {
      int best = 0;
      double bp = probs(Eigen::Index(i), 0);
      for (int c = 1; c < arch.class_count; ++c)
        if (probs(Eigen::Index(i), c) > bp) {  // strict: ties keep the lowest index
          bp = probs(Eigen::Index(i), c);
          best = c;
        }
      int y = test.labels[start + i];
      if (best == y) ++correct;
      loss_sum += -std::log(std::max(probs(Eigen::Index(i), y), 1e-300));
    }
  }
  return {double(correct) / double(test.count), loss_sum / double(test.count)};
}

namespace {

// Per-worker deterministic batch stream: shuffled epoch order over the mixed
// (local + synthetic) shard, reshuffled when exhausted.
class BatchStream {
 public:
  BatchStream(const Dataset& train, const SyntheticPool& pool, const WorkerShard& shard,
              uint64_t seed)
      : rng_(make_rng(seed)) {
    for (uint32_t i : shard.local_indices) rows_.push_back({train.row(i), train.labels[i]});
    for (uint32_t i : shard.synthetic_indices)
      rows_.push_back({pool.data.row(i), pool.data.labels[i]});
    if (rows_.empty())
      throw std::invalid_argument("worker " + std::to_string(shard.worker_id) +
                                  " has an empty shard");
    order_.resize(rows_.size());
    std::iota(order_.begin(), order_.end(), 0);
    reshuffle();
  }

  // Fills x (batch x dim) and labels with the next mini-batch.
  void next(size_t batch_size, size_t dim, Eigen::MatrixXd& x, std::vector<int>& labels) {
    size_t b = std::min(batch_size, order_.size());
    x.resize(Eigen::Index(b), Eigen::Index(dim));
    labels.resize(b);
    for (size_t i = 0; i < b; ++i) {
      if (cursor_ >= order_.size()) reshuffle();
      const auto& row = rows_[order_[cursor_++]];
      for (size_t k = 0; k < dim; ++k) x(Eigen::Index(i), Eigen::Index(k)) = row.first[k];
      labels[i] = row.second;
    }
  }

  size_t size() const { return rows_.size(); }

 private:
  void reshuffle() {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }
  std::vector<std::pair<const float*, int>> rows_;
  std::vector<size_t> order_;
  size_t cursor_ = 0;
  std::mt19937_64 rng_;
};

bool finite(const ModelParams& p) { return p.allFinite(); }

}  // namespace

TrainTrace run_hfl(const HFLConfig& cfg, const PartitionedData& data) {
  cfg.validate();
  data.layout.require_consistent();
  const size_t J = data.shards.size();
  const size_t N = data.layout.edge_sizes.size();
  if (data.layout.worker_to_edge.size() != J)
    throw std::invalid_argument("layout does not cover all workers");
  for (const auto& s : data.shards)
    if (s.local_indices.empty())
      throw std::invalid_argument("worker " + std::to_string(s.worker_id) +
                                  " has an empty local shard");

  ModelParams global = init_params(cfg.arch, split_seed(cfg.rng_seed, 0));
  std::vector<ModelParams> worker(J, global);
  std::vector<BatchStream> streams;
  streams.reserve(J);
  for (size_t j = 0; j < J; ++j)
    streams.emplace_back(data.train, data.pool, data.shards[j],
                         split_seed(cfg.rng_seed, 1000 + j));

  TrainTrace trace;
  double train_loss_acc = 0.0;
  size_t train_loss_n = 0;
  auto interval_start = std::chrono::steady_clock::now();

  Eigen::MatrixXd batch;
  std::vector<int> labels;
  const uint32_t cloud = cfg.kappa1 * cfg.kappa2;

  auto flat_average = [&]() {
    ModelParams avg = ModelParams::Zero(global.size());
    for (size_t j = 0; j < J; ++j)
      avg += (double(data.layout.worker_sizes[j]) / double(data.layout.total_size)) * worker[j];
    return avg;
  };

  auto push_row = [&](uint64_t k, const std::string& scope, int edge, const EvalResult& ev,
                      double wall_ms) {
    trace.rows.push_back({k, scope, edge, ev.accuracy, ev.loss,
                          train_loss_n ? train_loss_acc / double(train_loss_n) : 0.0, wall_ms});
  };

  for (uint32_t k = 1; k <= cfg.iterations; ++k) {
    double eta = step_size(cfg, k);
    for (size_t j = 0; j < J; ++j) {
      streams[j].next(cfg.batch_size, data.train.dim, batch, labels);
      auto lg = loss_and_grad(cfg.arch, worker[j], batch, labels);
      worker[j] -= eta * lg.grad;
      train_loss_acc += lg.loss;
      ++train_loss_n;
    }

    if (k % cfg.kappa1 == 0) {
      std::vector<ModelParams> edge_models(N);
      for (size_t n = 0; n < N; ++n) {
        std::vector<ModelParams> members;
        for (uint32_t id : data.layout.edge_workers[n]) members.push_back(worker[id]);
        edge_models[n] = intermediate_aggregate(int(n), members,
                                                data.layout.edge_workers[n], data.layout);
        if (!finite(edge_models[n])) {
          trace.status = HFLStatus::Diverged;
          trace.diverged_iteration = k;
          return trace;
        }
      }
      if (k % cloud == 0) {
        global = global_aggregate(edge_models, data.layout);
        for (size_t j = 0; j < J; ++j) worker[j] = global;
        auto now = std::chrono::steady_clock::now();
        double wall_ms =
            std::chrono::duration<double, std::milli>(now - interval_start).count();
        interval_start = now;
        auto ev = evaluate(cfg.arch, global, data.test);
        push_row(k, "global", -1, ev, wall_ms);
        train_loss_acc = 0.0;
        train_loss_n = 0;
      } else {
        if (cfg.eval_intermediate)
          for (size_t n = 0; n < N; ++n)
            push_row(k, "edge", int(n), evaluate(cfg.arch, edge_models[n], data.test), 0.0);
        for (size_t j = 0; j < J; ++j) worker[j] = edge_models[data.layout.worker_to_edge[j]];
      }
    }
    if (cfg.eval_every > 0 && k % cfg.eval_every == 0 && k % cloud != 0)
      push_row(k, "probe", -1, evaluate(cfg.arch, flat_average(), data.test), 0.0);
  }

  for (auto it = trace.rows.rbegin(); it != trace.rows.rend(); ++it)
    if (it->scope == "global") {
      trace.final_accuracy = it->test_accuracy;
      trace.final_loss = it->test_loss;
      break;
    }
  return trace;
}

void write_trace_csv(const TrainTrace& trace, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : trace.rows)
    rows.push_back({std::to_string(r.iteration), r.scope, std::to_string(r.edge_id),
                    fmt_double(r.test_accuracy), fmt_double(r.test_loss),
                    fmt_double(r.train_loss), fmt_double(r.wall_ms)});
  emit_csv(path, {"iteration", "scope", "edge_id", "test_accuracy", "test_loss", "train_loss",
                  "wall_ms"},
           rows);
}

}  // namespace hflsim
