#pragma once

#include <cstdint>
#include <vector>

#include "fedcomm/util/rng.hpp"

namespace fedcomm::fl {

// Fixed-order flat parameter vector: hidden weights row-major (out, in),
// hidden biases, output weights row-major, output biases.
using ParamVector = std::vector<float>;

struct MlpArch {
  size_t input_dim = 32;
  size_t hidden_dim = 64;
  size_t classes = 10;

  size_t param_count() const {
    return hidden_dim * input_dim + hidden_dim + classes * hidden_dim + classes;
  }
};

struct SyntheticDataset {
  std::vector<float> features;  // n x d, row-major
  std::vector<int> labels;      // n, each in [0, classes)
  size_t n = 0;
  size_t dims = 0;
  size_t classes = 0;
  uint64_t seed = 0;
};

enum class Split { train, test };

// n samples, d dims, per-class Gaussian blobs with seeded means at radius 3
// from the origin and unit variance. Class means depend on seed only, so the
// train and test splits of one seed share the same distribution; the noise
// stream depends on (seed, split). Per-class counts differ by at most 1.
SyntheticDataset generate_dataset(uint64_t seed, size_t n, size_t d, size_t classes,
                                  Split split = Split::train);

// Disjoint, exhaustive, seeded-shuffle shards with sizes differing by <= 1.
// Each shard is a view expressed as sample indices into the dataset.
std::vector<std::vector<size_t>> partition_iid(const SyntheticDataset& dataset, size_t k,
                                               uint64_t seed);

struct TrainConfig {
  size_t local_epochs = 1;
  size_t batch_size = 32;
  double learning_rate = 0.05;
  uint64_t seed = 0;
};

struct ClientUpdate {
  uint16_t device_id = 0;
  uint16_t round = 0;
  ParamVector params;
  uint64_t num_samples = 0;
};

// Seeded uniform init (zero biases); deterministic in seed.
ParamVector init_params(const MlpArch& arch, uint64_t seed);

struct TrainResult {
  ParamVector params;
  double mean_loss = 0.0;  // mean cross-entropy over the final epoch
};

// Mini-batch SGD with ReLU hidden layer and softmax cross-entropy loss.
// Pure: the input params are copied. Bitwise deterministic in
// (params, shard, cfg).
TrainResult local_train(const ParamVector& params, const SyntheticDataset& dataset,
                        const std::vector<size_t>& shard, const MlpArch& arch,
                        const TrainConfig& cfg);

// Sample-count-weighted mean, accumulated in ascending device_id order.
ParamVector fedavg(const std::vector<ClientUpdate>& updates);

// Fraction of test samples whose argmax prediction matches the label; ties
// break toward the lowest class index.
double evaluate(const ParamVector& params, const SyntheticDataset& test, const MlpArch& arch);

// Mean cross-entropy of the model over a dataset (used as the per-round loss
// series in reports).
double mean_loss(const ParamVector& params, const SyntheticDataset& data, const MlpArch& arch);

// Per-device training seed for a round.
inline uint64_t device_round_seed(uint64_t run_seed, uint16_t device_id, uint16_t round) {
  return util::mix(run_seed, device_id, round);
}

}  // namespace fedcomm::fl
