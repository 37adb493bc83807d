#include "fedcomm/fl/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedcomm/errors.hpp"

namespace fedcomm::fl {

SyntheticDataset generate_dataset(uint64_t seed, size_t n, size_t d, size_t classes,
                                  Split split) {
  if (d == 0) throw FlError("generate_dataset: dims must be >= 1");
  if (classes == 0 || n < classes) {
    throw FlError("generate_dataset: need n >= classes >= 1, got n=" + std::to_string(n) +
                  " classes=" + std::to_string(classes));
  }
  SyntheticDataset ds;
  ds.n = n;
  ds.dims = d;
  ds.classes = classes;
  ds.seed = seed;
  ds.features.resize(n * d);
  ds.labels.resize(n);

  // Class means depend on the seed only; both splits see the same blobs.
  std::vector<double> means(classes * d);
  for (size_t c = 0; c < classes; ++c) {
    util::Rng rng(util::mix(seed, 0x4D45414Eull /* "MEAN" */, c));
    double norm_sq = 0.0;
    for (size_t j = 0; j < d; ++j) {
      const double v = rng.next_gaussian();
      means[c * d + j] = v;
      norm_sq += v * v;
    }
    const double scale = 3.0 / std::sqrt(std::max(norm_sq, 1e-12));
    for (size_t j = 0; j < d; ++j) means[c * d + j] *= scale;
  }

  util::Rng noise(util::mix(seed, 0x4E4F4953ull /* "NOIS" */, split == Split::train ? 0 : 1));
  for (size_t i = 0; i < n; ++i) {
    const size_t c = i % classes;  // counts differ by at most 1
    ds.labels[i] = static_cast<int>(c);
    for (size_t j = 0; j < d; ++j) {
      ds.features[i * d + j] = static_cast<float>(means[c * d + j] + noise.next_gaussian());
    }
  }
  return ds;
}

std::vector<std::vector<size_t>> partition_iid(const SyntheticDataset& dataset, size_t k,
                                               uint64_t seed) {
  if (k == 0) throw FlError("partition_iid: need at least one shard");
  if (dataset.n == 0) throw FlError("partition_iid: empty dataset");
  if (k > dataset.n) {
    throw FlError("partition_iid: " + std::to_string(k) + " shards exceed dataset size " +
                  std::to_string(dataset.n));
  }
  std::vector<size_t> order(dataset.n);
  std::iota(order.begin(), order.end(), 0);
  util::Rng rng(util::mix(seed, 0x53484152ull /* "SHAR" */));
  for (size_t i = dataset.n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.next_below(i + 1)]);
  }
  std::vector<std::vector<size_t>> shards(k);
  const size_t base = dataset.n / k;
  const size_t extra = dataset.n % k;
  size_t pos = 0;
  for (size_t s = 0; s < k; ++s) {
    const size_t len = base + (s < extra ? 1 : 0);
    shards[s].assign(order.begin() + pos, order.begin() + pos + len);
    pos += len;
  }
  return shards;
}

ParamVector init_params(const MlpArch& arch, uint64_t seed) {
  util::Rng rng(util::mix(seed, 0x494E4954ull /* "INIT" */));
  ParamVector params(arch.param_count(), 0.0f);
  const double limit1 = std::sqrt(6.0 / double(arch.input_dim + arch.hidden_dim));
  const double limit2 = std::sqrt(6.0 / double(arch.hidden_dim + arch.classes));
  size_t idx = 0;
  for (size_t i = 0; i < arch.hidden_dim * arch.input_dim; ++i) {
    params[idx++] = static_cast<float>((rng.next_double() * 2.0 - 1.0) * limit1);
  }
  idx += arch.hidden_dim;  // hidden biases stay zero
  for (size_t i = 0; i < arch.classes * arch.hidden_dim; ++i) {
    params[idx++] = static_cast<float>((rng.next_double() * 2.0 - 1.0) * limit2);
  }
  return params;
}

namespace {

// Double-precision working view of the flat parameter vector.
struct Net {
  const MlpArch& arch;
  std::vector<double> w;  // same layout as ParamVector

  explicit Net(const MlpArch& a, const ParamVector& params) : arch(a) {
    w.assign(params.begin(), params.end());
  }

  size_t w1() const { return 0; }
  size_t b1() const { return arch.hidden_dim * arch.input_dim; }
  size_t w2() const { return b1() + arch.hidden_dim; }
  size_t b2() const { return w2() + arch.classes * arch.hidden_dim; }

  // Returns loss; fills hidden activations and class probabilities.
  double forward(const float* x, int label, std::vector<double>& hidden,
                 std::vector<double>& probs) const {
    const size_t d = arch.input_dim, h = arch.hidden_dim, c = arch.classes;
    hidden.resize(h);
    probs.resize(c);
    for (size_t j = 0; j < h; ++j) {
      double acc = w[b1() + j];
      const double* row = &w[w1() + j * d];
      for (size_t i = 0; i < d; ++i) acc += row[i] * double(x[i]);
      hidden[j] = acc > 0.0 ? acc : 0.0;
    }
    double max_logit = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < c; ++k) {
      double acc = w[b2() + k];
      const double* row = &w[w2() + k * h];
      for (size_t j = 0; j < h; ++j) acc += row[j] * hidden[j];
      probs[k] = acc;
      max_logit = std::max(max_logit, acc);
    }
    double denom = 0.0;
    for (size_t k = 0; k < c; ++k) denom += std::exp(probs[k] - max_logit);
    const double log_denom = std::log(denom) + max_logit;
    const double loss = log_denom - probs[size_t(label)];
    for (size_t k = 0; k < c; ++k) probs[k] = std::exp(probs[k] - log_denom);
    return loss;
  }
};

}  // namespace

TrainResult local_train(const ParamVector& params, const SyntheticDataset& dataset,
                        const std::vector<size_t>& shard, const MlpArch& arch,
                        const TrainConfig& cfg) {
  if (params.size() != arch.param_count()) {
    throw FlError("local_train: params length " + std::to_string(params.size()) +
                  " does not match architecture count " + std::to_string(arch.param_count()));
  }
  if (cfg.local_epochs == 0 || cfg.batch_size == 0 || cfg.learning_rate < 0.0) {
    throw FlError("local_train: epochs and batch_size must be positive");
  }
  if (shard.empty()) throw FlError("local_train: empty shard");

  Net net(arch, params);
  const size_t d = arch.input_dim, h = arch.hidden_dim, c = arch.classes;
  std::vector<double> grad(net.w.size());
  std::vector<double> hidden, probs, dhidden(h);
  std::vector<size_t> order(shard);
  double final_epoch_loss = 0.0;

  for (size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    util::Rng shuffle_rng(util::mix(cfg.seed, 0x45504F43ull /* "EPOC" */, epoch));
    for (size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle_rng.next_below(i + 1)]);
    }
    double epoch_loss = 0.0;
    for (size_t batch_start = 0; batch_start < order.size(); batch_start += cfg.batch_size) {
      const size_t batch_end = std::min(order.size(), batch_start + cfg.batch_size);
      const double batch_n = double(batch_end - batch_start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (size_t bi = batch_start; bi < batch_end; ++bi) {
        const size_t sample = order[bi];
        const float* x = &dataset.features[sample * d];
        const int label = dataset.labels[sample];
        epoch_loss += net.forward(x, label, hidden, probs);
        // Backprop: dlogits = probs - onehot.
        for (size_t k = 0; k < c; ++k) {
          const double dl = probs[k] - (int(k) == label ? 1.0 : 0.0);
          grad[net.b2() + k] += dl;
          double* gw2 = &grad[net.w2() + k * h];
          for (size_t j = 0; j < h; ++j) gw2[j] += dl * hidden[j];
        }
        for (size_t j = 0; j < h; ++j) {
          if (hidden[j] <= 0.0) {
            dhidden[j] = 0.0;
            continue;
          }
          double acc = 0.0;
          for (size_t k = 0; k < c; ++k) acc += net.w[net.w2() + k * h + j] * (probs[k] - (int(k) == dataset.labels[sample] ? 1.0 : 0.0));
          dhidden[j] = acc;
        }
        for (size_t j = 0; j < h; ++j) {
          if (dhidden[j] == 0.0) continue;
          grad[net.b1() + j] += dhidden[j];
          double* gw1 = &grad[net.w1() + j * d];
          for (size_t i = 0; i < d; ++i) gw1[i] += dhidden[j] * double(x[i]);
        }
      }
      const double step = cfg.learning_rate / batch_n;
      for (size_t i = 0; i < net.w.size(); ++i) net.w[i] -= step * grad[i];
    }
    final_epoch_loss = epoch_loss / double(order.size());
  }

  TrainResult result;
  result.params.resize(net.w.size());
  for (size_t i = 0; i < net.w.size(); ++i) result.params[i] = static_cast<float>(net.w[i]);
  result.mean_loss = final_epoch_loss;
  return result;
}

ParamVector fedavg(const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) throw FlError("fedavg: empty update list");
  std::vector<size_t> order(updates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return updates[a].device_id < updates[b].device_id;
  });
  const size_t len = updates[0].params.size();
  const uint16_t round = updates[0].round;
  double total_weight = 0.0;
  for (const auto& u : updates) {
    if (u.round != round) {
      throw FlError("fedavg: mixed rounds " + std::to_string(round) + " and " +
                    std::to_string(u.round));
    }
    if (u.params.size() != len) {
      throw FlError("fedavg: params length mismatch (" + std::to_string(u.params.size()) +
                    " vs " + std::to_string(len) + ")");
    }
    if (u.num_samples == 0) throw FlError("fedavg: num_samples must be positive");
    total_weight += double(u.num_samples);
  }
  std::vector<double> acc(len, 0.0);
  for (size_t k : order) {
    const auto& u = updates[k];
    const double w = double(u.num_samples);
    for (size_t i = 0; i < len; ++i) acc[i] += w * double(u.params[i]);
  }
  ParamVector out(len);
  for (size_t i = 0; i < len; ++i) out[i] = static_cast<float>(acc[i] / total_weight);
  return out;
}

double evaluate(const ParamVector& params, const SyntheticDataset& test, const MlpArch& arch) {
  if (test.n == 0) throw FlError("evaluate: empty test set");
  if (params.size() != arch.param_count()) {
    throw FlError("evaluate: params length does not match architecture");
  }
  Net net(arch, params);
  std::vector<double> hidden, probs;
  size_t correct = 0;
  for (size_t i = 0; i < test.n; ++i) {
    net.forward(&test.features[i * test.dims], test.labels[i], hidden, probs);
    size_t best = 0;
    for (size_t k = 1; k < probs.size(); ++k) {
      if (probs[k] > probs[best]) best = k;  // ties keep the lowest index
    }
    if (int(best) == test.labels[i]) ++correct;
  }
  return double(correct) / double(test.n);
}

double mean_loss(const ParamVector& params, const SyntheticDataset& data, const MlpArch& arch) {
  if (data.n == 0) throw FlError("mean_loss: empty dataset");
  Net net(arch, params);
  std::vector<double> hidden, probs;
  double total = 0.0;
  for (size_t i = 0; i < data.n; ++i) {
    total += net.forward(&data.features[i * data.dims], data.labels[i], hidden, probs);
  }
  return total / double(data.n);
}

}  // namespace fedcomm::fl
