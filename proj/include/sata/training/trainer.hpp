#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sata/config.hpp"
#include "sata/core/error.hpp"
#include "sata/core/ops.hpp"
#include "sata/model.hpp"
#include "sata/training/checkpoint.hpp"
#include "sata/training/optim.hpp"

namespace sata {

class TrainingDiverged : public NumericError {
 public:
  using NumericError::NumericError;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;  // measured on the training forward passes
  std::optional<double> dev_acc;
  double grad_norm_mean = 0.0;
  std::size_t skipped_steps = 0;
};

inline nlohmann::json to_json(const EpochMetrics& m) {
  nlohmann::json j = {{"epoch", m.epoch},
                      {"train_loss", m.train_loss},
                      {"train_acc", m.train_acc},
                      {"grad_norm_mean", m.grad_norm_mean},
                      {"skipped_steps", m.skipped_steps}};
  j["dev_acc"] = m.dev_acc ? nlohmann::json(*m.dev_acc) : nlohmann::json(nullptr);
  return j;
}

struct EvalResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  double mean_loss = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]
};

inline std::size_t argmax(const Tensor& t) {
  return static_cast<std::size_t>(std::max_element(t.data().begin(), t.data().end()) - t.data().begin());
}

namespace detail {

// Runs fn(k) for k in [0, n) split over contiguous ranges on up to `workers`
// threads.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t k = w * chunk; k < std::min(n, (w + 1) * chunk); ++k) fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : threads) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

inline Rng example_rng(std::uint64_t seed, std::size_t epoch, std::size_t batch, std::size_t position) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(batch),
                    static_cast<std::uint32_t>(position)};
  return Rng(seq);
}

}  // namespace detail

// Accuracy, mean cross entropy and confusion matrix in eval mode.
inline EvalResult evaluate(SataModel& m, const treebank::Dataset& data, std::size_t workers = 1) {
  const std::size_t classes = m.config.head.num_classes;
  EvalResult r;
  r.total = data.size();
  r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  if (data.empty()) return r;
  std::vector<std::size_t> predicted(data.size());
  std::vector<double> losses(data.size());
  detail::parallel_for(data.size(), workers, [&](std::size_t k) {
    const treebank::Example& ex = data.examples[k];
    Tape tape;
    const ForwardMode mode = ForwardMode::eval();
    Var logits = classifier_logits(forward_example(tape, ex, m, mode).head_input, m.classifier, mode);
    predicted[k] = argmax(logits.value());
    losses[k] = cross_entropy(logits, static_cast<std::size_t>(ex.label)).value().item();
  });
  double loss = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto gold = static_cast<std::size_t>(data.examples[k].label);
    r.correct += predicted[k] == gold;
    r.confusion.at(gold).at(predicted[k]) += 1;
    loss += losses[k];
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  r.mean_loss = loss / static_cast<double>(r.total);
  return r;
}

// Mini-batch trainer. Each batch is split into contiguous shards, one per
// worker; shards run on private tapes and their gradients are summed in shard
// order before clipping and the optimizer step. Batch norm statistics are
// per shard.
class Trainer {
 public:
  using EpochHook = std::function<bool(const EpochMetrics&, Trainer&)>;

  Trainer(SataModel& model, TrainConfig cfg, nlohmann::json run_config)
      : model_(model),
        cfg_(std::move(cfg)),
        run_config_(std::move(run_config)),
        optimizer_(cfg_.optimizer, cfg_.adam(), cfg_.adadelta(), model.trainable_parameters()),
        shuffle_rng_(cfg_.seed) {
    cfg_.validate();
    if (cfg_.phrase_supervision && model.config.head.task == Task::nli) {
      throw ConfigError("phrase supervision needs a single-sentence task");
    }
  }

  std::size_t epoch() const noexcept { return epoch_; }
  double best_metric() const noexcept { return best_metric_; }
  const std::optional<Checkpoint>& best() const noexcept { return best_; }
  SataModel& model() noexcept { return model_; }
  const TrainConfig& config() const noexcept { return cfg_; }

  EpochMetrics train_epoch(const treebank::Dataset& train, const treebank::Dataset* dev = nullptr) {
    if (train.empty()) throw std::invalid_argument("training set is empty");
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng_);

    EpochMetrics metrics;
    metrics.epoch = epoch_ + 1;
    double loss_sum = 0.0, norm_sum = 0.0;
    std::size_t items = 0, correct = 0, roots = 0, batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
      std::vector<const treebank::Example*> batch;
      for (std::size_t k = start; k < end; ++k) batch.push_back(&train.examples[order[k]]);
      const BatchResult b = run_batch(batch, batches);
      loss_sum += b.loss_sum;
      items += b.items;
      correct += b.correct;
      roots += batch.size();
      norm_sum += b.grad_norm;
      metrics.skipped_steps += b.skipped;
      ++batches;
    }
    metrics.train_loss = loss_sum / static_cast<double>(items);
    metrics.train_acc = static_cast<double>(correct) / static_cast<double>(roots);
    metrics.grad_norm_mean = norm_sum / static_cast<double>(batches);
    if (!std::isfinite(metrics.train_loss)) {
      throw TrainingDiverged("training loss is not finite at epoch " + std::to_string(metrics.epoch));
    }
    if (dev != nullptr && !dev->empty()) metrics.dev_acc = evaluate(model_, *dev, cfg_.workers).accuracy;
    ++epoch_;

    const double metric = (cfg_.selection == "dev_acc" && metrics.dev_acc) ? *metrics.dev_acc : metrics.train_acc;
    if (metric > best_metric_) {
      best_metric_ = metric;
      best_ = checkpoint();
    }
    return metrics;
  }

  // Trains until cfg.epochs epochs have completed (counting any restored ones)
  // or the hook returns false.
  std::vector<EpochMetrics> fit(const treebank::Dataset& train, const treebank::Dataset* dev = nullptr,
                                const EpochHook& on_epoch_end = {}) {
    std::vector<EpochMetrics> out;
    while (epoch_ < cfg_.epochs) {
      out.push_back(train_epoch(train, dev));
      if (on_epoch_end && !on_epoch_end(out.back(), *this)) break;
    }
    return out;
  }

  Checkpoint checkpoint() const {
    Checkpoint c;
    c.digest = config_digest(model_.config);
    c.meta = model_meta(model_, run_config_);
    c.epoch = epoch_;
    c.best_metric = best_metric_;
    c.rng_state = rng_to_string(shuffle_rng_);
    c.tensors = model_tensors(model_);
    for (auto& t : optimizer_.state_tensors()) c.tensors.push_back(std::move(t));
    return c;
  }

  void restore(const Checkpoint& c) {
    if (c.digest != config_digest(model_.config)) throw CheckpointError("checkpoint was written for another model config");
    load_model_tensors(c, model_);
    optimizer_.load_state([&c](const std::string& name) { return c.find(name); });
    epoch_ = static_cast<std::size_t>(c.epoch);
    best_metric_ = c.best_metric;
    shuffle_rng_ = rng_from_string(c.rng_state);
  }

 private:
  struct ShardResult {
    std::vector<GradContribution> grads;
    std::optional<BatchStats> stats;
    double loss_sum = 0.0;
    std::size_t items = 0;
    std::size_t correct = 0;
  };

  struct BatchResult {
    double loss_sum = 0.0;
    std::size_t items = 0;
    std::size_t correct = 0;
    double grad_norm = 0.0;
    std::size_t skipped = 0;
  };

  std::size_t labelled_items(const treebank::Example& ex) const {
    std::size_t n = 1;
    if (cfg_.phrase_supervision && !ex.node_labels.empty()) {
      for (std::size_t j = 0; j + 1 < ex.node_labels.size(); ++j) n += ex.node_labels[j] >= 0;
    }
    return n;
  }

  ShardResult run_shard(std::span<const treebank::Example* const> shard, std::size_t batch_index,
                        std::size_t first_position, double denominator) {
    ShardResult r;
    Tape tape;
    std::vector<Rng> rngs;
    rngs.reserve(shard.size());
    std::vector<Var> inputs;
    std::vector<std::size_t> owner, labels;
    std::vector<std::size_t> root_slot;
    for (std::size_t k = 0; k < shard.size(); ++k) {
      const treebank::Example& ex = *shard[k];
      rngs.push_back(detail::example_rng(cfg_.seed, epoch_, batch_index, first_position + k));
      const ForwardMode mode = ForwardMode::training(rngs.back());
      ExampleForward f = forward_example(tape, ex, model_, mode);
      root_slot.push_back(inputs.size());
      inputs.push_back(f.head_input);
      owner.push_back(k);
      labels.push_back(static_cast<std::size_t>(ex.label));
      if (cfg_.phrase_supervision && !ex.node_labels.empty()) {
        for (std::size_t j = 0; j + 1 < ex.node_labels.size(); ++j) {
          if (ex.node_labels[j] < 0) continue;
          inputs.push_back(f.premise.nodes.at(j).word.h);
          owner.push_back(k);
          labels.push_back(static_cast<std::size_t>(ex.node_labels[j]));
        }
      }
    }
    BatchStats stats;
    const ForwardMode norm_mode{true, nullptr};
    std::vector<Var> normalized = normalize_inputs(inputs, model_.classifier, norm_mode, &stats);
    if (stats.count > 0) r.stats = stats;
    std::vector<Var> losses;
    for (std::size_t i = 0; i < normalized.size(); ++i) {
      Var logits = classifier_mlp(normalized[i], model_.classifier, ForwardMode::training(rngs[owner[i]]));
      Var ce = cross_entropy(logits, labels[i]);
      r.loss_sum += ce.value().item();
      losses.push_back(ce);
      if (std::find(root_slot.begin(), root_slot.end(), i) != root_slot.end()) {
        r.correct += argmax(logits.value()) == labels[i];
      }
    }
    r.items = losses.size();
    Var loss = scale(add_all(losses), 1.0 / denominator);
    r.grads = tape.gradients(loss);
    return r;
  }

  BatchResult run_batch(const std::vector<const treebank::Example*>& batch, std::size_t batch_index) {
    double denominator = 0.0;
    for (const treebank::Example* ex : batch) denominator += static_cast<double>(labelled_items(*ex));

    const std::size_t shards = std::max<std::size_t>(1, std::min(cfg_.workers, batch.size()));
    const std::size_t chunk = (batch.size() + shards - 1) / shards;
    std::vector<ShardResult> results(shards);
    std::vector<std::string> errors(shards);
    auto work = [&](std::size_t s) {
      const std::size_t lo = std::min(batch.size(), s * chunk), hi = std::min(batch.size(), (s + 1) * chunk);
      if (lo == hi) return;
      try {
        results[s] = run_shard(std::span(batch).subspan(lo, hi - lo), batch_index, lo, denominator);
      } catch (const NumericError& e) {
        errors[s] = e.what();
      }
    };
    if (shards == 1) {
      work(0);
    } else {
      std::vector<std::thread> threads;
      for (std::size_t s = 0; s < shards; ++s) threads.emplace_back(work, s);
      for (std::thread& t : threads) t.join();
    }
    for (const std::string& e : errors) {
      if (!e.empty()) {
        throw TrainingDiverged("diverged at epoch " + std::to_string(epoch_ + 1) + ", batch " +
                               std::to_string(batch_index) + ": " + e);
      }
    }

    const std::vector<Parameter*>& params = optimizer_.params();
    for (Parameter* p : params) p->zero_grad();
    BatchResult b;
    for (const ShardResult& r : results) {
      for (const GradContribution& g : r.grads) apply_contribution(g);
      b.loss_sum += r.loss_sum;
      b.items += r.items;
      b.correct += r.correct;
    }
    b.grad_norm = clip_grad_norm(params, cfg_.clip);
    if (!optimizer_.step()) b.skipped = 1;
    for (const ShardResult& r : results)
      if (r.stats) model_.classifier.update_running_stats(*r.stats);
    return b;
  }

  SataModel& model_;
  TrainConfig cfg_;
  nlohmann::json run_config_;
  Optimizer optimizer_;
  Rng shuffle_rng_;
  std::size_t epoch_ = 0;
  double best_metric_ = -std::numeric_limits<double>::infinity();
  std::optional<Checkpoint> best_;
};

// Contiguous k-fold split after a seeded shuffle: fold i is the held-out part.
inline std::pair<treebank::Dataset, treebank::Dataset> cv_split(const treebank::Dataset& data, std::size_t folds,
                                                                std::size_t fold, std::uint64_t seed) {
  if (folds < 2 || fold >= folds) throw ConfigError("invalid cross-validation fold");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  treebank::Dataset train, held;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k % folds == fold ? held : train).examples.push_back(data.examples[order[k]]);
  }
  return {std::move(train), std::move(held)};
}

}  // namespace sata
