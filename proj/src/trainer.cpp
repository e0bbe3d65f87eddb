#include "dataflip/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "dataflip/hash.hpp"

namespace dataflip::mlp {

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  throw ValidationError("unknown activation '" + name + "' (expected relu or tanh)");
}

std::string to_string(Activation activation) {
  return activation == Activation::Relu ? "relu" : "tanh";
}

void ModelConfig::validate() const {
  if (layer_sizes.size() < 3) {
    throw ValidationError("model: need input, at least one hidden, and output layer");
  }
  for (int size : layer_sizes) {
    if (size < 1) throw ValidationError("model: layer sizes must be positive");
  }
  if (!(learning_rate > 0.0)) throw ValidationError("model: learning_rate must be > 0");
  if (epochs < 1) throw ValidationError("model: epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("model: batch_size must be >= 1");
}

std::uint64_t ModelConfig::hash() const {
  std::uint64_t h = hash_string("model-config");
  for (int size : layer_sizes) h = hash_combine(h, static_cast<std::uint64_t>(size));
  h = hash_combine(h, static_cast<std::uint64_t>(activation));
  h = hash_combine(h, hash_double(learning_rate));
  h = hash_combine(h, static_cast<std::uint64_t>(epochs));
  h = hash_combine(h, static_cast<std::uint64_t>(batch_size));
  h = hash_combine(h, init_seed);
  return hash_combine(h, shuffle_seed);
}

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation activation) {
  if (activation == Activation::Relu) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& z, Activation activation) {
  if (activation == Activation::Relu) {
    return (z.array() > 0.0).cast<double>().matrix();
  }
  return (1.0 - z.array().tanh().square()).matrix();
}

// Column-wise stable softmax.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const Eigen::ArrayXd shifted = logits.col(j).array() - logits.col(j).maxCoeff();
    const Eigen::ArrayXd exps = shifted.exp();
    p.col(j) = (exps / exps.sum()).matrix();
  }
  return p;
}

struct ForwardPass {
  std::vector<Eigen::MatrixXd> pre;         // z per layer
  std::vector<Eigen::MatrixXd> activated;   // hidden activations (size = layers - 1)
  Eigen::MatrixXd probs;                    // softmax of the last layer
  double loss = 0.0;
};

ForwardPass forward(const TrainedModel& model, const Eigen::MatrixXd& inputs,
                    const std::vector<int>& labels) {
  const auto layers = model.weights.size();
  ForwardPass pass;
  pass.pre.reserve(layers);
  const Eigen::MatrixXd* current = &inputs;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = model.weights[l] * (*current);
    z.colwise() += model.biases[l];
    pass.pre.push_back(std::move(z));
    if (l + 1 < layers) {
      pass.activated.push_back(activate(pass.pre.back(), model.config.activation));
      current = &pass.activated.back();
    }
  }
  pass.probs = softmax(pass.pre.back());

  const auto batch = inputs.cols();
  double loss = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    loss -= std::log(pass.probs(labels[static_cast<std::size_t>(j)], j));
  }
  pass.loss = loss / static_cast<double>(batch);
  return pass;
}

BatchGradients backward(const TrainedModel& model, const Eigen::MatrixXd& inputs,
                        const std::vector<int>& labels, const ForwardPass& pass) {
  const auto layers = model.weights.size();
  const auto batch = inputs.cols();

  BatchGradients grads;
  grads.loss = pass.loss;
  grads.weight_grads.resize(layers);
  grads.bias_grads.resize(layers);

  // dL/dz for the output layer of mean cross-entropy over softmax.
  Eigen::MatrixXd delta = pass.probs;
  for (Eigen::Index j = 0; j < batch; ++j) {
    delta(labels[static_cast<std::size_t>(j)], j) -= 1.0;
  }
  delta /= static_cast<double>(batch);

  for (std::size_t l = layers; l-- > 0;) {
    const Eigen::MatrixXd& below = l == 0 ? inputs : pass.activated[l - 1];
    grads.weight_grads[l] = delta * below.transpose();
    grads.bias_grads[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = (model.weights[l].transpose() * delta)
                  .cwiseProduct(activation_grad(pass.pre[l - 1], model.config.activation));
    }
  }
  return grads;
}

std::uint64_t dataset_fingerprint(const std::vector<synth::Sample>& dataset) {
  std::uint64_t h = hash_string("dataset");
  for (const auto& s : dataset) {
    h = hash_combine(h, static_cast<std::uint64_t>(s.id.class_index));
    h = hash_combine(h, static_cast<std::uint64_t>(s.id.draw_index));
    h = hash_combine(h, static_cast<std::uint64_t>(s.label));
    for (double f : s.features) h = hash_combine(h, hash_double(f));
  }
  return h;
}

}  // namespace

Eigen::VectorXd TrainedModel::probabilities(const Eigen::VectorXd& input) const {
  Eigen::VectorXd current = input;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::VectorXd z = weights[l] * current + biases[l];
    if (l + 1 < weights.size()) {
      current = config.activation == Activation::Relu
                    ? z.cwiseMax(0.0).eval()
                    : z.array().tanh().matrix().eval();
    } else {
      current = std::move(z);
    }
  }
  const Eigen::ArrayXd shifted = current.array() - current.maxCoeff();
  const Eigen::ArrayXd exps = shifted.exp();
  return (exps / exps.sum()).matrix();
}

int TrainedModel::predict(const Eigen::VectorXd& input) const {
  const Eigen::VectorXd p = probabilities(input);
  int best = 0;
  for (int i = 1; i < p.size(); ++i) {
    if (p(i) > p(best)) best = i;  // strict: ties keep the lowest index
  }
  return best;
}

std::uint64_t TrainedModel::weight_hash() const {
  std::uint64_t h = hash_string("weights");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = hash_bytes(weights[l].data(),
                   static_cast<std::size_t>(weights[l].size()) * sizeof(double), h);
    h = hash_bytes(biases[l].data(),
                   static_cast<std::size_t>(biases[l].size()) * sizeof(double), h);
  }
  return h;
}

TrainedModel train(const std::vector<synth::Sample>& dataset, const ModelConfig& config) {
  config.validate();
  if (dataset.empty()) throw ValidationError("train: dataset is empty");
  const int input_dim = config.input_dim();
  const int num_classes = config.num_classes();
  for (const auto& s : dataset) {
    if (static_cast<int>(s.features.size()) != input_dim) {
      throw ValidationError("train: sample feature dim " + std::to_string(s.features.size()) +
                            " does not match input layer " + std::to_string(input_dim));
    }
    if (s.label < 0 || s.label >= num_classes) {
      throw ValidationError("train: label " + std::to_string(s.label) +
                            " outside output layer of size " + std::to_string(num_classes));
    }
  }

  TrainedModel model;
  model.config = config;
  model.dataset_fingerprint = dataset_fingerprint(dataset);

  // Scaled uniform fan-in initialization, biases at zero. Coefficients are
  // filled in a fixed row-major order so the stream layout is part of the
  // determinism contract.
  Rng init_rng(config.init_seed);
  for (std::size_t l = 0; l + 1 < config.layer_sizes.size(); ++l) {
    const int fan_in = config.layer_sizes[l];
    const int fan_out = config.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / fan_in);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        w(r, c) = init_rng.uniform(-limit, limit);
      }
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }

  const auto n = dataset.size();
  Eigen::MatrixXd features(input_dim, static_cast<Eigen::Index>(n));
  std::vector<int> all_labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int f = 0; f < input_dim; ++f) {
      features(f, static_cast<Eigen::Index>(i)) = dataset[i].features[static_cast<std::size_t>(f)];
    }
    all_labels[i] = dataset[i].label;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(config.shuffle_seed);

  model.epoch_losses.reserve(static_cast<std::size_t>(config.epochs));
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    int batch_index = 0;
    for (std::size_t start = 0; start < n; start += batch_size, ++batch_index) {
      const std::size_t count = std::min(batch_size, n - start);
      Eigen::MatrixXd batch(input_dim, static_cast<Eigen::Index>(count));
      std::vector<int> labels(count);
      for (std::size_t i = 0; i < count; ++i) {
        batch.col(static_cast<Eigen::Index>(i)) =
            features.col(static_cast<Eigen::Index>(order[start + i]));
        labels[i] = all_labels[order[start + i]];
      }

      const ForwardPass pass = forward(model, batch, labels);
      if (!std::isfinite(pass.loss)) {
        throw ValidationError("train: non-finite loss at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(batch_index));
      }
      const BatchGradients grads = backward(model, batch, labels, pass);
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        model.weights[l] -= config.learning_rate * grads.weight_grads[l];
        model.biases[l] -= config.learning_rate * grads.bias_grads[l];
      }
      epoch_loss += pass.loss * static_cast<double>(count);
    }
    model.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
  }
  return model;
}

std::pair<std::vector<EvalRecord>, Metrics> evaluate(const TrainedModel& model,
                                                     const synth::TestSet& test) {
  if (test.samples.empty()) throw ValidationError("evaluate: test set is empty");
  const int input_dim = model.config.input_dim();
  std::vector<EvalRecord> records;
  records.reserve(test.samples.size());
  Eigen::VectorXd input(input_dim);
  for (const auto& s : test.samples) {
    if (static_cast<int>(s.features.size()) != input_dim) {
      throw ValidationError("evaluate: feature dim mismatch");
    }
    for (int f = 0; f < input_dim; ++f) input(f) = s.features[static_cast<std::size_t>(f)];
    const int predicted = model.predict(input);
    records.push_back(EvalRecord{s.id, predicted, predicted == s.label});
  }
  return {records, compute_metrics(records, model.config.num_classes())};
}

Metrics compute_metrics(const std::vector<EvalRecord>& records, int num_classes) {
  if (records.empty()) throw ValidationError("metrics: no records");
  std::vector<long> tp(static_cast<std::size_t>(num_classes), 0);
  std::vector<long> fp(static_cast<std::size_t>(num_classes), 0);
  std::vector<long> fn(static_cast<std::size_t>(num_classes), 0);
  long correct = 0;
  for (const auto& r : records) {
    const auto truth = static_cast<std::size_t>(r.sample_id.class_index);
    const auto pred = static_cast<std::size_t>(r.predicted);
    if (r.correct) {
      ++tp[truth];
      ++correct;
    } else {
      ++fp[pred];
      ++fn[truth];
    }
  }

  Metrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(records.size());
  m.per_class_f1.assign(static_cast<std::size_t>(num_classes), 0.0);
  double f1_sum = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < static_cast<std::size_t>(num_classes); ++c) {
    const long denom = 2 * tp[c] + fp[c] + fn[c];
    // 0/0 := 0; classes absent from both truth and predictions are excluded
    // from the macro average.
    m.per_class_f1[c] = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
    if (tp[c] + fp[c] + fn[c] > 0) {
      f1_sum += m.per_class_f1[c];
      ++present;
    }
  }
  m.macro_f1 = present == 0 ? 0.0 : f1_sum / present;
  return m;
}

double batch_loss(const TrainedModel& model, const Eigen::MatrixXd& inputs,
                  const std::vector<int>& labels) {
  return forward(model, inputs, labels).loss;
}

BatchGradients batch_gradients(const TrainedModel& model, const Eigen::MatrixXd& inputs,
                               const std::vector<int>& labels) {
  const ForwardPass pass = forward(model, inputs, labels);
  return backward(model, inputs, labels, pass);
}

}  // namespace dataflip::mlp
