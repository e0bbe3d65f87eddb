#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dataflip/errors.hpp"
#include "dataflip/synth.hpp"

namespace dataflip::mlp {

enum class Activation { Relu, Tanh };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation activation);

struct ModelConfig {
  std::vector<int> layer_sizes;  // input dim, hidden..., class count
  Activation activation = Activation::Relu;
  double learning_rate = 0.05;
  int epochs = 40;
  int batch_size = 32;
  std::uint64_t init_seed = 1;
  std::uint64_t shuffle_seed = 2;

  int input_dim() const { return layer_sizes.front(); }
  int num_classes() const { return layer_sizes.back(); }
  void validate() const;
  std::uint64_t hash() const;
};

struct TrainedModel {
  std::vector<Eigen::MatrixXd> weights;  // layer l: (out x in)
  std::vector<Eigen::VectorXd> biases;
  ModelConfig config;
  std::uint64_t dataset_fingerprint = 0;
  std::vector<double> epoch_losses;  // mean cross-entropy per epoch

  // Softmax class probabilities for one input; rows sum to 1.
  Eigen::VectorXd probabilities(const Eigen::VectorXd& input) const;
  // Argmax class; ties broken by lowest class index.
  int predict(const Eigen::VectorXd& input) const;
  std::uint64_t weight_hash() const;
};

struct EvalRecord {
  synth::SampleId sample_id;
  int predicted = 0;
  bool correct = false;
};

struct Metrics {
  double accuracy = 0.0;
  std::vector<double> per_class_f1;  // one entry per class, 0/0 := 0
  double macro_f1 = 0.0;             // mean over classes present in truth or predictions
};

// Deterministic minibatch SGD on softmax cross-entropy. Identical inputs
// (dataset order and seeds included) produce bit-identical weights.
TrainedModel train(const std::vector<synth::Sample>& dataset, const ModelConfig& config);

std::pair<std::vector<EvalRecord>, Metrics> evaluate(const TrainedModel& model,
                                                     const synth::TestSet& test);

Metrics compute_metrics(const std::vector<EvalRecord>& records, int num_classes);

// Loss and analytic gradients on one batch, exposed for the
// finite-difference checks. Inputs are one column per sample.
struct BatchGradients {
  std::vector<Eigen::MatrixXd> weight_grads;
  std::vector<Eigen::VectorXd> bias_grads;
  double loss = 0.0;
};

double batch_loss(const TrainedModel& model, const Eigen::MatrixXd& inputs,
                  const std::vector<int>& labels);
BatchGradients batch_gradients(const TrainedModel& model, const Eigen::MatrixXd& inputs,
                               const std::vector<int>& labels);

}  // namespace dataflip::mlp
