/*
 * Copyright 2026 The relstab Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "relstab/model.h"

#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace relstab {
namespace {

constexpr std::uint64_t kShuffleTag = 0x73687566666c65ULL;  // "shuffle"

void check_input(const ModelArtifact& model, const Eigen::Ref<const Vector>& x) {
  if (x.size() != model.input_dim()) {
    throw InvalidInput("input has dimension " + std::to_string(x.size()) + ", model expects " +
                       std::to_string(model.input_dim()));
  }
}

void check_target(int num_classes, Label target) {
  if (target < 0 || target >= num_classes) {
    throw InvalidInput("target class " + std::to_string(target) + " out of range [0, " +
                       std::to_string(num_classes) + ")");
  }
}

// Parameter-shaped buffers for gradients and optimizer state.
struct Params {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;

  static Params zeros_like(const ModelArtifact& m) {
    return Params{Matrix::Zero(m.w1.rows(), m.w1.cols()), Vector::Zero(m.b1.size()),
                  Matrix::Zero(m.w2.rows(), m.w2.cols()), Vector::Zero(m.b2.size())};
  }
  void set_zero() {
    w1.setZero();
    b1.setZero();
    w2.setZero();
    b2.setZero();
  }
};

template <typename Param, typename Grad, typename State>
void rmsprop_step(Param& param, const Grad& grad, State& state, const TrainConfig& cfg) {
  state.array() = cfg.rms_decay * state.array() + (1.0 - cfg.rms_decay) * grad.array().square();
  param.array() -= cfg.learning_rate * grad.array() / (state.array().sqrt() + cfg.rms_epsilon);
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kLogistic ? "lr" : "mlp";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "lr" || text == "LR" || text == "logistic") return ModelKind::kLogistic;
  if (text == "mlp" || text == "MLP" || text == "ann") return ModelKind::kMlp;
  throw InvalidInput("unknown model kind '" + std::string(text) + "' (expected lr or mlp)");
}

int ModelArtifact::num_classes() const {
  return static_cast<int>(kind == ModelKind::kLogistic ? w1.rows() : w2.rows());
}

void ModelArtifact::validate() const {
  if (w1.size() == 0) throw InvalidInput("model has an empty first layer");
  if (b1.size() != w1.rows()) throw InvalidInput("b1 length does not match W1 rows");
  if (kind == ModelKind::kMlp) {
    if (w2.cols() != w1.rows()) throw InvalidInput("W2 columns do not match hidden width");
    if (b2.size() != w2.rows()) throw InvalidInput("b2 length does not match W2 rows");
    if (hidden_width != w1.rows()) throw InvalidInput("hidden_width does not match W1 rows");
  } else if (w2.size() != 0 || b2.size() != 0) {
    throw InvalidInput("logistic model must not carry a second layer");
  }
  if (num_classes() < 1) throw InvalidInput("model has no output classes");
  const bool finite = w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
  if (!finite) throw InvalidInput("model weights contain non-finite values");
}

Vector softmax(const Eigen::Ref<const Vector>& logits) {
  const double top = logits.maxCoeff();
  Vector e = (logits.array() - top).exp();
  return e / e.sum();
}

Label argmax(const Eigen::Ref<const Vector>& v) {
  Label best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<Label>(i);
  }
  return best;
}

ModelArtifact init_model(ModelKind kind, Eigen::Index input_dim, int num_classes,
                         int hidden_width, std::uint64_t seed) {
  if (input_dim < 1 || num_classes < 2) throw InvalidInput("init_model needs d >= 1 and C >= 2");
  if (kind == ModelKind::kMlp && hidden_width < 1) throw InvalidInput("MLP needs hidden_width >= 1");
  std::mt19937_64 rng(seed);
  auto fill = [&rng](auto& m, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  };
  ModelArtifact m;
  m.kind = kind;
  m.seed = seed;
  const auto first_rows = kind == ModelKind::kMlp ? hidden_width : num_classes;
  m.w1.resize(first_rows, input_dim);
  m.b1.resize(first_rows);
  fill(m.w1, static_cast<double>(input_dim));
  fill(m.b1, static_cast<double>(input_dim));
  if (kind == ModelKind::kMlp) {
    m.hidden_width = hidden_width;
    m.w2.resize(num_classes, hidden_width);
    m.b2.resize(num_classes);
    fill(m.w2, static_cast<double>(hidden_width));
    fill(m.b2, static_cast<double>(hidden_width));
  }
  return m;
}

ForwardTrace forward(const ModelArtifact& model, const Eigen::Ref<const Vector>& x) {
  check_input(model, x);
  ForwardTrace t;
  t.hidden_pre = model.w1 * x + model.b1;
  if (model.kind == ModelKind::kMlp) {
    t.logits = model.w2 * t.hidden_pre.cwiseMax(0.0) + model.b2;
  } else {
    t.logits = t.hidden_pre;
  }
  t.probs = softmax(t.logits);
  t.predicted = argmax(t.probs);
  return t;
}

Vector input_gradient(const ModelArtifact& model, const Eigen::Ref<const Vector>& x,
                      Label target) {
  check_input(model, x);
  check_target(model.num_classes(), target);
  if (model.kind == ModelKind::kLogistic) return model.w1.row(target).transpose();
  const Vector pre = model.w1 * x + model.b1;
  const Vector upstream =
      model.w2.row(target).transpose().cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  return model.w1.transpose() * upstream;
}

Vector representation(const ModelArtifact& model, const Eigen::Ref<const Vector>& x) {
  check_input(model, x);
  return model.w1 * x + model.b1;
}

ModelPredictor::ModelPredictor(ModelArtifact model) : model_(std::move(model)) {
  model_.validate();
}

ForwardTrace ModelPredictor::forward(const Vector& x) const { return relstab::forward(model_, x); }

Vector ModelPredictor::input_gradient(const Vector& x, Label target) const {
  return relstab::input_gradient(model_, x, target);
}

Vector finite_diff_gradient(const Predictor& model, const Vector& x, Label target, double step) {
  if (!(step > 0.0)) throw InvalidInput("finite difference step must be positive");
  check_target(model.num_classes(), target);
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = model.logits(probe)[target];
    probe[i] = x[i] - step;
    const double down = model.logits(probe)[target];
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

double accuracy(const ModelArtifact& model, const Dataset& ds) {
  if (ds.size() == 0) return 0.0;
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    if (forward(model, ds.row(i)).predicted == ds.y()[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

ModelArtifact train(const ModelArtifact& init, const Dataset& train_set, const Dataset& val_set,
                    const TrainConfig& cfg) {
  init.validate();
  if (train_set.size() == 0) throw InvalidInput("training split is empty");
  if (val_set.size() == 0) throw InvalidInput("validation split is empty");
  if (train_set.dim() != init.input_dim()) throw InvalidInput("training data dimension mismatch");
  if (train_set.num_classes() > init.num_classes()) {
    throw InvalidInput("training labels exceed the model's class count");
  }
  if (cfg.batch_size < 1 || cfg.epochs < 0) throw InvalidInput("invalid training configuration");

  ModelArtifact model = init;
  ModelArtifact best = init;
  best.training = TrainingMeta{};
  const bool mlp = model.kind == ModelKind::kMlp;

  Params grad = Params::zeros_like(model);
  Params state = Params::zeros_like(model);
  std::vector<std::size_t> order(static_cast<std::size_t>(train_set.size()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(model.seed, kShuffleTag));

  double best_acc = -1.0;
  int best_epoch = -1;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
    }
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      grad.set_zero();
      double loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const auto row = static_cast<Eigen::Index>(order[k]);
        const Vector x = train_set.row(row);
        const Label y = train_set.y()[order[k]];
        const Vector pre = model.w1 * x + model.b1;
        Vector act;
        Vector logits;
        if (mlp) {
          act = pre.cwiseMax(0.0);
          logits = model.w2 * act + model.b2;
        } else {
          logits = pre;
        }
        const double top = logits.maxCoeff();
        const double log_norm = top + std::log((logits.array() - top).exp().sum());
        loss += log_norm - logits[y];
        Vector delta = (logits.array() - log_norm).exp().matrix();  // softmax
        delta[y] -= 1.0;
        if (mlp) {
          grad.w2.noalias() += delta * act.transpose();
          grad.b2 += delta;
          const Vector back =
              (model.w2.transpose() * delta).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
          grad.w1.noalias() += back * x.transpose();
          grad.b1 += back;
        } else {
          grad.w1.noalias() += delta * x.transpose();
          grad.b1 += delta;
        }
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      if (!std::isfinite(loss)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index));
      }
      grad.w1 *= scale;
      grad.b1 *= scale;
      rmsprop_step(model.w1, grad.w1, state.w1, cfg);
      rmsprop_step(model.b1, grad.b1, state.b1, cfg);
      if (mlp) {
        grad.w2 *= scale;
        grad.b2 *= scale;
        rmsprop_step(model.w2, grad.w2, state.w2, cfg);
        rmsprop_step(model.b2, grad.b2, state.b2, cfg);
      }
    }
    const double acc = accuracy(model, val_set);
    if (acc > best_acc) {
      best_acc = acc;
      best_epoch = epoch;
      best = model;
    }
  }
  best.training.epochs_run = cfg.epochs;
  best.training.best_epoch = best_epoch;
  best.training.best_val_accuracy = best_epoch > 0 ? best_acc : accuracy(init, val_set);
  return best;
}

}  // namespace relstab
