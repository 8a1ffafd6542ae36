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

#ifndef RELSTAB_MODEL_H_
#define RELSTAB_MODEL_H_

#include <cstdint>
#include <string_view>

#include "relstab/common.h"
#include "relstab/data.h"

namespace relstab {

enum class ModelKind { kLogistic, kMlp };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);  // "lr" | "mlp"

struct TrainingMeta {
  int epochs_run = 0;
  double best_val_accuracy = 0.0;
  int best_epoch = -1;  // 1-based; -1 when no epoch ran
};

// Weights of a logistic regression (w1: C x d logit layer, w2/b2 empty) or of
// a one-hidden-layer ReLU network (w1: h x d, w2: C x h).
struct ModelArtifact {
  ModelKind kind = ModelKind::kMlp;
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  int hidden_width = 0;
  std::uint64_t seed = 0;
  TrainingMeta training;

  Eigen::Index input_dim() const { return w1.cols(); }
  int num_classes() const;
  // Throws InvalidInput on inconsistent shapes or non-finite weights.
  void validate() const;
};

struct ForwardTrace {
  Vector hidden_pre;  // first affine layer output (== logits for LR)
  Vector logits;
  Vector probs;
  Label predicted = 0;
};

Vector softmax(const Eigen::Ref<const Vector>& logits);
// Lowest index wins ties.
Label argmax(const Eigen::Ref<const Vector>& v);

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
ModelArtifact init_model(ModelKind kind, Eigen::Index input_dim, int num_classes,
                         int hidden_width, std::uint64_t seed);

ForwardTrace forward(const ModelArtifact& model, const Eigen::Ref<const Vector>& x);
// Gradient of logits[target] with respect to x. ReLU'(0) is taken as 0.
Vector input_gradient(const ModelArtifact& model, const Eigen::Ref<const Vector>& x,
                      Label target);
Vector representation(const ModelArtifact& model, const Eigen::Ref<const Vector>& x);

// Read-only view of a classifier that explainers, samplers and metrics work
// against. Implementations must be safe to call concurrently.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual Eigen::Index input_dim() const = 0;
  virtual int num_classes() const = 0;
  virtual ForwardTrace forward(const Vector& x) const = 0;
  virtual Vector input_gradient(const Vector& x, Label target) const = 0;

  Label predict(const Vector& x) const { return forward(x).predicted; }
  Vector logits(const Vector& x) const { return forward(x).logits; }
  Vector representation(const Vector& x) const { return forward(x).hidden_pre; }
};

class ModelPredictor final : public Predictor {
 public:
  explicit ModelPredictor(ModelArtifact model);

  const ModelArtifact& artifact() const { return model_; }

  Eigen::Index input_dim() const override { return model_.input_dim(); }
  int num_classes() const override { return model_.num_classes(); }
  ForwardTrace forward(const Vector& x) const override;
  Vector input_gradient(const Vector& x, Label target) const override;

 private:
  ModelArtifact model_;
};

// Central differences of logits[target], one coordinate at a time.
Vector finite_diff_gradient(const Predictor& model, const Vector& x, Label target,
                            double step);

struct TrainConfig {
  double learning_rate = 2e-3;
  int batch_size = 32;
  int epochs = 100;
  double rms_decay = 0.99;
  double rms_epsilon = 1e-8;
};

double accuracy(const ModelArtifact& model, const Dataset& ds);

// Mini-batch RMSProp on the cross-entropy of the true-class softmax
// probability. Returns the weights of the epoch with the highest validation
// accuracy (earliest on ties). Batch order is shuffled per epoch from a seed
// derived from `model.seed`.
ModelArtifact train(const ModelArtifact& init, const Dataset& train_set, const Dataset& val_set,
                    const TrainConfig& cfg);

}  // namespace relstab

#endif  // RELSTAB_MODEL_H_
