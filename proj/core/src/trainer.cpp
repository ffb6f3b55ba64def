#include "tattnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tattnet/errors.hpp"

namespace tattnet {

void TrainConfig::validate() const {
  if (optimizer != "adam") throw ContractError("unsupported optimizer '" + optimizer + "' (only adam)");
  if (!(learning_rate >= 0.0)) throw ContractError("learning_rate must be >= 0");
  if (epochs == 0 || batch_size == 0 || patience == 0 || repeats == 0) {
    throw ContractError("epochs, batch_size, patience and repeats must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw ContractError("invalid Adam hyperparameters");
  }
}

AdamOptimizer::AdamOptimizer(ModelParams& model, const TrainConfig& config)
    : model_(model), lr_(config.learning_rate), beta1_(config.beta1), beta2_(config.beta2), eps_(config.epsilon) {
  model_.visit([this](const std::string&, Parameter& p) {
    first_.emplace_back(p.value.shape());
    second_.emplace_back(p.value.shape());
  });
}

void AdamOptimizer::step() {
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  std::size_t k = 0;
  model_.visit([&](const std::string&, Parameter& p) {
    Tensor& m = first_[k];
    Tensor& v = second_[k];
    ++k;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      p.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  });
}

double mean_loss(ModelParams& model, const std::vector<PatientJourney>& journeys, const ClassWeights& weights) {
  if (journeys.empty()) return 0.0;
  double total = 0.0;
  for (const PatientJourney& j : journeys) {
    Tape tape;
    total += journey_loss(forward(tape, model, j).y_hat, j.label, weights).value()[0];
  }
  return total / static_cast<double>(journeys.size());
}

double accumulate_batch_gradient(ModelParams& model, const std::vector<const PatientJourney*>& batch,
                                 const ClassWeights& weights) {
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const PatientJourney* j : batch) {
    Tape tape;
    Var loss = journey_loss(forward(tape, model, *j).y_hat, j->label, weights);
    const double value = loss.value()[0];
    if (!std::isfinite(value)) return value;
    total += value;
    tape.backward(ad::scale(loss, inv));
  }
  return total * inv;
}

ScoredSet score_journeys(ModelParams& model, const std::vector<PatientJourney>& journeys) {
  ScoredSet s;
  s.scores.reserve(journeys.size());
  s.labels.reserve(journeys.size());
  for (const PatientJourney& j : journeys) {
    s.scores.push_back(predict_positive(model, j));
    s.labels.push_back(j.label);
  }
  return s;
}

namespace {

std::vector<Tensor> snapshot(ModelParams& model) {
  std::vector<Tensor> values;
  model.visit([&values](const std::string&, Parameter& p) { values.push_back(p.value); });
  return values;
}

void restore(ModelParams& model, const std::vector<Tensor>& values) {
  std::size_t k = 0;
  model.visit([&](const std::string&, Parameter& p) { p.value = values[k++]; });
}

std::string norm_diagnostics(ModelParams& model) {
  std::ostringstream os;
  model.visit([&os](const std::string& name, Parameter& p) {
    double v = 0.0, g = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      v += p.value[i] * p.value[i];
      g += p.grad[i] * p.grad[i];
    }
    os << "\n  " << name << ": |value|=" << std::sqrt(v) << " |grad|=" << std::sqrt(g);
  });
  return os.str();
}

bool has_both_classes(const std::vector<PatientJourney>& js) {
  bool pos = false, neg = false;
  for (const PatientJourney& j : js) (j.label == 1 ? pos : neg) = true;
  return pos && neg;
}

}  // namespace

TrainHistory train_model(ModelParams& model, const std::vector<PatientJourney>& train,
                         const std::vector<PatientJourney>& valid, const ClassWeights& weights,
                         const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train.empty()) throw DataError("training split is empty");
  for (const PatientJourney& j : train) check_compatible(model.config, j);
  for (const PatientJourney& j : valid) check_compatible(model.config, j);

  AdamOptimizer adam(model, config);
  std::mt19937_64 rng(config.seed);
  std::vector<const PatientJourney*> order;
  order.reserve(train.size());
  for (const PatientJourney& j : train) order.push_back(&j);

  const bool score_on_valid = has_both_classes(valid);
  TrainHistory history;
  std::vector<Tensor> best = snapshot(model);
  bool have_best = false;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const PatientJourney*> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(end));
      model.zero_grad();
      const double loss = accumulate_batch_gradient(model, batch, weights);
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << ", batch " << batch_index + 1 << "; parameter norms:"
           << norm_diagnostics(model);
        throw NumericalAbort(os.str());
      }
      adam.step();
      loss_sum += loss * static_cast<double>(batch.size());
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(order.size());
    double score = -record.train_loss;
    if (score_on_valid) {
      const ScoredSet s = score_journeys(model, valid);
      record.valid_auroc = auroc(s);
      record.valid_auprc = auprc(s);
      score = record.valid_auprc;
    }
    history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    if (!have_best || score > history.best_score) {
      have_best = true;
      history.best_score = score;
      history.best_epoch = epoch;
      best = snapshot(model);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      history.stopped_early = true;
      break;
    }
  }
  restore(model, best);
  model.zero_grad();
  return history;
}

MetricsReport evaluate_model(ModelParams& model, const std::vector<PatientJourney>& journeys, std::uint64_t seed) {
  if (journeys.empty()) throw DataError("cannot evaluate an empty split");
  return make_report(score_journeys(model, journeys), seed);
}

}  // namespace tattnet
