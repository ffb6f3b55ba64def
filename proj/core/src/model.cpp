#include "tattnet/model.hpp"

#include "tattnet/errors.hpp"

namespace tattnet {

void ModelConfig::validate() const {
  if (features == 0 || max_visits == 0 || heads == 0 || key_dim == 0 || ffn_dim == 0 || stacked_depth == 0 ||
      hidden == 0 || coupled == 0) {
    throw ContractError("model dimensions must all be >= 1");
  }
  if (disable_short && disable_long) {
    throw ContractError("at least one of the short-term and long-term modules must stay enabled");
  }
}

std::string variant_name(const ModelConfig& c) {
  std::string name;
  auto add = [&name](const char* part) { name += (name.empty() ? "" : "+") + std::string(part); };
  if (c.disable_stacked) add("alpha");
  if (c.disable_short) add("beta");
  if (c.disable_long) add("gamma");
  if (c.disable_coupled) add("delta");
  return name.empty() ? "full" : name;
}

void ModelParams::visit(const ParameterVisitor& visitor) {
  if (stacked) stacked->visit("stacked", visitor);
  if (time_encoder) time_encoder->visit("time_encoder", visitor);
  if (short_term) short_term->visit("short_term", visitor);
  if (long_term) long_term->visit("long_term", visitor);
  coupled.visit("coupled", visitor);
}

std::size_t ModelParams::parameter_count() {
  std::size_t n = 0;
  visit([&n](const std::string&, Parameter& p) { n += p.size(); });
  return n;
}

void ModelParams::zero_grad() {
  visit([](const std::string&, Parameter& p) { p.zero_grad(); });
}

ModelParams assemble_model(const ModelConfig& config) {
  config.validate();
  ModelParams model;
  model.config = config;
  Rng rng(config.seed);
  if (!config.disable_stacked) {
    model.stacked = StackedAttentionParams::create(
        {config.features, config.max_visits, config.heads, config.key_dim, config.ffn_dim, config.stacked_depth});
    model.stacked->initialize(rng);
  }
  if (!config.disable_short) {
    model.time_encoder = TimeEncoderParams::create(config.features);
    model.time_encoder->initialize(rng);
    model.short_term = ShortTermParams::create(config.features);
    model.short_term->initialize(rng);
  }
  if (!config.disable_long) {
    model.long_term = LongTermParams::create(
        {config.features, config.hidden, config.diagnosis_codes, config.procedure_codes, config.activation});
    model.long_term->initialize(rng);
  }
  model.coupled = CoupledParams::create({config.features, config.max_visits, config.coupled, !config.disable_coupled});
  model.coupled.initialize(rng);
  return model;
}

void check_compatible(const ModelConfig& c, const PatientJourney& j) {
  if (j.features() != c.features) {
    throw DataError("journey '" + j.id + "' has " + std::to_string(j.features()) + " features, model expects " +
                    std::to_string(c.features));
  }
  if (j.visits() > c.max_visits) {
    throw DataError("journey '" + j.id + "' has " + std::to_string(j.visits()) + " visits, model T_max is " +
                    std::to_string(c.max_visits));
  }
  if (j.r_c.size() != c.diagnosis_codes || j.r_d.size() != c.procedure_codes) {
    throw DataError("journey '" + j.id + "' code vector lengths do not match g_c/g_d of the model");
  }
}

namespace {

std::vector<bool> observed_features(const Tensor& observed) {
  std::vector<bool> any(observed.rows(), false);
  for (std::size_t n = 0; n < observed.rows(); ++n)
    for (std::size_t t = 0; t < observed.cols(); ++t) any[n] = any[n] || observed(n, t) != 0.0;
  return any;
}

}  // namespace

ForwardTrace forward_from_embeddings(Var h, ModelParams& model, const PatientJourney& journey,
                                     const ForwardOptions& options) {
  Tape& tape = h.tape();
  ForwardTrace trace;
  trace.h = h;

  const Tensor* observed = options.apply_observation_mask && journey.observed ? &*journey.observed : nullptr;
  if (model.short_term) {
    Var delta_enc = encode_intervals(tape, journey.mu, *model.time_encoder);
    trace.short_term = short_term_forward(interleave(h, delta_enc), *model.short_term, observed);
  }
  if (model.long_term) {
    trace.long_term = long_term_forward(h, journey.mu, journey.r_c, journey.r_d, *model.long_term);
  }

  // A disabled temporal path is replaced by a copy of the other one.
  Var short_rep = trace.short_term ? trace.short_term->k_star : trace.long_term->e_star;
  Var long_rep = trace.long_term ? trace.long_term->e_star : trace.short_term->k_star;
  trace.u = couple(short_rep, long_rep, model.coupled);

  if (options.pool_visit) {
    trace.pool = visit_pool(trace.u, *options.pool_visit);
  } else if (model.config.disable_coupled) {
    trace.pool = mean_pool(trace.u);
  } else {
    trace.pool = attention_pool(trace.u, model.coupled);
  }
  trace.y_hat = predict(trace.pool.pooled, model.coupled);
  return trace;
}

ForwardTrace forward(Tape& tape, ModelParams& model, const PatientJourney& journey, const ForwardOptions& options) {
  check_compatible(model.config, journey);
  Var r = tape.constant(journey.r);
  if (!model.stacked) {
    return forward_from_embeddings(r, model, journey, options);
  }
  std::vector<bool> key_observed;
  const std::vector<bool>* key_mask = nullptr;
  if (options.apply_observation_mask && journey.observed) {
    key_observed = observed_features(*journey.observed);
    bool any = false;
    for (bool b : key_observed) any = any || b;
    if (any) key_mask = &key_observed;
  }
  StackedAttentionOutput stacked = stacked_attention_forward(r, *model.stacked, key_mask);
  ForwardTrace trace = forward_from_embeddings(stacked.h, model, journey, options);
  trace.xi = std::move(stacked.xi);
  return trace;
}

double predict_positive(ModelParams& model, const PatientJourney& journey) {
  Tape tape;
  return forward(tape, model, journey).y_hat.value()[1];
}

}  // namespace tattnet
