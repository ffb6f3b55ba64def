#include "tattnet/pipeline.hpp"

#include <algorithm>

#include "tattnet/errors.hpp"

namespace tattnet {

PreparedData prepare_data(const std::vector<PatientJourney>& journeys, std::uint64_t split_seed) {
  PreparedData d;
  d.split = split_journeys(journeys, split_seed);
  d.train = select_journeys(journeys, d.split.train);
  d.valid = select_journeys(journeys, d.split.valid);
  d.test = select_journeys(journeys, d.split.test);
  d.stats = fit_feature_stats(d.train);
  apply_feature_stats(d.train, d.stats);
  apply_feature_stats(d.valid, d.stats);
  apply_feature_stats(d.test, d.stats);
  d.weights = compute_class_weights(d.train);
  return d;
}

TrainingRun run_training(const ModelConfig& model_config, const TrainConfig& train_config, const PreparedData& data,
                         const EpochCallback& on_epoch) {
  TrainingRun run{assemble_model(model_config), {}, {}};
  run.history = train_model(run.model, data.train, data.valid, data.weights, train_config, on_epoch);
  run.test_report = evaluate_model(run.model, data.test, train_config.seed);
  return run;
}

ModelConfig with_variant(ModelConfig c, const std::string& variant) {
  if (variant == "full") return c;
  if (variant == "alpha") c.disable_stacked = true;
  else if (variant == "beta") c.disable_short = true;
  else if (variant == "gamma") c.disable_long = true;
  else if (variant == "delta") c.disable_coupled = true;
  else throw DataError("unknown variant '" + variant + "' (expected full, alpha, beta, gamma or delta)");
  return c;
}

std::vector<AblationRecord> run_ablation(const RunConfig& config, const std::vector<PatientJourney>& journeys,
                                         const std::vector<std::string>& variants, std::size_t repeats,
                                         std::uint64_t base_seed,
                                         const std::function<void(const AblationRecord&)>& on_record) {
  std::vector<ModelConfig> configs;
  for (const std::string& v : variants) configs.push_back(with_variant(config.model, v));
  std::vector<AblationRecord> records;
  for (std::size_t r = 0; r < repeats; ++r) {
    const std::uint64_t seed = base_seed + r;
    const PreparedData data = prepare_data(journeys, seed);
    for (std::size_t k = 0; k < variants.size(); ++k) {
      ModelConfig mc = configs[k];
      mc.seed = seed;
      TrainConfig tc = config.train;
      tc.seed = seed;
      TrainingRun run = run_training(mc, tc, data);
      AblationRecord rec{variants[k], r, seed, run.test_report, run.history.best_epoch};
      if (on_record) on_record(rec);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

std::vector<VariantSummary> summarize_ablation(const std::vector<AblationRecord>& records) {
  std::vector<std::string> order;
  for (const AblationRecord& r : records)
    if (std::find(order.begin(), order.end(), r.variant) == order.end()) order.push_back(r.variant);
  std::vector<VariantSummary> out;
  for (const std::string& v : order) {
    std::vector<double> roc, pr;
    for (const AblationRecord& r : records)
      if (r.variant == v) {
        roc.push_back(r.report.auroc);
        pr.push_back(r.report.auprc);
      }
    out.push_back({v, summarize(roc), summarize(pr), roc.size()});
  }
  return out;
}

}  // namespace tattnet
