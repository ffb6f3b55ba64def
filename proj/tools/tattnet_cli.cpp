// tattnet: generate synthetic journeys, train, evaluate, export attention maps
// and run ablations. Every artifact goes under --out.

#include <CLI11.hpp>

#include <tattnet/attention_export.hpp>
#include <tattnet/checkpoint.hpp>
#include <tattnet/config.hpp>
#include <tattnet/errors.hpp>
#include <tattnet/journey.hpp>
#include <tattnet/pipeline.hpp>
#include <tattnet/synthetic.hpp>
#include <tattnet/text_io.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace tattnet;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Seed for data generation, splitting, initialization and batching");
  cmd->add_option("--out", o.out, "Output directory")->required();
}

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig rc = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  if (o.seed) {
    rc.model.seed = *o.seed;
    rc.train.seed = *o.seed;
  }
  return rc;
}

std::string history_csv(const TrainHistory& h) {
  std::string out = "epoch,train_loss,valid_auroc,valid_auprc\n";
  for (const EpochRecord& r : h.epochs) {
    out += std::to_string(r.epoch) + ',';
    append_real(out, r.train_loss);
    out += ',';
    append_real(out, r.valid_auroc);
    out += ',';
    append_real(out, r.valid_auprc);
    out += '\n';
  }
  return out;
}

int cmd_gen_data(const CommonOptions& o) {
  const RunConfig rc = resolve_config(o);
  const std::uint64_t seed = o.seed.value_or(rc.train.seed);
  const auto journeys = generate_synthetic(rc.data, seed);
  save_journeys(fs::path(o.out) / "journeys.ndjson", journeys);
  std::size_t pos = 0;
  for (const PatientJourney& j : journeys) pos += j.label == 1;
  std::cout << "wrote " << journeys.size() << " journeys (" << pos << " positive) to " << o.out << "\n";
  return kOk;
}

int cmd_train(const CommonOptions& o, const std::string& data_path, bool quiet) {
  RunConfig rc = resolve_config(o);
  const auto journeys = load_journeys(data_path, LoadOptions{rc.fallback_values});
  const PreparedData data = prepare_data(journeys, rc.train.seed);
  const fs::path out(o.out);
  TrainingRun run = run_training(rc.model, rc.train, data, [quiet](const EpochRecord& r) {
    if (quiet) return;
    std::printf("epoch %3zu  loss %.5f  valid auroc %.4f  auprc %.4f\n", r.epoch, r.train_loss, r.valid_auroc,
                r.valid_auprc);
    std::fflush(stdout);
  });
  save_checkpoint(out / "checkpoint.json", run.model);
  save_feature_stats(out / "feature_stats.json", data.stats);
  save_split(out / "split.json", data.split);
  write_text_file(out / "history.csv", history_csv(run.history));
  write_text_file(out / "config.json", format_run_config(rc));
  std::cout << "best epoch " << run.history.best_epoch << " of " << run.history.epochs.size() << "; checkpoint in "
            << (out / "checkpoint.json").string() << "\n";
  return kOk;
}

std::vector<PatientJourney> load_standardized(const fs::path& model_dir, const std::string& data_path,
                                              const std::vector<double>& fallback) {
  auto journeys = load_journeys(data_path, LoadOptions{fallback});
  apply_feature_stats(journeys, load_feature_stats(model_dir / "feature_stats.json"));
  return journeys;
}

int cmd_eval(const CommonOptions& o, const std::string& model_dir, const std::string& data_path,
             const std::string& split_name) {
  const RunConfig rc = resolve_config(o);
  ModelParams model = load_checkpoint(fs::path(model_dir) / "checkpoint.json");
  auto journeys = load_standardized(model_dir, data_path, rc.fallback_values);
  if (split_name != "all") {
    const DatasetSplit s = load_split(fs::path(model_dir) / "split.json");
    const std::vector<std::string>* ids = split_name == "train"   ? &s.train
                                          : split_name == "valid" ? &s.valid
                                          : split_name == "test"  ? &s.test
                                                                  : nullptr;
    if (!ids) throw DataError("unknown split '" + split_name + "' (expected train, valid, test or all)");
    journeys = select_journeys(journeys, *ids);
  }
  const MetricsReport report = evaluate_model(model, journeys, o.seed.value_or(rc.train.seed));
  const std::string text = format_report(report);
  write_text_file(fs::path(o.out) / "report.txt", text);
  std::cout << text;
  return kOk;
}

int cmd_export(const CommonOptions& o, const std::string& model_dir, const std::string& data_path,
               const std::string& journey_id) {
  const RunConfig rc = resolve_config(o);
  ModelParams model = load_checkpoint(fs::path(model_dir) / "checkpoint.json");
  const auto journeys = load_standardized(model_dir, data_path, rc.fallback_values);
  const auto selected = select_journeys(journeys, {journey_id});
  const auto files = export_attention(model, selected.front(), o.out);
  std::cout << "wrote " << files.size() << " attention maps to " << o.out << "\n";
  return kOk;
}

int cmd_ablate(const CommonOptions& o, const std::string& data_path, const std::vector<std::string>& variants,
               std::optional<std::size_t> repeats) {
  const RunConfig rc = resolve_config(o);
  const std::uint64_t seed = o.seed.value_or(rc.train.seed);
  const auto journeys = data_path.empty() ? generate_synthetic(rc.data, seed)
                                          : load_journeys(data_path, LoadOptions{rc.fallback_values});
  std::string rows = "variant,repeat,seed,auroc,auprc,best_epoch\n";
  const auto records = run_ablation(rc, journeys, variants, repeats.value_or(rc.train.repeats), seed,
                                    [](const AblationRecord& r) {
                                      std::printf("%-6s repeat %zu  test auroc %.4f  auprc %.4f\n",
                                                  r.variant.c_str(), r.repeat, r.report.auroc, r.report.auprc);
                                      std::fflush(stdout);
                                    });
  for (const AblationRecord& r : records) {
    rows += r.variant + ',' + std::to_string(r.repeat) + ',' + std::to_string(r.seed) + ',' +
            format_real(r.report.auroc) + ',' + format_real(r.report.auprc) + ',' + std::to_string(r.best_epoch) +
            '\n';
  }
  std::string summary = "variant,runs,auroc_mean,auroc_std,auprc_mean,auprc_std\n";
  for (const VariantSummary& s : summarize_ablation(records)) {
    summary += s.variant + ',' + std::to_string(s.runs) + ',' + format_real(s.auroc.mean) + ',' +
               format_real(s.auroc.stddev) + ',' + format_real(s.auprc.mean) + ',' + format_real(s.auprc.stddev) +
               '\n';
  }
  write_text_file(fs::path(o.out) / "ablation_runs.csv", rows);
  write_text_file(fs::path(o.out) / "ablation_summary.csv", summary);
  std::cout << summary;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TAttNet: time-aware attention over irregular clinical time series"};
  app.require_subcommand(1);

  CommonOptions gen_o, train_o, eval_o, export_o, ablate_o;
  std::string train_data, eval_data, eval_model, eval_split = "test", export_data, export_model, export_id,
                                                 ablate_data;
  bool quiet = false;
  std::vector<std::string> variants{"full", "alpha", "beta", "gamma", "delta"};
  std::optional<std::size_t> repeats;

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic journey set (journeys.ndjson)");
  add_common(gen, gen_o);

  auto* train = app.add_subcommand("train", "Train on a journey file; writes checkpoint, stats, split and history");
  add_common(train, train_o);
  train->add_option("--data", train_data, "Journey file (NDJSON)")->required()->check(CLI::ExistingFile);
  train->add_flag("--quiet", quiet, "Suppress per-epoch progress");

  auto* eval = app.add_subcommand("eval", "Score one split with a trained model; writes report.txt");
  add_common(eval, eval_o);
  eval->add_option("--model", eval_model, "Directory written by train")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--data", eval_data, "Journey file (NDJSON)")->required()->check(CLI::ExistingFile);
  eval->add_option("--split", eval_split, "train, valid, test or all")
      ->check(CLI::IsMember({"train", "valid", "test", "all"}));

  auto* exp = app.add_subcommand("export-attention", "Write the attention maps of one journey as CSV");
  add_common(exp, export_o);
  exp->add_option("--model", export_model, "Directory written by train")->required()->check(CLI::ExistingDirectory);
  exp->add_option("--data", export_data, "Journey file (NDJSON)")->required()->check(CLI::ExistingFile);
  exp->add_option("--journey", export_id, "Journey id")->required();

  auto* abl = app.add_subcommand("ablate", "Train and test each variant over repeated seeds");
  add_common(abl, ablate_o);
  abl->add_option("--data", ablate_data, "Journey file; synthetic data from the config when omitted")
      ->check(CLI::ExistingFile);
  abl->add_option("--variants", variants, "Subset of full, alpha, beta, gamma, delta")
      ->delimiter(',')
      ->check(CLI::IsMember({"full", "alpha", "beta", "gamma", "delta"}));
  abl->add_option("--repeats", repeats, "Repeat count (default: train.repeats)")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_o);
    if (train->parsed()) return cmd_train(train_o, train_data, quiet);
    if (eval->parsed()) return cmd_eval(eval_o, eval_model, eval_data, eval_split);
    if (exp->parsed()) return cmd_export(export_o, export_model, export_data, export_id);
    if (abl->parsed()) return cmd_ablate(ablate_o, ablate_data, variants, repeats);
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
