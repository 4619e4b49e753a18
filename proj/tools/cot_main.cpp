#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cot/calibration.hpp"
#include "cot/errors.hpp"
#include "cot/estimators.hpp"
#include "cot/io.hpp"
#include "cot/metrics.hpp"
#include "cot/ot.hpp"
#include "cot/rng.hpp"
#include "cot/synth.hpp"
#include "cot/types.hpp"

namespace {

using namespace cot;

struct EstimateArgs {
  std::string method;
  std::string target_path;
  std::string val_path;
  std::string calib_path;
  std::string label_dist_path;
  std::string second_target_path;
  std::string out_path;
  std::string score = "mc";
  std::size_t batch_size = 2000;
  std::uint64_t seed = 0;
};

struct EvaluateArgs {
  std::string manifest_path;
  std::string methods = "cot,ac,entropy,atc_mc,atc_ne";
  std::string val_path;
  std::string calib_path;
  std::string out_dir;
  std::size_t batch_size = 2000;
  std::uint64_t seed = 0;
};

CalibrationModel load_calibration(const std::string& calib_path,
                                  std::size_t num_classes) {
  if (!calib_path.empty()) return read_calibration_json(calib_path);
  CalibrationModel identity;
  identity.temperature = 1.0;
  identity.num_classes = num_classes;
  return identity;
}

void warn_small_batches(std::size_t batch_size, std::size_t num_classes) {
  if (batch_size < 10 * num_classes) {
    std::fprintf(stderr,
                 "warning: batch size %zu is below 10 samples per class "
                 "(10*%zu); COT batch estimates will be noisy\n",
                 batch_size, num_classes);
  }
}

int run_calibrate(const std::string& val_path, const std::string& out_path) {
  const LogitsDataset val = read_logits_csv(val_path);
  const CalibrationModel model = fit_temperature(val);
  write_file_atomic(out_path, calibration_to_json(model));
  std::printf("temperature      %.6g\n", model.temperature);
  std::printf("accuracy         %.6g\n", model.diagnostics.accuracy);
  std::printf("mean confidence  %.6g\n",
              model.diagnostics.mean_confidence_after);
  std::printf("nll   before %.6g  after %.6g\n", model.diagnostics.nll_before,
              model.diagnostics.nll_after);
  std::printf("ece   before %.6g  after %.6g\n", model.diagnostics.ece_before,
              model.diagnostics.ece_after);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

AtcScore parse_score(const std::string& score) {
  if (score == "mc") return AtcScore::kMaxConfidence;
  if (score == "ne") return AtcScore::kNegativeEntropy;
  throw ValidationError("unknown score variant '" + score +
                        "' (expected mc or ne)");
}

int run_estimate(const EstimateArgs& args) {
  const LogitsDataset target = read_logits_csv(args.target_path);
  const CalibrationModel model =
      load_calibration(args.calib_path, target.num_classes());
  const SoftmaxMatrix probs = apply_temperature(target, model);
  const double t_used = model.temperature;

  std::string method = args.method;
  if (method == "atc") {
    method =
        parse_score(args.score) == AtcScore::kNegativeEntropy ? "atc_ne"
                                                              : "atc_mc";
  }

  EstimateReport report;
  if (method == "cot") {
    warn_small_batches(args.batch_size, target.num_classes());
    if (!args.val_path.empty()) {
      const LogitsDataset val = read_logits_csv(args.val_path);
      const std::vector<std::int32_t> labels = required_labels(val);
      report = cot_estimate_batched(probs, labels, args.batch_size, args.seed,
                                    t_used);
    } else if (!args.label_dist_path.empty()) {
      const LabelDistribution dist =
          read_label_distribution_json(args.label_dist_path);
      report = cot_estimate_batched(probs, dist, args.batch_size, args.seed,
                                    t_used);
    } else {
      throw ValidationError("cot needs --val or --label-dist");
    }
  } else if (method == "ac") {
    report = ac_estimate(probs, t_used);
  } else if (method == "entropy") {
    report = entropy_score(probs, t_used);
  } else if (method == "atc_mc" || method == "atc_ne") {
    if (args.val_path.empty()) throw ValidationError(method + " needs --val");
    const AtcScore score =
        method == "atc_ne" ? AtcScore::kNegativeEntropy : AtcScore::kMaxConfidence;
    const LogitsDataset val = read_logits_csv(args.val_path);
    const std::vector<std::int32_t> labels = required_labels(val);
    const SoftmaxMatrix val_probs = apply_temperature(val, model);
    const double threshold = atc_fit_threshold(val_probs, labels, score);
    report = atc_estimate(probs, threshold, score, t_used);
  } else if (method == "gde") {
    if (args.second_target_path.empty()) {
      throw ValidationError("gde needs --second-target");
    }
    const LogitsDataset second = read_logits_csv(args.second_target_path);
    const SoftmaxMatrix second_probs = apply_temperature(second, model);
    report = gde_estimate(probs, second_probs, t_used);
  } else {
    throw ValidationError("unknown method '" + args.method +
                          "' (expected cot, ac, entropy, atc, atc_mc, atc_ne "
                          "or gde)");
  }

  write_file_atomic(args.out_path, estimate_report_to_json(report));
  std::printf("%s %s %.12g\n", method_name(report.method).c_str(),
              report.is_direct_error_estimate ? "estimated error"
                                              : "score",
              report.estimate);
  std::printf("wrote %s\n", args.out_path.c_str());
  return 0;
}

std::string lower_name(Method method) {
  std::string name = method_name(method);
  for (char& c : name) c = static_cast<char>(std::tolower(c));
  return name;
}

int run_evaluate(const EvaluateArgs& args) {
  std::vector<Method> methods;
  for (std::size_t start = 0; start < args.methods.size();) {
    std::size_t comma = args.methods.find(',', start);
    if (comma == std::string::npos) comma = args.methods.size();
    const std::string name = args.methods.substr(start, comma - start);
    start = comma + 1;
    if (name == "cot") {
      methods.push_back(Method::kCot);
    } else if (name == "ac") {
      methods.push_back(Method::kAc);
    } else if (name == "entropy") {
      methods.push_back(Method::kEntropy);
    } else if (name == "atc_mc") {
      methods.push_back(Method::kAtcMc);
    } else if (name == "atc_ne") {
      methods.push_back(Method::kAtcNe);
    } else if (name == "gde") {
      throw ValidationError(
          "gde needs a second logits file per target and cannot run from a "
          "manifest");
    } else {
      throw ValidationError("unknown method '" + name + "' in --methods");
    }
  }
  if (methods.empty()) throw ValidationError("--methods is empty");

  const RunManifest manifest = read_manifest_json(args.manifest_path);
  for (const ManifestEntry& entry : manifest.entries) {
    if (!entry.true_error) {
      throw ValidationError("target '" + entry.target_id +
                            "' has no true_error; evaluation needs it");
    }
  }

  const LogitsDataset val = read_logits_csv(args.val_path);
  const CalibrationModel model =
      load_calibration(args.calib_path, val.num_classes());
  const std::vector<std::int32_t> val_labels = required_labels(val);

  const bool wants_cot =
      std::find(methods.begin(), methods.end(), Method::kCot) != methods.end();
  if (wants_cot) warn_small_batches(args.batch_size, val.num_classes());

  double threshold_mc = 0.0;
  double threshold_ne = 0.0;
  {
    const SoftmaxMatrix val_probs = apply_temperature(val, model);
    for (const Method method : methods) {
      if (method == Method::kAtcMc) {
        threshold_mc = atc_fit_threshold(val_probs, val_labels,
                                         AtcScore::kMaxConfidence);
      } else if (method == Method::kAtcNe) {
        threshold_ne = atc_fit_threshold(val_probs, val_labels,
                                         AtcScore::kNegativeEntropy);
      }
    }
  }

  std::map<Method, std::vector<EvaluationRecord>> records;
  for (std::size_t idx = 0; idx < manifest.entries.size(); ++idx) {
    const ManifestEntry& entry = manifest.entries[idx];
    const LogitsDataset target = read_logits_csv(
        resolve_relative(args.manifest_path, entry.logits_path));
    const SoftmaxMatrix probs = apply_temperature(target, model);
    for (const Method method : methods) {
      EstimateReport report;
      switch (method) {
        case Method::kCot:
          report = cot_estimate_batched(probs, val_labels, args.batch_size,
                                        substream_seed(args.seed, idx),
                                        model.temperature);
          break;
        case Method::kAc:
          report = ac_estimate(probs, model.temperature);
          break;
        case Method::kEntropy:
          report = entropy_score(probs, model.temperature);
          break;
        case Method::kAtcMc:
          report = atc_estimate(probs, threshold_mc,
                                AtcScore::kMaxConfidence, model.temperature);
          break;
        case Method::kAtcNe:
          report = atc_estimate(probs, threshold_ne,
                                AtcScore::kNegativeEntropy, model.temperature);
          break;
        case Method::kGde:
          break;
      }
      records[method].push_back(
          {entry.target_id, report.estimate, *entry.true_error});
    }
  }

  std::filesystem::create_directories(args.out_dir);
  std::printf("%-8s  %9s  %9s  %9s\n", "method", "r2", "rho", "mae");
  for (const Method method : methods) {
    const bool direct = method != Method::kEntropy;
    const EvaluationReport report =
        evaluate_records(method_name(method), records[method], direct);
    const std::string stem = (std::filesystem::path(args.out_dir) /
                              ("evaluation_" + lower_name(method)))
                                 .string();
    write_file_atomic(stem + ".json", evaluation_report_to_json(report));
    write_file_atomic((std::filesystem::path(args.out_dir) /
                       ("scatter_" + lower_name(method) + ".csv"))
                          .string(),
                      scatter_csv(records[method]));
    if (report.mae) {
      std::printf("%-8s  %9.4f  %9.4f  %9.4f\n", report.method.c_str(),
                  report.r_squared, report.spearman_rho, *report.mae);
    } else {
      std::printf("%-8s  %9.4f  %9.4f  %9s\n", report.method.c_str(),
                  report.r_squared, report.spearman_rho, "-");
    }
  }
  std::printf("wrote reports to %s\n", args.out_dir.c_str());
  return 0;
}

int run_simulate(const std::string& config_path, bool use_default,
                 const std::string& out_dir) {
  const SimulateSpec spec =
      use_default ? default_simulate_spec() : read_simulate_spec_json(config_path);
  spec.validate();
  std::filesystem::create_directories(out_dir);
  const auto in_dir = [&](const std::string& name) {
    return (std::filesystem::path(out_dir) / name).string();
  };

  write_file_atomic(in_dir("config.json"), simulate_spec_to_json(spec));
  const LogitsDataset source = generate(spec.source);
  write_logits_csv(in_dir("source.csv"), source);

  SynthConfig target_base = spec.source;
  target_base.n_samples = spec.n_target;
  const std::vector<SweepTarget> targets =
      shift_sweep(target_base, spec.severities);

  RunManifest manifest;
  manifest.source_path = "source.csv";
  std::printf("%-18s  %9s\n", "target", "true_error");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    char id[64];
    std::snprintf(id, sizeof id, "t%02zu_a%.3f_tau%.2f", i,
                  spec.severities[i].first, spec.severities[i].second);
    char file[32];
    std::snprintf(file, sizeof file, "target_%02zu.csv", i);
    write_logits_csv(in_dir(file), targets[i].data);
    manifest.entries.push_back({id, file, targets[i].true_error});
    std::printf("%-18s  %9.4f\n", id, targets[i].true_error);
  }
  write_file_atomic(in_dir("manifest.json"), manifest_to_json(manifest));
  std::printf("wrote source, %zu targets and manifest.json to %s\n",
              targets.size(), out_dir.c_str());
  return 0;
}

int run_emd(const std::string& path_a, const std::string& path_b,
            bool certify) {
  const EmpiricalMeasure a = read_measure_csv(path_a);
  const EmpiricalMeasure b = read_measure_csv(path_b);
  SolveOptions options;
  options.certify = certify;
  const SolveDetails details = solve_emd_detailed(a, b, options);
  std::printf("emd %.12g\n", details.plan.total_cost);
  std::printf("flows %zu (m=%zu, n=%zu, pivots=%lld)\n",
              details.plan.flows.size(), a.size(), b.size(),
              static_cast<long long>(details.pivots));
  if (details.plan.flows.size() <= 16) {
    for (const TransportFlow& f : details.plan.flows) {
      std::printf("  %d -> %d  mass %.12g\n", f.source, f.target, f.mass);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Classifier error prediction on unlabeled data via optimal transport"};
  app.require_subcommand(1);

  std::string cal_val;
  std::string cal_out = "calibration.json";
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "Fit temperature scaling on labeled "
                                      "validation logits");
  calibrate->add_option("--val", cal_val, "Labeled validation logits CSV")
      ->required();
  calibrate->add_option("--out", cal_out, "Output calibration JSON path");

  EstimateArgs est;
  std::string est_out = "estimate.json";
  CLI::App* estimate = app.add_subcommand(
      "estimate", "Estimate a classifier's error on an unlabeled target");
  estimate->add_option("--method", est.method,
                       "cot | ac | entropy | atc | atc_mc | atc_ne | gde")
      ->required();
  estimate->add_option("--target", est.target_path, "Target logits CSV")
      ->required();
  estimate->add_option("--val", est.val_path,
                       "Labeled validation logits CSV (cot, atc)");
  estimate->add_option("--calib", est.calib_path, "Calibration JSON");
  estimate->add_option("--label-dist", est.label_dist_path,
                       "Source label distribution JSON (cot alternative to "
                       "--val)");
  estimate->add_option("--second-target", est.second_target_path,
                       "Second model's logits CSV (gde)");
  estimate->add_option("--batch-size", est.batch_size,
                       "COT batch size (default 2000)");
  estimate->add_option("--seed", est.seed, "Batch shuffle seed");
  estimate->add_option("--score", est.score, "ATC score variant: mc | ne");
  estimate->add_option("--out", est_out, "Output report JSON path");

  EvaluateArgs eval;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score estimator quality across a manifest of targets");
  evaluate->add_option("--manifest", eval.manifest_path, "Manifest JSON")
      ->required();
  evaluate->add_option("--methods", eval.methods,
                       "Comma list of cot,ac,entropy,atc_mc,atc_ne");
  evaluate->add_option("--val", eval.val_path, "Labeled validation logits CSV")
      ->required();
  evaluate->add_option("--calib", eval.calib_path, "Calibration JSON");
  evaluate->add_option("--out-dir", eval.out_dir, "Report output directory")
      ->required();
  evaluate->add_option("--batch-size", eval.batch_size,
                       "COT batch size (default 2000)");
  evaluate->add_option("--seed", eval.seed, "COT batch shuffle seed");

  std::string sim_config;
  std::string sim_out;
  bool sim_default = false;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate a synthetic source and shifted targets");
  simulate->add_option("--config", sim_config, "SimulateSpec JSON");
  simulate->add_flag("--default", sim_default,
                     "Use the built-in desk-scale sweep");
  simulate->add_option("--out-dir", sim_out, "Output directory")->required();

  std::string emd_a;
  std::string emd_b;
  bool emd_certify = false;
  CLI::App* emd = app.add_subcommand(
      "emd", "Earth Mover's Distance between two measure CSV files");
  emd->add_option("file_a", emd_a, "Measure CSV (weight,x_0,...)")->required();
  emd->add_option("file_b", emd_b, "Measure CSV (weight,x_0,...)")->required();
  emd->add_flag("--certify", emd_certify, "Verify optimality certificates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (calibrate->parsed()) return run_calibrate(cal_val, cal_out);
    if (estimate->parsed()) {
      est.out_path = est_out;
      return run_estimate(est);
    }
    if (evaluate->parsed()) return run_evaluate(eval);
    if (simulate->parsed()) {
      if (sim_default == !sim_config.empty()) {
        throw ValidationError("pass exactly one of --config or --default");
      }
      return run_simulate(sim_config, sim_default, sim_out);
    }
    if (emd->parsed()) return run_emd(emd_a, emd_b, emd_certify);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
