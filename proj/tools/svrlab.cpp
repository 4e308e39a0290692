// svrlab command-line driver: dataset generation, training, evaluation,
// gradient checks and drift/radius diagnostics.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "svrlab/config.hpp"
#include "svrlab/container.hpp"
#include "svrlab/dataset.hpp"
#include "svrlab/gradcheck.hpp"
#include "svrlab/kernels.hpp"
#include "svrlab/report.hpp"
#include "svrlab/trainer.hpp"

namespace fs = std::filesystem;
using namespace svrlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFailure = 2;

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool quiet = false;
  std::string kernels = "auto";
};

void say(const Globals& g, const std::string& line) {
  if (!g.quiet) std::cout << line << "\n";
}

// A dataset spec document, or a training config carrying one under "dataset".
SyntheticDatasetSpec spec_from_config(const nlohmann::json& j) {
  if (j.is_object() && j.contains("dataset")) return dataset_spec_from_json(j.at("dataset"));
  return dataset_spec_from_json(j);
}

TrainConfig train_config_from_file(const std::string& path, const Globals& g) {
  TrainConfig cfg = train_config_from_json(read_json_file(path));
  if (g.seed) cfg.seed = *g.seed;
  cfg.threads = g.threads;
  validate(cfg);
  return cfg;
}

int run_gen_data(const Globals& g, const std::string& config, const std::string& out) {
  SyntheticDatasetSpec spec = spec_from_config(read_json_file(config));
  if (g.seed) spec.seed = *g.seed;
  validate(spec);
  const Dataset ds = generate_dataset(spec);
  save_dataset(ds, out);
  std::ostringstream msg;
  msg << "wrote " << out << " (" << ds.num_train << " train, " << ds.num_test << " test, hash "
      << file_hash(out) << ")";
  say(g, msg.str());
  return kExitOk;
}

int run_train(const Globals& g, const std::string& config, const std::string& data_path, const std::string& out) {
  const TrainConfig cfg = train_config_from_file(config, g);
  const Dataset data = load_dataset(data_path);
  validate(data.spec, cfg.batch_size);
  const RunArtifacts run = train(cfg, data);
  write_run(out, run, cfg, data, file_hash(data_path));
  if (!g.quiet) {
    for (const auto& m : run.metrics) {
      std::printf("epoch %3zu  loss %.6f  R@1 t2a %.4f a2t %.4f  drift %.4f/%.4f  R %.4f/%.4f\n", m.epoch,
                  m.loss.total, m.r1_t2a, m.r1_a2t, m.drift_cos_t2a, m.drift_cos_a2t, m.mean_radius_t2a,
                  m.mean_radius_a2t);
    }
    std::printf("best epoch %zu; artifacts in %s\n", run.best_epoch, out.c_str());
  }
  return kExitOk;
}

int run_eval(const Globals& g, const std::string& run_dir, const std::string& data_path, const std::string& split_name,
             const std::string& which, const std::string& out) {
  Split split;
  if (split_name == "test") {
    split = Split::Test;
  } else if (split_name == "train") {
    split = Split::Train;
  } else {
    throw Error(Errc::InvalidConfig, "split must be 'train' or 'test'");
  }
  const fs::path root(run_dir);
  const nlohmann::json manifest = read_json_file((root / "manifest.json").string());
  const std::string hash = file_hash(data_path);
  if (manifest.value("dataset_hash", std::string()) != hash) {
    throw Error(Errc::InvalidSpec, "dataset hash " + hash + " does not match the run manifest");
  }
  const auto bytes = read_file((root / ("checkpoint_" + which + ".bin")).string());
  LoadedCheckpoint ck = decode_checkpoint(bytes);
  ck.cfg.threads = g.threads;
  const Dataset data = load_dataset(data_path);
  const std::size_t epoch = ck.header.value("epoch", std::size_t{0});
  const MetricsRecord m = evaluate(ck.model, data, split, ck.cfg, epoch);
  std::ostringstream csv;
  write_metrics_csv(csv, {m});
  if (!out.empty()) write_text_file(out, csv.str());
  if (!g.quiet || out.empty()) std::cout << csv.str();
  return kExitOk;
}

int run_gradcheck(const Globals& g, const std::string& module, std::size_t trials) {
  const std::uint64_t seed = g.seed.value_or(1);
  std::vector<CheckResult> results;
  auto append = [&](std::vector<CheckResult> r) { results.insert(results.end(), r.begin(), r.end()); };
  if (module == "losses" || module == "all") append(gradcheck_losses(seed, trials));
  if (module == "radius" || module == "all") append(gradcheck_radius(seed, trials));
  if (module == "trainer" || module == "all") append(gradcheck_trainer(seed, trials));
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.passed;
    if (!g.quiet || !r.passed) {
      std::printf("%-4s %-34s max_rel_error %.3e  tol %.0e  trials %zu\n", r.passed ? "ok" : "FAIL", r.name.c_str(),
                  r.max_rel_error, r.tolerance, r.trials);
    }
  }
  return ok ? kExitOk : kExitFailure;
}

int run_diagnose(const Globals& g, const std::string& run_dir, const std::string& out) {
  const std::string text = read_text_file((fs::path(run_dir) / "trace.csv").string());
  std::istringstream in(text);
  const std::vector<StepTrace> trace = parse_trace_csv(in);
  std::ostringstream csv;
  write_diagnostics_csv(csv, trace);
  write_text_file(out, csv.str());
  say(g, "wrote " + out + " (" + std::to_string(trace.size()) + " steps)");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive alignment with support-vector regularization on synthetic paired features"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Override the seed of the config or check");
  app.add_option("--threads", g.threads, "Worker threads for per-anchor work")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "Only print failures and requested output");
  app.add_option("--kernels", g.kernels, "Vector kernels: auto, scalar, avx2, neon")
      ->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));

  std::string config, out, data, run_dir, split = "test", which = "final", module = "all";
  std::size_t trials = 4;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset file");
  gen->add_option("--config", config, "Dataset spec JSON (or a train config with a 'dataset' object)")->required();
  gen->add_option("--out", out, "Output dataset path")->required();

  auto* tr = app.add_subcommand("train", "Train one configuration and write run artifacts");
  tr->add_option("--config", config, "Train config JSON")->required();
  tr->add_option("--data", data, "Dataset file")->required();
  tr->add_option("--out", out, "Run directory")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a run checkpoint");
  ev->add_option("--run", run_dir, "Run directory")->required();
  ev->add_option("--data", data, "Dataset file the run was trained on")->required();
  ev->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));
  ev->add_option("--checkpoint", which, "final or best")->check(CLI::IsMember({"final", "best"}));
  ev->add_option("--out", out, "Also write the metrics CSV here");

  auto* gc = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  gc->add_option("--module", module, "losses, radius, trainer or all")
      ->check(CLI::IsMember({"losses", "radius", "trainer", "all"}));
  gc->add_option("--trials", trials, "Randomized trials per check")->check(CLI::PositiveNumber);

  auto* dg = app.add_subcommand("diagnose", "Per-step and per-epoch drift and radius traces of a run");
  dg->add_option("--run", run_dir, "Run directory")->required();
  dg->add_option("--out", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    kernels::select(kernels::parse_backend(g.kernels));
    if (*gen) return run_gen_data(g, config, out);
    if (*tr) return run_train(g, config, data, out);
    if (*ev) return run_eval(g, run_dir, data, split, which, out);
    if (*gc) return run_gradcheck(g, module, trials);
    if (*dg) return run_diagnose(g, run_dir, out);
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
