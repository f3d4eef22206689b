#include "cli.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "nevil/baselines.hpp"
#include "nevil/evaluation.hpp"
#include "nevil/io.hpp"
#include "nevil/oracle.hpp"
#include "nevil/pca.hpp"
#include "nevil/service.hpp"
#include "nevil/synthetic.hpp"

namespace nevil {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::atomic<bool> g_interrupted{false};
extern "C" void on_signal(int) { g_interrupted = true; }

// Flags that may override the config file.
struct Overrides {
  std::optional<int> batch_size;
  std::optional<double> threshold;
  std::optional<std::string> rule;
  std::optional<std::string> measure;
  std::optional<std::string> classifier;
  std::optional<double> decay_base;
  std::optional<std::int64_t> horizon;
  bool no_novelty_gate = false;

  void add_to(CLI::App* app) {
    app->add_option("--batch-size", batch_size, "Frames per batch (B)");
    app->add_option("--threshold", threshold, "Confidence threshold T");
    app->add_option("--rule", rule, "Fusion rule: product|sum");
    app->add_option("--measure", measure, "Confidence measure: most_confident|margin|ratio|modified_mc");
    app->add_option("--classifier", classifier, "Slot learner: gaussian_nb|gmm|logistic");
    app->add_option("--decay-base", decay_base, "Ensemble decay base p > 1");
    app->add_option("--horizon", horizon, "Number of slots to process");
    app->add_flag("--no-novelty-gate", no_novelty_gate, "Disable the support check on accepted batches");
  }

  RunConfig apply(RunConfig c) const {
    if (batch_size) c.batch_size = *batch_size;
    if (threshold) c.fusion.threshold = *threshold;
    if (rule) c.fusion.rule = fusion_rule_from_string(*rule);
    if (measure) c.fusion.measure = confidence_measure_from_string(*measure);
    if (classifier) c.classifier = classifier_kind_from_string(*classifier);
    if (decay_base) c.decay_base = *decay_base;
    if (horizon) c.horizon = *horizon;
    if (no_novelty_gate) c.fusion.novelty_gate = false;
    return c;
  }
};

RunConfig make_config(const std::string& config_path, const Overrides& o, std::uint64_t seed) {
  RunConfig c;
  if (!config_path.empty()) c = run_config_from_json(load_json(config_path));
  c = o.apply(c);
  c.seed = seed;
  c.validate();
  return c;
}

std::vector<Frame> load_frames(const std::string& path) {
  try {
    return load_stream_file(path).frames;
  } catch (const ParseError& e) {
    throw Error("'" + path + "': " + e.what());
  }
}

std::string text_of(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

void write_run_outputs(const fs::path& dir, const RunReport& report, const std::optional<json>& model) {
  write_text_file(dir / "decisions.jsonl", text_of([&](std::ostream& o) { write_decision_log(o, report); }));
  write_text_file(dir / "report.json", text_of([&](std::ostream& o) { write_report(o, report); }));
  if (model) {
    json snap = {{"seed", report.seed}, {"config", report.config}, {"model", *model}};
    write_text_file(dir / "model.json", snap.dump() + "\n");
  }
}

void print_summary(std::ostream& out, const RunReport& r) {
  out << r.method << ": accuracy=" << accuracy(r) << " annotation_effort=" << annotation_effort(r)
      << " queries=" << r.queries() << " classes=" << r.registry.size() << '\n';
}

// Runs NEVIL with the HTTP oracle. Keeps serving after the run until
// interrupted when `linger` is set.
RunReport run_interactive(const Dataset& data, const RunConfig& config, const fs::path& out_dir,
                          std::optional<int> port_flag, const std::string& host, bool linger, std::ostream& out,
                          CompositeModel* final_model) {
  OracleService service(ServiceOptions{out_dir, std::chrono::milliseconds{0}});
  service.set_horizon(config.horizon >= 0 ? std::min(config.horizon, data.horizon()) : data.horizon());
  HttpServer server(service);
  const int port = server.start(host, resolve_port(port_flag));
  out << "oracle service listening on http://" << host << ':' << port << "/api" << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watchdog([&] {
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    service.shutdown();
  });

  RunReport report;
  std::exception_ptr failure;
  try {
    report = run(data, service, config, [&](const TimeSlotView& s, const SlotOutcome& o) {
      service.on_slot(s, o);
      if (final_model) *final_model = o.next.model;
    });
    service.set_report(report);
  } catch (const std::exception& e) {
    service.set_failed(e.what());
    failure = std::current_exception();
  }
  if (linger && !failure) {
    out << "run finished; serving the report until interrupted" << std::endl;
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  g_interrupted = true;
  watchdog.join();
  g_interrupted = false;
  server.stop();
  if (failure) std::rethrow_exception(failure);
  return report;
}

std::vector<std::uint64_t> seeds_or_throw(const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw ConfigError("--seed is required");
  return seeds;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online ensemble active learning over parallel uneven streams", "nevil"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic scenario as a stream file");
  std::string scenario = "I", gen_out, spec_path;
  std::uint64_t gen_seed = 0;
  std::optional<std::int64_t> frames_per_stream;
  gen->add_option("--scenario", scenario, "I|II|III|IV")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Generator seed")->required();
  gen->add_option("--frames", frames_per_stream, "Frames per stream (default 3000)");
  gen->add_option("--spec", spec_path, "JSON scenario composition replacing the default");
  gen->add_option("--out", gen_out, "Output stream file")->required();

  // run / serve share most options
  std::string data_path, config_path, out_dir = "run", oracle_mode = "ground-truth", host = "127.0.0.1";
  std::string save_model;
  std::optional<std::uint64_t> seed;
  std::optional<int> port;
  Overrides ov;
  auto* runc = app.add_subcommand("run", "Run NEVIL on a stream file");
  runc->add_option("--data", data_path, "Stream file")->required();
  runc->add_option("--config", config_path, "JSON run configuration")->required();
  runc->add_option("--seed", seed, "Run seed")->required();
  runc->add_option("--out-dir", out_dir, "Directory for decisions.jsonl, report.json, model.json");
  runc->add_option("--oracle", oracle_mode, "ground-truth|interactive")
      ->check(CLI::IsMember({"ground-truth", "interactive"}));
  runc->add_option("--port", port, "Service port (interactive; else NEVIL_PORT, else 8080)");
  runc->add_option("--host", host, "Service bind address");
  ov.add_to(runc);

  auto* serve = app.add_subcommand("serve", "Run NEVIL with the HTTP oracle and keep serving until interrupted");
  serve->add_option("--data", data_path, "Stream file")->required();
  serve->add_option("--config", config_path, "JSON run configuration")->required();
  serve->add_option("--seed", seed, "Run seed")->required();
  serve->add_option("--out-dir", out_dir, "Run directory (answers journal and outputs)");
  serve->add_option("--port", port, "Service port (else NEVIL_PORT, else 8080)");
  serve->add_option("--host", host, "Service bind address");
  ov.add_to(serve);

  // baseline
  auto* base = app.add_subcommand("baseline", "Run a comparison strategy");
  std::string method;
  std::optional<std::int64_t> t_int;
  base->add_option("method", method, "passive|evenodd|unwise")
      ->required()
      ->check(CLI::IsMember({"passive", "evenodd", "unwise"}));
  base->add_option("--data", data_path, "Stream file")->required();
  base->add_option("--config", config_path, "JSON run configuration");
  base->add_option("--seed", seed, "Run seed");
  base->add_option("--out-dir", out_dir, "Output directory");
  base->add_option("--t-int", t_int, "unwise: annotated prefix in slots (default 20% of horizon)");
  ov.add_to(base);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Threshold or batch-size sweep with the scripted oracle");
  std::string sweep_kind, sweep_scenario;
  std::vector<std::uint64_t> seeds;
  std::vector<double> thresholds;
  int grid_count = 50;
  sweep->add_option("kind", sweep_kind, "threshold|batchsize")
      ->required()
      ->check(CLI::IsMember({"threshold", "batchsize"}));
  auto* src = sweep->add_option_group("source");
  src->add_option("--data", data_path, "Stream file (same data for every seed)");
  src->add_option("--scenario", sweep_scenario, "Regenerate this scenario per seed");
  src->require_option(1);
  sweep->add_option("--config", config_path, "JSON run configuration");
  sweep->add_option("--seed", seeds, "Seeds (repeat or comma separated)")->required()->delimiter(',');
  sweep->add_option("--thresholds", thresholds, "Threshold grid (comma separated)")->delimiter(',');
  sweep->add_option("--count", grid_count, "Batch-size grid points")->capture_default_str();
  sweep->add_option("--frames", frames_per_stream, "Frames per stream when regenerating");
  sweep->add_option("--out-dir", out_dir, "Output directory");
  ov.add_to(sweep);

  // pca
  auto* pca = app.add_subcommand("pca", "Offline PCA over a stream file");
  pca->require_subcommand(1);
  auto* pfit = pca->add_subcommand("fit", "Fit a projection");
  auto* papply = pca->add_subcommand("apply", "Project a stream file");
  std::string pca_out, projection_path;
  std::size_t q = 85;
  pfit->add_option("--data", data_path, "Stream file")->required();
  pfit->add_option("--q", q, "Components to keep")->capture_default_str();
  pfit->add_option("--out", pca_out, "Projection JSON")->required();
  papply->add_option("--data", data_path, "Stream file")->required();
  papply->add_option("--projection", projection_path, "Projection JSON")->required();
  papply->add_option("--out", pca_out, "Projected stream file")->required();

  std::vector<std::string> argv_store;
  argv_store.emplace_back("nevil");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      const ScenarioId id = scenario_from_string(scenario);
      ScenarioSpec spec = default_scenario(id, frames_per_stream.value_or(3000));
      if (!spec_path.empty()) spec = scenario_spec_from_json(load_json(spec_path));
      try {
        validate_scenario(spec);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
      const auto frames = generate(spec, gen_seed);
      save_stream_file(gen_out, frames,
                       {{"generator", "synthetic"}, {"seed", gen_seed}, {"scenario", to_json(spec)}});
      out << "wrote " << frames.size() << " frames to " << gen_out << '\n';
      return kExitOk;
    }

    if (*runc || *serve) {
      const RunConfig config = make_config(config_path, ov, *seed);
      const Dataset data = assemble_batches(load_frames(data_path), config.batch_size);
      CompositeModel final_model(config.decay_base);
      RunReport report;
      if (*serve || oracle_mode == "interactive") {
        report = run_interactive(data, config, out_dir, port, host, static_cast<bool>(*serve), out, &final_model);
      } else {
        ScriptedOracle oracle;
        report = run(data, oracle, config, [&](const TimeSlotView&, const SlotOutcome& o) { final_model = o.next.model; });
      }
      write_run_outputs(out_dir, report, model_to_json(final_model));
      print_summary(out, report);
      return kExitOk;
    }

    if (*base) {
      const RunConfig config = make_config(config_path, ov, seed.value_or(0));
      const Dataset data = assemble_batches(load_frames(data_path), config.batch_size);
      RunReport report;
      if (method == "passive") {
        report = passive_learning(data, config);
      } else if (method == "evenodd") {
        report = even_odd_learning(data, config);
      } else {
        ScriptedOracle oracle;
        report = unwise_active(data, oracle, config, UnwiseConfig{t_int.value_or(-1)});
      }
      write_run_outputs(out_dir, report, std::nullopt);
      print_summary(out, report);
      return kExitOk;
    }

    if (*sweep) {
      seeds_or_throw(seeds);
      const RunConfig config = make_config(config_path, ov, seeds.front());
      std::vector<Frame> file_frames;
      if (!data_path.empty()) file_frames = load_frames(data_path);
      const std::optional<ScenarioId> sid =
          sweep_scenario.empty() ? std::nullopt : std::optional(scenario_from_string(sweep_scenario));
      ScenarioOverrides so;
      so.frames_per_stream = frames_per_stream;
      FrameFactory frames = [&](std::uint64_t s) { return sid ? build_scenario(*sid, so, s) : file_frames; };

      json meta = {{"kind", sweep_kind}, {"config", to_json(config)}, {"seeds", seeds},
                   {"source", sid ? "scenario " + to_string(*sid) : data_path}};
      std::vector<CurvePoint> points;
      std::vector<CurveSummary> medians;
      if (sweep_kind == "threshold") {
        if (thresholds.empty()) thresholds = default_threshold_grid();
        auto r = sweep_threshold(
            [&](std::uint64_t s) { return assemble_batches(frames(s), config.batch_size); }, config, thresholds, seeds);
        points = std::move(r.points);
        medians = std::move(r.medians);
        meta["thresholds"] = thresholds;
      } else {
        auto r = sweep_batch_size(frames, config, seeds, grid_count);
        points = std::move(r.points);
        medians = std::move(r.medians);
        meta["best_per_seed"] = r.best_per_seed;
        meta["best_batch_size"] = r.best;
        out << "best batch size: " << r.best << '\n';
      }
      const fs::path dir(out_dir);
      write_text_file(dir / "points.csv", text_of([&](std::ostream& o) { write_points_csv(o, points); }));
      write_text_file(dir / "summary.csv", text_of([&](std::ostream& o) { write_summary_csv(o, medians); }));
      write_text_file(dir / "plot.dat", text_of([&](std::ostream& o) { write_plot_data(o, medians); }));
      write_text_file(dir / "sweep.json", meta.dump(2) + "\n");
      for (const auto& m : medians) {
        out << "T=" << m.threshold << " B=" << m.batch_size << " accuracy=" << m.accuracy << " effort=" << m.effort
            << '\n';
      }
      return kExitOk;
    }

    if (*pfit) {
      const auto file = load_stream_file(data_path);
      const PcaProjection p = pca_fit(file.frames, q);
      json j = to_json(p);
      j["source"] = data_path;
      write_text_file(pca_out, j.dump() + "\n");
      out << "kept " << p.q << " of " << p.dim << " dimensions\n";
      return kExitOk;
    }
    if (*papply) {
      const auto file = load_stream_file(data_path);
      const PcaProjection p = pca_from_json(load_json(projection_path));
      json meta = file.header.meta;
      meta["pca"] = {{"projection", projection_path}, {"from_dim", p.dim}, {"q", p.q}};
      save_stream_file(pca_out, pca_apply(p, file.frames), meta);
      out << "wrote " << file.frames.size() << " frames of dimension " << p.q << " to " << pca_out << '\n';
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "nevil: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "nevil: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace nevil
