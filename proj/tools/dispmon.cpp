#include "dispmon/errors.hpp"
#include "dispmon/http_api.hpp"
#include "dispmon/monitor.hpp"
#include "dispmon/signal.hpp"
#include "dispmon/store.hpp"
#include "dispmon/validate.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

namespace {

dispmon::HttpApi* g_api = nullptr;

void on_signal(int) {
  if (g_api) g_api->stop();
}

std::pair<std::string, int> split_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw dispmon::UsageError("--bind expects host:port");
  return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
}

int signal_gen(const std::string& preset, std::uint64_t seed, double noise, double duration, double drop,
               const std::string& out_path, const std::string& oracle_path) {
  auto spec = dispmon::preset_signal(preset);
  spec.seed = seed;
  spec.noise_rms = noise;
  if (duration > 0.0) spec.duration_s = duration;
  const auto signal = dispmon::generate(spec);

  dispmon::LinkModel link;
  link.drop_probability = drop;
  link.seed = seed;
  const auto records = dispmon::simulate_sensor(signal.acceleration, link);

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw dispmon::UsageError("cannot write " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  for (const auto& tr : records) out << dispmon::format_frame(tr.record) << '\n';

  if (!oracle_path.empty()) {
    std::ofstream oracle(oracle_path);
    oracle << "t,d_mm\n";
    const auto& d = signal.displacement;
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
      oracle << dispmon::format_double(d.time_at(i)) << ',' << dispmon::format_double(d.samples[i]) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-free displacement monitoring service and tools"};
  app.require_subcommand(1);

  // signal gen
  auto* signal_cmd = app.add_subcommand("signal", "Test excitations");
  signal_cmd->require_subcommand(1);
  auto* gen = signal_cmd->add_subcommand("gen", "Emit a preset as sensor frames (t,ax,ay,az,gx,gy,gz,sensor_id)");
  std::string preset = "s1";
  std::uint64_t gen_seed = 0;
  double gen_noise = 0.0;
  double gen_duration = 0.0;
  double gen_drop = 0.0;
  std::string gen_out;
  std::string gen_oracle;
  gen->add_option("preset,--preset", preset, "s1, s2, t1 or t2")->check(CLI::IsMember({"s1", "s2", "t1", "t2"}));
  gen->add_option("--seed", gen_seed);
  gen->add_option("--noise", gen_noise, "acceleration noise RMS, m/s^2");
  gen->add_option("--duration", gen_duration, "seconds (default: preset)");
  gen->add_option("--drop", gen_drop, "per-record drop probability");
  gen->add_option("--out", gen_out, "frame file (default: stdout)");
  gen->add_option("--oracle-out", gen_oracle, "write the analytic displacement as t,d_mm CSV");

  // validate run
  auto* validate_cmd = app.add_subcommand("validate", "Validation against analytic oracles");
  validate_cmd->require_subcommand(1);
  auto* run = validate_cmd->add_subcommand("run", "Run one case (or all) and report RMS errors");
  std::string val_case = "s1";
  std::string val_mode = "direct";
  dispmon::ValidationOptions val_opts;
  std::string val_out;
  std::size_t val_window = val_opts.reconstruction.window_len;
  bool no_runtime = false;
  run->add_option("--case", val_case, "s1, s2, t1, t2 or all")->check(CLI::IsMember({"s1", "s2", "t1", "t2", "all"}));
  run->add_option("--mode", val_mode, "direct or pipeline")->check(CLI::IsMember({"direct", "pipeline"}));
  run->add_option("--seed", val_opts.seed);
  run->add_option("--noise", val_opts.noise_rms, "acceleration noise RMS, m/s^2");
  run->add_option("--drop", val_opts.link.drop_probability, "pipeline drop probability");
  run->add_option("--window-n", val_window, "reconstruction window length");
  run->add_option("--segment", val_opts.segment_len, "Welch segment length");
  run->add_option("--overlap", val_opts.overlap_fraction, "Welch overlap fraction");
  run->add_option("--out", val_out, "report CSV path");
  run->add_flag("--no-runtime", no_runtime, "write runtime_s as 0 for byte-comparable reports");
  run->add_flag("--self-check", val_opts.self_check, "compare the oracle with itself");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the monitoring HTTP service");
  std::string config_path;
  std::string bind;
  double poll = 0.0;
  std::size_t window_n = 0;
  std::string source;
  std::string data_dir;
  serve->add_option("--config", config_path, "JSON config file");
  serve->add_option("--bind", bind, "host:port");
  serve->add_option("--poll-interval", poll, "client poll interval, s");
  serve->add_option("--window-n", window_n, "reconstruction window length");
  serve->add_option("--source", source, "default acquisition source descriptor");
  serve->add_option("--data-dir", data_dir, "store directory");

  // store
  auto* store_cmd = app.add_subcommand("store", "Experiment archive maintenance");
  store_cmd->require_subcommand(1);
  std::string store_dir = "dispmon-data";
  std::string exp_id;
  std::string io_path;
  auto* list = store_cmd->add_subcommand("list", "List saved experiments");
  auto* exp = store_cmd->add_subcommand("export", "Export an experiment as frames");
  auto* imp = store_cmd->add_subcommand("import", "Import a frame file as an experiment");
  for (auto* c : {list, exp, imp}) c->add_option("--data-dir", store_dir);
  exp->add_option("--id", exp_id)->required();
  exp->add_option("--out", io_path);
  imp->add_option("--in", io_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return signal_gen(preset, gen_seed, gen_noise, gen_duration, gen_drop, gen_out, gen_oracle);

    if (run->parsed()) {
      val_opts.reconstruction.window_len = val_window;
      if (val_opts.link.seed == 0) val_opts.link.seed = val_opts.seed;
      const auto mode = dispmon::validation_mode_from_string(val_mode);
      std::vector<dispmon::ErrorReport> reports;
      const std::vector<std::string> cases =
          val_case == "all" ? std::vector<std::string>{"s1", "s2", "t1", "t2"} : std::vector<std::string>{val_case};
      for (const auto& c : cases) reports.push_back(dispmon::run_validation(c, mode, val_opts));
      dispmon::write_report_table(std::cout, reports);
      if (!val_out.empty()) {
        std::ofstream out(val_out);
        if (!out) throw dispmon::UsageError("cannot write " + val_out);
        dispmon::write_report_csv(out, reports, !no_runtime);
      }
      return 0;
    }

    if (serve->parsed()) {
      dispmon::ServiceConfig cfg = config_path.empty() ? dispmon::ServiceConfig{} : dispmon::load_service_config(config_path);
      if (!bind.empty()) cfg.bind = bind;
      if (poll > 0.0) cfg.poll_interval_s = poll;
      if (window_n > 0) cfg.reconstruction.window_len = window_n;
      if (!source.empty()) cfg.default_source = source;
      if (!data_dir.empty()) cfg.data_dir = data_dir;

      auto store = std::make_shared<dispmon::Store>(cfg.data_dir);
      dispmon::MonitorService service(cfg, store);
      dispmon::HttpApi api(service);
      const auto [host, port] = split_bind(cfg.bind);
      const int bound = api.bind(host, port);
      g_api = &api;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "dispmon: serving on " << host << ":" << bound << " (window N=" << cfg.reconstruction.window_len
                << ", data " << cfg.data_dir.string() << ")\n";
      api.serve();
      g_api = nullptr;
      return 0;
    }

    dispmon::Store store(store_dir);
    if (list->parsed()) {
      for (const auto& info : store.list_experiments()) {
        std::cout << info.id.str() << ' ' << info.id.exp_time_iso8601() << ' ' << info.record_count << '\n';
      }
    } else if (exp->parsed()) {
      const auto id = dispmon::ExperimentId::parse(exp_id);
      if (io_path.empty()) {
        store.export_experiment(id, std::cout);
      } else {
        std::ofstream out(io_path);
        store.export_experiment(id, out);
      }
    } else if (imp->parsed()) {
      std::ifstream in(io_path);
      if (!in) throw dispmon::UsageError("cannot read " + io_path);
      std::cout << store.import_experiment(in).str() << '\n';
    }
    return 0;
  } catch (const dispmon::Error& e) {
    std::cerr << "dispmon: " << e.what() << '\n';
    return 1;
  }
}
