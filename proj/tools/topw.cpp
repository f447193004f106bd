// topw: trace-driven front end for the Top-W processor and the baselines.
//
//   topw synth --seed 7 --n 1000 --m 64 --steps 8 --out trace/
//   topw validate-trace trace/
//   topw run trace/ --rule topw --rule top_p=0.9 --out stats.csv
//   topw sweep trace/ --lambda_grid 1,2 --beta_grid 2,3,4 --out sweep.csv
//   topw bench trace/ --rule topw --rule top_p=0.9 --repeats 5
//
// Exit codes: 0 success, 1 usage error, 2 data validation error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "topw/harness.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct TopWFlags {
  topw::TopWConfig config;
  std::string warm_start = "nucleus:0.9";

  void attach(CLI::App* app) {
    app->add_option("--lambda", config.lambda, "entropy weight")->capture_default_str();
    app->add_option("--beta", config.beta, "mass weight")->capture_default_str();
    app->add_option("--sel_temperature", config.sel_temperature, "selection temperature")
        ->capture_default_str();
    app->add_option("--top_m", config.top_m, "candidate pool size")->capture_default_str();
    app->add_option("--alt_iters", config.alt_iters, "alternation budget")->capture_default_str();
    app->add_option("--warm_start", warm_start, "nucleus:<threshold> or top_k:<k>")
        ->capture_default_str();
    app->add_option("--epsilon_whiten", config.epsilon_whiten, "whitening variance floor")
        ->capture_default_str();
  }

  topw::TopWConfig resolve() {
    config.warm_start = topw::parse_warm_start(warm_start);
    for (const auto& w : config.validate()) std::cerr << "warning: " << w << "\n";
    return config;
  }
};

std::vector<topw::NamedRule> parse_rules(const std::vector<std::string>& specs,
                                         const topw::TopWConfig& defaults) {
  std::vector<topw::NamedRule> rules;
  for (const auto& s : specs) rules.push_back(topw::parse_rule(s, defaults));
  return rules;
}

// Writes to the path, or stdout for "-".
template <class Fn>
void emit(const std::string& path, Fn&& write) {
  if (path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write(out);
  if (!out) throw std::runtime_error("write failed for " + path);
}

topw::TokenMetric metric_for(const topw::TraceBundle& trace, double epsilon) {
  try {
    return topw::build_metric(trace.embedding_matrix(), epsilon);
  } catch (const std::invalid_argument& e) {
    throw topw::TraceError(std::string("embeddings: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Top-W geometry-aware truncation sampling"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic trace bundle");
  topw::SynthOptions synth_opt;
  std::string synth_generator = "gaussian";
  std::string synth_out;
  synth->add_option("--seed", synth_opt.seed, "RNG seed")->required();
  synth->add_option("--n", synth_opt.n, "vocabulary size")->capture_default_str();
  synth->add_option("--m", synth_opt.m, "embedding dimension")->capture_default_str();
  synth->add_option("--steps", synth_opt.steps, "decoding steps")->capture_default_str();
  synth->add_option("--generator", synth_generator, "gaussian or clustered")
      ->check(CLI::IsMember({"gaussian", "clustered"}))
      ->capture_default_str();
  synth->add_option("--concentration", synth_opt.concentration, "Dirichlet concentration")
      ->capture_default_str();
  synth->add_option("--clusters", synth_opt.clusters, "clusters (clustered generator)")
      ->capture_default_str();
  synth->add_option("--cluster_spread", synth_opt.cluster_spread, "within-cluster stddev")
      ->capture_default_str();
  synth->add_option("--out", synth_out, "output directory")->required();

  // validate-trace
  auto* validate = app.add_subcommand("validate-trace", "check a trace bundle and print its digest");
  std::string validate_path;
  validate->add_option("trace", validate_path, "trace directory")->required();

  // run
  auto* run = app.add_subcommand("run", "per-step statistics CSV");
  std::string run_path, run_out = "-";
  std::vector<std::string> run_rules;
  bool golden = false;
  TopWFlags run_flags;
  run->add_option("trace", run_path, "trace directory")->required();
  run->add_option("--rule", run_rules, "topw, top_k=K, top_p=P, min_p=R, top_h=A (repeatable)")
      ->required();
  run->add_flag("--golden", golden, "zero the elapsed column");
  run->add_option("--out", run_out, "CSV path or - for stdout")->capture_default_str();
  run_flags.attach(run);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "(lambda, beta) grid aggregates CSV");
  std::string sweep_path, sweep_out = "-";
  std::vector<double> lambda_grid, beta_grid;
  TopWFlags sweep_flags;
  sweep->add_option("trace", sweep_path, "trace directory")->required();
  sweep->add_option("--lambda_grid", lambda_grid, "comma-separated lambdas")
      ->delimiter(',')
      ->required();
  sweep->add_option("--beta_grid", beta_grid, "comma-separated betas")->delimiter(',')->required();
  sweep->add_option("--out", sweep_out, "CSV path or - for stdout")->capture_default_str();
  sweep_flags.attach(sweep);

  // bench
  auto* bench = app.add_subcommand("bench", "per-call latency CSV");
  std::string bench_path, bench_out = "-";
  std::vector<std::string> bench_rules;
  std::size_t repeats = 5, warmup = 1;
  TopWFlags bench_flags;
  bench->add_option("trace", bench_path, "trace directory")->required();
  bench->add_option("--rule", bench_rules, "rules to time (repeatable)")->required();
  bench->add_option("--repeats", repeats, "timed passes over the trace (>= 3)")
      ->check(CLI::Range(std::size_t{3}, std::size_t{1000000}))
      ->capture_default_str();
  bench->add_option("--warmup", warmup, "untimed passes")->capture_default_str();
  bench->add_option("--out", bench_out, "CSV path or - for stdout")->capture_default_str();
  bench_flags.attach(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) {
      synth_opt.generator = synth_generator == "clustered" ? topw::SynthGenerator::Clustered
                                                           : topw::SynthGenerator::GaussianDirichlet;
      const auto trace = topw::synth_trace(synth_opt);
      topw::save_trace(trace, synth_out);
      std::printf("%016llx\n", static_cast<unsigned long long>(topw::trace_digest(trace)));
    } else if (*validate) {
      const auto trace = topw::load_trace(validate_path);
      metric_for(trace, topw::kDefaultWhitenEpsilon);
      std::printf("ok n=%zu m=%zu steps=%zu digest=%016llx\n", trace.meta.n, trace.meta.m,
                  trace.meta.steps, static_cast<unsigned long long>(topw::trace_digest(trace)));
    } else if (*run) {
      const auto config = run_flags.resolve();
      const auto rules = parse_rules(run_rules, config);
      const auto trace = topw::load_trace(run_path);
      const auto metric = metric_for(trace, config.epsilon_whiten);
      const auto rows = topw::run(trace, metric, rules, {golden});
      emit(run_out, [&](std::ostream& os) { topw::write_stats_csv(os, rows); });
    } else if (*sweep) {
      const auto config = sweep_flags.resolve();
      const auto trace = topw::load_trace(sweep_path);
      const auto metric = metric_for(trace, config.epsilon_whiten);
      const auto result = topw::sweep(trace, metric, lambda_grid, beta_grid, config);
      emit(sweep_out, [&](std::ostream& os) { topw::write_sweep_csv(os, result); });
      if (result.monotonicity_violations > 0) {
        std::cerr << "warning: " << result.monotonicity_violations
                  << " asserted retained-mass monotonicity violations\n";
      }
    } else if (*bench) {
      const auto config = bench_flags.resolve();
      const auto rules = parse_rules(bench_rules, config);
      const auto trace = topw::load_trace(bench_path);
      const auto metric = metric_for(trace, config.epsilon_whiten);
      const auto rows = topw::bench(trace, metric, rules, repeats, warmup);
      emit(bench_out, [&](std::ostream& os) { topw::write_latency_csv(os, rows); });
    }
  } catch (const topw::TraceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
