// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

// actkv: generate synthetic KV traces, replay them through the retrieval
// engine and compare analysis reports.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "actkv/app.hpp"
#include "actkv/error.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("actkv");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("ACTKV_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

std::string joined(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  using namespace actkv;

  CLI::App cli{"Activation-aware KV cache retrieval over trace files"};
  cli.require_subcommand(1);
  cli.set_version_flag("--version", app::kVersion);

  app::GenTraceOptions gen;
  auto* gen_cmd = cli.add_subcommand("gen-trace", "Write a synthetic trace with planted ground truth");
  auto& sc = gen.config;
  gen_cmd->add_option("--dim", sc.d, "Model dimension d")->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--layers", sc.layers, "Layer count")->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--heads", sc.heads, "Head count")->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--window-size", sc.window, "Tokens per pre-filling window")
      ->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--windows", sc.num_windows, "Pre-filling windows")->capture_default_str();
  gen_cmd->add_option("--decode-steps", sc.num_decode_steps, "Decoding steps")->capture_default_str();
  gen_cmd->add_option("--planted", sc.planted_per_target, "Planted chunks per target step")
      ->capture_default_str();
  gen_cmd->add_option("--signal", sc.signal, "Planted key signal strength")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--seed", sc.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--task-tokens", sc.task_tokens, "Task-description query rows")->capture_default_str();
  gen_cmd->add_option("--anchor-fraction", sc.anchor_fraction, "Fraction of anchor queries")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--anchor-scale", sc.anchor_scale, "Anchor magnitude over background")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--query-offset", sc.query_offset, "Shared background query offset")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--chunk", sc.chunk_size, "Chunk size used for planting")
      ->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--sinks", sc.n_sink, "Attention sinks used for planting")->capture_default_str();
  gen_cmd->add_option("--local", sc.n_local, "Local tail used for planting")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output trace file")->required();

  app::RunOptions run;
  std::string probe = "act", cutoff = "dynamic", rep = "mean";
  std::string records, report, csv, manifest;
  auto* run_cmd = cli.add_subcommand("run", "Replay a trace through the engine");
  auto& ec = run.engine;
  run_cmd->add_option("--trace", run.trace, "Trace file")->required();
  run_cmd->add_option("--probe", probe, "Probe construction")
      ->capture_default_str()->check(CLI::IsMember({"act", "mean"}));
  run_cmd->add_option("--cutoff", cutoff, "Decoding budget policy")
      ->capture_default_str()->check(CLI::IsMember({"dynamic", "fixed"}));
  run_cmd->add_option("--budget", ec.budget, "Retrieved KV pairs per layer (k)")->capture_default_str();
  run_cmd->add_option("--chunk", ec.chunk_size, "Chunk size")->capture_default_str();
  run_cmd->add_option("--sinks", ec.n_sink, "Attention sinks")->capture_default_str();
  run_cmd->add_option("--local", ec.n_local, "Local tail length")->capture_default_str();
  run_cmd->add_option("--rep", rep, "Chunk representative")
      ->capture_default_str()->check(CLI::IsMember({"mean", "max-score"}));
  run_cmd->add_option("--records", records, "Step records (JSON Lines)");
  run_cmd->add_option("--report", report, "Analysis report (JSON)");
  run_cmd->add_option("--csv", csv, "Per-layer metric table (CSV)");
  run_cmd->add_option("--manifest", manifest, "Run manifest (JSON)");

  app::CompareOptions cmp;
  std::string cmp_out;
  auto* cmp_cmd = cli.add_subcommand("compare", "Paired comparison of analysis reports");
  cmp_cmd->add_option("--a", cmp.a, "Report(s) for mode A")->required();
  cmp_cmd->add_option("--b", cmp.b, "Report(s) for mode B, paired in order")->required();
  cmp_cmd->add_option("--out", cmp_out, "Output JSON (stdout if omitted)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : app::kConfigError;
  }

  if (*gen_cmd) return app::gen_trace(gen, std::cout, std::cerr);
  if (*run_cmd) {
    try {
      ec.probe_mode = probe_mode_from_string(probe);
      ec.cutoff_mode = cutoff_mode_from_string(cutoff);
      ec.rep_mode = rep_mode_from_string(rep);
    } catch (const Error& e) {
      std::cerr << "run: " << e.what() << "\n";
      return app::kConfigError;
    }
    if (!records.empty()) run.records = records;
    if (!report.empty()) run.report = report;
    if (!csv.empty()) run.csv = csv;
    if (!manifest.empty()) run.manifest = manifest;
    run.command_line = joined(argc, argv);
    return app::run(run, std::cout, std::cerr);
  }
  if (!cmp_out.empty()) cmp.out = cmp_out;
  return app::compare(cmp, std::cout, std::cerr);
}
