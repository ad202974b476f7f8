// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "actkv/app.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "actkv/error.hpp"
#include "actkv/metrics.hpp"
#include "actkv/runner.hpp"

namespace actkv::app {

using nlohmann::json;

namespace {

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::BadMagic:
    case Errc::VersionUnsupported:
    case Errc::TruncatedFile:
    case Errc::Malformed:
    case Errc::Io:
      return kFormatError;
    case Errc::ConfigMismatch:
      return kMismatch;
    default:
      return kConfigError;
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json config_echo(const EngineConfig& c, const TraceHeader& h, const std::string& trace_hash) {
  return json{{"d", c.d},
              {"layers", c.layers},
              {"heads", c.heads},
              {"window", c.window},
              {"chunk_size", c.chunk_size},
              {"n_sink", c.n_sink},
              {"n_local", c.n_local},
              {"budget", c.budget},
              {"total_budget", c.total_budget()},
              {"budget_split", {c.n_sink, c.n_local, c.budget}},
              {"rep_mode", std::string(to_string(c.rep_mode))},
              {"num_windows", h.num_windows},
              {"num_decode_steps", h.num_decode_steps},
              {"trace_sha256", trace_hash}};
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

int gen_trace(const GenTraceOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const auto spec = default_planted_spec(options.config);
    generate_synthetic(options.out, options.config, spec);
    const TraceReader reader(options.out);
    const auto& h = reader.header();
    const std::size_t truth_entries = reader.ground_truth() ? reader.ground_truth()->entries.size() : 0;
    out << "wrote " << options.out.string() << "\n"
        << "  d=" << h.d << " layers=" << h.layers << " heads=" << h.heads << " window=" << h.window
        << " windows=" << h.num_windows << " decode_steps=" << h.num_decode_steps
        << " task_tokens=" << h.task_tokens << "\n"
        << "  cached pairs per layer after pre-filling: "
        << std::uint64_t{h.window} * h.num_windows << "\n"
        << "  ground-truth entries: " << truth_entries << " (signal " << options.config.signal << ")\n";
    return kOk;
  } catch (const Error& e) {
    err << "gen-trace: " << e.what() << "\n";
    return e.code() == Errc::Io ? kFormatError : kConfigError;
  }
}

int run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  std::optional<TraceReader> reader;
  std::string hash;
  try {
    reader.emplace(options.trace);
    hash = sha256_file(options.trace);
  } catch (const Error& e) {
    err << "run: " << e.what() << "\n";
    return kFormatError;
  }

  EngineConfig config;
  try {
    config = config_for_trace(reader->header(), options.engine);
    config.validate();
  } catch (const Error& e) {
    err << "run: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    std::ofstream records;
    if (options.records) {
      records.open(*options.records, std::ios::binary | std::ios::trunc);
      if (!records) throw Error(Errc::Io, "cannot write " + options.records->string());
    }
    const auto steps = run_trace(*reader, config, [&](const StepRecord& r) {
      spdlog::debug("{} step {}: layer0 theta={:.4f} budget={} selected={}", to_string(r.stage), r.index,
                    r.layers.front().theta, r.layers.front().budget, r.layers.front().selected.size());
      if (records.is_open()) records << step_record_to_json(r).dump() << '\n';
    });
    records.close();

    spdlog::info("replayed {} steps from {}", steps.size(), options.trace.string());
    if (sha256_file(options.trace) != hash) {
      throw Error(Errc::Io, "trace " + options.trace.string() + " changed during the run");
    }
    const auto report = analyze(steps, config, reader->ground_truth(),
                                config_echo(config, reader->header(), hash));
    const std::string report_text = report.to_json().dump(2) + "\n";
    if (options.report) write_text(*options.report, report_text);
    if (options.csv) write_text(*options.csv, report.to_csv());

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (options.manifest) {
      json outputs = json::object();
      if (options.records) outputs["records"] = options.records->string();
      if (options.report) outputs["report"] = options.report->string();
      if (options.csv) outputs["csv"] = options.csv->string();
      const json manifest{{"config", report.config},
                          {"probe_mode", report.probe_mode},
                          {"cutoff_mode", report.cutoff_mode},
                          {"trace", {{"path", options.trace.string()}, {"sha256", hash}}},
                          {"command_line", options.command_line},
                          {"engine_version", kVersion},
                          {"outputs", outputs},
                          {"wall_clock_seconds", seconds}};
      write_text(*options.manifest, manifest.dump(2) + "\n");
    }

    out << "steps=" << steps.size() << " probe=" << report.probe_mode << " cutoff=" << report.cutoff_mode
        << " budget=" << config.n_sink << "/" << config.n_local << "/" << config.budget << "\n";
    out << "mean perplexity: " << report.all.mean_perplexity;
    if (report.all.mean_recall) out << "  mean recall: " << *report.all.mean_recall;
    out << "\n";
    if (!options.report) out << report_text;
    return kOk;
  } catch (const Error& e) {
    err << "run: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

int compare(const CompareOptions& options, std::ostream& out, std::ostream& err) {
  if (options.a.size() != options.b.size() || options.a.empty()) {
    err << "compare: need the same non-zero number of --a and --b reports\n";
    return kUsage;
  }
  try {
    std::vector<std::pair<AnalysisReport, AnalysisReport>> pairs;
    for (std::size_t i = 0; i < options.a.size(); ++i) {
      const auto load = [](const std::filesystem::path& p) {
        try {
          return AnalysisReport::from_json(json::parse(read_text(p)));
        } catch (const json::exception& ex) {
          throw Error(Errc::Malformed, p.string() + ": " + ex.what());
        }
      };
      pairs.emplace_back(load(options.a[i]), load(options.b[i]));
    }
    const std::string text = compare_runs(pairs).to_json().dump(2) + "\n";
    if (options.out) {
      write_text(*options.out, text);
    } else {
      out << text;
    }
    return kOk;
  } catch (const Error& e) {
    err << "compare: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

}  // namespace actkv::app
