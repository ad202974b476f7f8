// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "actkv/trace.hpp"

#include <array>
#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "actkv/error.hpp"

namespace actkv {

using nlohmann::json;

namespace {

constexpr std::array<char, 4> kTraceMagic{'A', 'K', 'V', 'T'};

template <typename T>
void put(char* dst, T v) {
  std::memcpy(dst, &v, sizeof v);
}

template <typename T>
T get(const char* src) {
  T v;
  std::memcpy(&v, src, sizeof v);
  return v;
}

json header_to_json(const TraceHeader& h) {
  return json{{"magic", "AKVT"},
              {"version", h.version},
              {"d", h.d},
              {"layers", h.layers},
              {"heads", h.heads},
              {"window", h.window},
              {"num_windows", h.num_windows},
              {"num_decode_steps", h.num_decode_steps},
              {"dtype", h.dtype},
              {"task_tokens", h.task_tokens},
              {"has_task_block", h.has_task_block()},
              {"has_ground_truth", h.has_ground_truth}};
}

TraceHeader header_from_json(const json& j) {
  TraceHeader h;
  h.version = j.at("version").get<std::uint32_t>();
  h.d = j.at("d").get<std::uint32_t>();
  h.layers = j.at("layers").get<std::uint32_t>();
  h.heads = j.at("heads").get<std::uint32_t>();
  h.window = j.at("window").get<std::uint32_t>();
  h.num_windows = j.at("num_windows").get<std::uint32_t>();
  h.num_decode_steps = j.at("num_decode_steps").get<std::uint32_t>();
  h.dtype = j.at("dtype").get<std::string>();
  h.task_tokens = j.value("task_tokens", 0u);
  h.has_ground_truth = j.at("has_ground_truth").get<bool>();
  return h;
}

std::uint64_t block_bytes(const TraceHeader& h, std::uint64_t tokens) {
  return std::uint64_t{h.layers} * h.heads * 3 * tokens * h.head_dim() * sizeof(float);
}

}  // namespace

std::uint64_t TraceHeader::task_bytes() const noexcept {
  return std::uint64_t{layers} * heads * task_tokens * head_dim() * sizeof(float);
}

std::uint64_t TraceHeader::window_bytes() const noexcept { return block_bytes(*this, window); }

std::uint64_t TraceHeader::decode_step_bytes() const noexcept { return block_bytes(*this, 1); }

std::uint64_t TraceHeader::payload_bytes() const noexcept {
  return task_bytes() + std::uint64_t{num_windows} * window_bytes() +
         std::uint64_t{num_decode_steps} * decode_step_bytes();
}

void TraceHeader::validate() const {
  if (d == 0 || layers == 0 || heads == 0 || window == 0) {
    throw Error(Errc::InvalidConfig, "trace dimensions must be positive");
  }
  if (d % heads != 0) throw Error(Errc::InvalidConfig, "d must be divisible by heads");
  if (dtype != "f32le") throw Error(Errc::VersionUnsupported, "dtype '" + dtype + "'");
}

const TruthEntry* GroundTruth::find(Stage stage, std::int64_t index) const {
  for (const auto& e : entries) {
    if (e.stage == stage && e.index == index) return &e;
  }
  return nullptr;
}

std::string ground_truth_to_json(const GroundTruth& truth) {
  json entries = json::array();
  for (const auto& e : truth.entries) {
    entries.push_back({{"stage", std::string(to_string(e.stage))},
                       {"index", e.index},
                       {"signal", e.signal},
                       {"layers", e.per_layer}});
  }
  json j{{"n_sink", truth.n_sink},
         {"chunk_size", truth.chunk_size},
         {"n_local", truth.n_local},
         {"entries", std::move(entries)}};
  return j.dump();
}

GroundTruth ground_truth_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    GroundTruth truth;
    truth.n_sink = j.at("n_sink").get<std::size_t>();
    truth.chunk_size = j.at("chunk_size").get<std::size_t>();
    truth.n_local = j.at("n_local").get<std::size_t>();
    for (const auto& e : j.at("entries")) {
      TruthEntry entry;
      const auto stage = e.at("stage").get<std::string>();
      if (stage != "prefill" && stage != "decode") throw Error(Errc::Malformed, "stage " + stage);
      entry.stage = stage == "prefill" ? Stage::Prefill : Stage::Decode;
      entry.index = e.at("index").get<std::int64_t>();
      entry.signal = e.at("signal").get<double>();
      entry.per_layer = e.at("layers").get<std::vector<std::vector<std::int64_t>>>();
      truth.entries.push_back(std::move(entry));
    }
    return truth;
  } catch (const json::exception& ex) {
    throw Error(Errc::Malformed, std::string("ground truth: ") + ex.what());
  }
}

TraceWriter::TraceWriter(const std::filesystem::path& path, TraceHeader header)
    : path_(path), header_(std::move(header)) {
  header_.validate();
  out_.open(path_, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(Errc::Io, "cannot create " + path_.string());
  const std::string text = header_to_json(header_).dump();
  std::array<char, kTracePrefixBytes> prefix{};
  std::memcpy(prefix.data(), kTraceMagic.data(), kTraceMagic.size());
  put<std::uint32_t>(prefix.data() + 4, header_.version);
  put<std::uint32_t>(prefix.data() + 8, static_cast<std::uint32_t>(text.size()));
  out_.write(prefix.data(), prefix.size());
  out_.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void TraceWriter::write_matrix(const DenseMatrix& m, std::size_t rows) {
  if (m.rows() != rows || m.cols() != header_.head_dim()) {
    throw Error(Errc::ShapeMismatch, "block is " + std::to_string(m.rows()) + "x" +
                                         std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                                         "x" + std::to_string(header_.head_dim()));
  }
  out_.write(reinterpret_cast<const char*>(m.data().data()),
             static_cast<std::streamsize>(m.data().size() * sizeof(float)));
}

void TraceWriter::write_task(std::span<const DenseMatrix> queries) {
  if (!header_.has_task_block() || task_written_ || windows_written_ || decodes_written_) {
    throw Error(Errc::ShapeMismatch, "task block not expected here");
  }
  if (queries.size() != std::size_t{header_.layers} * header_.heads) {
    throw Error(Errc::ShapeMismatch, "task block needs one matrix per (layer, head)");
  }
  for (const auto& q : queries) write_matrix(q, header_.task_tokens);
  task_written_ = true;
}

void TraceWriter::write_step(const StepTensors& step) {
  if (header_.has_task_block() && !task_written_) {
    throw Error(Errc::ShapeMismatch, "task block must be written first");
  }
  if (step.layers != static_cast<int>(header_.layers) || step.heads != static_cast<int>(header_.heads) ||
      step.qkv.size() != std::size_t{header_.layers} * header_.heads) {
    throw Error(Errc::ShapeMismatch, "step layer/head layout differs from header");
  }
  std::size_t rows = 0;
  if (step.stage == Stage::Prefill) {
    if (decodes_written_ || windows_written_ >= header_.num_windows) {
      throw Error(Errc::ShapeMismatch, "unexpected pre-filling window");
    }
    rows = header_.window;
    ++windows_written_;
  } else {
    if (windows_written_ != header_.num_windows || decodes_written_ >= header_.num_decode_steps) {
      throw Error(Errc::ShapeMismatch, "unexpected decode step");
    }
    rows = 1;
    ++decodes_written_;
  }
  for (const auto& h : step.qkv) {
    write_matrix(h.q, rows);
    write_matrix(h.k, rows);
    write_matrix(h.v, rows);
  }
}

void TraceWriter::finish(const std::optional<GroundTruth>& truth) {
  if (finished_) return;
  if (windows_written_ != header_.num_windows || decodes_written_ != header_.num_decode_steps ||
      (header_.has_task_block() && !task_written_)) {
    throw Error(Errc::ShapeMismatch, "trace incomplete: " + std::to_string(windows_written_) + "/" +
                                         std::to_string(header_.num_windows) + " windows, " +
                                         std::to_string(decodes_written_) + "/" +
                                         std::to_string(header_.num_decode_steps) + " decode steps");
  }
  if (truth.has_value() != header_.has_ground_truth) {
    throw Error(Errc::ShapeMismatch, "ground truth presence differs from header flag");
  }
  const auto footer_offset = static_cast<std::uint64_t>(out_.tellp());
  std::string footer;
  if (truth) footer = ground_truth_to_json(*truth);
  out_.write(footer.data(), static_cast<std::streamsize>(footer.size()));
  std::array<char, 16> patch{};
  put<std::uint64_t>(patch.data(), footer.empty() ? 0 : footer_offset);
  put<std::uint64_t>(patch.data() + 8, footer.size());
  out_.seekp(16);
  out_.write(patch.data(), patch.size());
  out_.close();
  if (!out_) throw Error(Errc::Io, "write failed for " + path_.string());
  finished_ = true;
}

TraceReader::TraceReader(const std::filesystem::path& path) : path_(path) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path_.string());
  const auto size = static_cast<std::uint64_t>(std::filesystem::file_size(path_));
  std::array<char, kTracePrefixBytes> prefix{};
  if (size < 4 || !in.read(prefix.data(), 4)) throw Error(Errc::BadMagic, path_.string() + " is not a trace file");
  if (std::memcmp(prefix.data(), kTraceMagic.data(), kTraceMagic.size()) != 0) {
    throw Error(Errc::BadMagic, path_.string() + " is not a trace file");
  }
  if (size < kTracePrefixBytes || !in.read(prefix.data() + 4, kTracePrefixBytes - 4)) {
    throw Error(Errc::TruncatedFile, "prefix truncated at offset " + std::to_string(size));
  }
  const auto version = get<std::uint32_t>(prefix.data() + 4);
  if (version != kTraceVersion) {
    throw Error(Errc::VersionUnsupported, "trace version " + std::to_string(version));
  }
  const auto header_len = get<std::uint32_t>(prefix.data() + 8);
  const auto footer_offset = get<std::uint64_t>(prefix.data() + 16);
  const auto footer_len = get<std::uint64_t>(prefix.data() + 24);
  if (size < kTracePrefixBytes + header_len) {
    throw Error(Errc::TruncatedFile, "header truncated at offset " + std::to_string(kTracePrefixBytes));
  }
  std::string text(header_len, '\0');
  in.read(text.data(), header_len);
  try {
    const json j = json::parse(text);
    if (j.value("magic", std::string()) != "AKVT") throw Error(Errc::BadMagic, "header magic");
    header_ = header_from_json(j);
  } catch (const json::exception& ex) {
    throw Error(Errc::Malformed, std::string("trace header: ") + ex.what());
  }
  if (header_.version != kTraceVersion) {
    throw Error(Errc::VersionUnsupported, "header version " + std::to_string(header_.version));
  }
  header_.validate();
  payload_offset_ = kTracePrefixBytes + header_len;

  // Locate the first block that does not fit in the file.
  const std::uint64_t payload_end = payload_offset_ + header_.payload_bytes();
  if (size < payload_end) {
    std::uint64_t offset = payload_offset_;
    auto check = [&](std::uint64_t bytes) {
      if (offset + bytes > size) {
        throw Error(Errc::TruncatedFile, "block at offset " + std::to_string(offset) + " needs " +
                                             std::to_string(bytes) + " bytes, file has " +
                                             std::to_string(size));
      }
      offset += bytes;
    };
    check(header_.task_bytes());
    for (std::uint32_t w = 0; w < header_.num_windows; ++w) check(header_.window_bytes());
    for (std::uint32_t s = 0; s < header_.num_decode_steps; ++s) check(header_.decode_step_bytes());
  }

  if (header_.has_ground_truth) {
    if (footer_len == 0 || footer_offset != payload_end) {
      throw Error(Errc::Malformed, "ground-truth footer missing or misplaced");
    }
    if (size < footer_offset + footer_len) {
      throw Error(Errc::TruncatedFile, "footer at offset " + std::to_string(footer_offset) +
                                           " truncated, file has " + std::to_string(size));
    }
    std::string footer(footer_len, '\0');
    in.seekg(static_cast<std::streamoff>(footer_offset));
    in.read(footer.data(), static_cast<std::streamsize>(footer_len));
    truth_ = ground_truth_from_json(footer);
  }
}

std::vector<DenseMatrix> TraceReader::task_queries() const {
  std::vector<DenseMatrix> out;
  if (!header_.has_task_block()) return out;
  std::ifstream in(path_, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(payload_offset_));
  const std::size_t dh = header_.head_dim();
  for (std::uint32_t i = 0; i < header_.layers * header_.heads; ++i) {
    std::vector<float> data(std::size_t{header_.task_tokens} * dh);
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)))) {
      throw Error(Errc::TruncatedFile, "task block truncated at offset " + std::to_string(payload_offset_));
    }
    out.emplace_back(header_.task_tokens, dh, std::move(data));
  }
  return out;
}

TraceCursor TraceReader::cursor() const {
  return TraceCursor(path_, header_, payload_offset_ + header_.task_bytes());
}

TraceCursor::TraceCursor(const std::filesystem::path& path, const TraceHeader& header,
                         std::uint64_t payload_offset)
    : in_(path, std::ios::binary), header_(header), offset_(payload_offset) {
  if (!in_) throw Error(Errc::Io, "cannot open " + path.string());
  in_.seekg(static_cast<std::streamoff>(offset_));
}

bool TraceCursor::next(StepTensors& out) {
  const std::uint32_t total = header_.num_windows + header_.num_decode_steps;
  if (produced_ >= total) return false;
  const bool prefill = produced_ < header_.num_windows;
  const std::size_t rows = prefill ? header_.window : 1;
  const std::size_t dh = header_.head_dim();

  out.stage = prefill ? Stage::Prefill : Stage::Decode;
  out.index = prefill ? produced_ : produced_ - header_.num_windows;
  out.tokens = rows;
  out.layers = static_cast<int>(header_.layers);
  out.heads = static_cast<int>(header_.heads);
  out.qkv.resize(std::size_t{header_.layers} * header_.heads);
  const auto read_block = [&](DenseMatrix& m) {
    std::vector<float> data(rows * dh);
    const auto bytes = static_cast<std::streamsize>(data.size() * sizeof(float));
    if (!in_.read(reinterpret_cast<char*>(data.data()), bytes)) {
      throw Error(Errc::TruncatedFile, "block at offset " + std::to_string(offset_) + " truncated");
    }
    offset_ += static_cast<std::uint64_t>(bytes);
    m = DenseMatrix(rows, dh, std::move(data));
  };
  for (auto& h : out.qkv) {
    read_block(h.q);
    read_block(h.k);
    read_block(h.v);
  }
  ++produced_;
  return true;
}

}  // namespace actkv
