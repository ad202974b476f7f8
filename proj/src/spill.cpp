// Copyright (C) 2026 The actkv Authors
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "actkv/cache.hpp"
#include "actkv/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "spill and trace payloads are written as native little-endian floats");

namespace actkv {

namespace {

constexpr std::array<char, 4> kSpillMagic{'A', 'K', 'V', 'C'};
constexpr std::size_t kSpillHeaderBytes = 32;

void put_u32(char* dst, std::uint32_t v) { std::memcpy(dst, &v, sizeof v); }

std::uint32_t get_u32(const char* src) {
  std::uint32_t v;
  std::memcpy(&v, src, sizeof v);
  return v;
}

}  // namespace

void write_spill_header(std::ostream& out, std::uint32_t chunk_size, std::uint32_t dim) {
  std::array<char, kSpillHeaderBytes> header{};
  std::memcpy(header.data(), kSpillMagic.data(), kSpillMagic.size());
  put_u32(header.data() + 4, kSpillVersion);
  put_u32(header.data() + 8, chunk_size);
  put_u32(header.data() + 12, dim);
  out.write(header.data(), header.size());
}

void append_spill_chunk(std::ostream& out, const DenseMatrix& keys, const DenseMatrix& values) {
  out.write(reinterpret_cast<const char*>(keys.data().data()),
            static_cast<std::streamsize>(keys.data().size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(values.data().data()),
            static_cast<std::streamsize>(values.data().size() * sizeof(float)));
}

void write_spill(const std::filesystem::path& path, std::uint32_t chunk_size, std::uint32_t dim,
                 std::span<const SpilledChunk> chunks) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string());
  write_spill_header(out, chunk_size, dim);
  for (const auto& chunk : chunks) {
    if (chunk.keys.rows() != chunk_size || chunk.keys.cols() != dim ||
        chunk.values.rows() != chunk_size || chunk.values.cols() != dim) {
      throw Error(Errc::DimMismatch, "spill chunks must be full c x d blocks");
    }
    append_spill_chunk(out, chunk.keys, chunk.values);
  }
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

std::vector<SpilledChunk> read_spill(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::array<char, kSpillHeaderBytes> header{};
  if (!in.read(header.data(), header.size())) {
    throw Error(Errc::TruncatedFile, "spill header truncated at offset 0");
  }
  if (std::memcmp(header.data(), kSpillMagic.data(), kSpillMagic.size()) != 0) {
    throw Error(Errc::BadMagic, path.string() + " is not a spill file");
  }
  if (get_u32(header.data() + 4) != kSpillVersion) {
    throw Error(Errc::VersionUnsupported, "spill version " + std::to_string(get_u32(header.data() + 4)));
  }
  const std::uint32_t c = get_u32(header.data() + 8);
  const std::uint32_t d = get_u32(header.data() + 12);
  const std::size_t block = static_cast<std::size_t>(c) * d;
  std::vector<SpilledChunk> chunks;
  std::uint64_t offset = kSpillHeaderBytes;
  while (in.peek() != std::char_traits<char>::eof()) {
    std::vector<float> k(block), v(block);
    in.read(reinterpret_cast<char*>(k.data()), static_cast<std::streamsize>(block * sizeof(float)));
    if (in) in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(block * sizeof(float)));
    if (!in) throw Error(Errc::TruncatedFile, "spill chunk truncated at offset " + std::to_string(offset));
    chunks.push_back({DenseMatrix(c, d, std::move(k)), DenseMatrix(c, d, std::move(v))});
    offset += 2 * block * sizeof(float);
  }
  return chunks;
}

}  // namespace actkv
