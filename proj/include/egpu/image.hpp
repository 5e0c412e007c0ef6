#pragma once

// Binary program image:
//   offset 0   "EGPU"
//   offset 4   u16 format version (1)
//   offset 6   u16 declared thread count
//   offset 8   u32 entry instruction index
//   offset 12  u32 word count
//   offset 16  word count x u64 instruction words
// All fields little-endian.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "egpu/isa.hpp"

namespace egpu {

inline constexpr std::uint16_t kImageFormatVersion = 1;
inline constexpr std::size_t kImageHeaderBytes = 16;
inline constexpr std::uint32_t kDefaultThreads = 16;

struct ProgramImage {
  std::vector<std::uint64_t> words;
  std::uint32_t entry = 0;
  std::uint32_t declared_threads = kDefaultThreads;

  bool operator==(const ProgramImage&) const = default;
};

/// Decodes every word; the first bad word raises its decode error.
std::vector<Instr> decode_all(const ProgramImage& img);

/// Checks decode, entry range, thread count and per-instruction config rules.
void validate_image(const ProgramImage& img, const MachineConfig& cfg);

std::vector<std::uint8_t> serialize(const ProgramImage& img);
ProgramImage deserialize(std::span<const std::uint8_t> bytes);

ProgramImage read_image_file(const std::filesystem::path& path);
void write_image_file(const std::filesystem::path& path, const ProgramImage& img);

/// True if the buffer begins with the image magic.
bool looks_like_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace egpu
