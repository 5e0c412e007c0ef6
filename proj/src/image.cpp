#include "egpu/image.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <string>

#include "egpu/error.hpp"

namespace egpu {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'E', 'G', 'P', 'U'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, std::size_t offset, T value) {
  for (std::size_t k = 0; k < sizeof(T); ++k)
    out[offset + k] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * k));
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k)
    v |= static_cast<std::uint64_t>(bytes[offset + k]) << (8 * k);
  return static_cast<T>(v);
}

}  // namespace

std::vector<Instr> decode_all(const ProgramImage& img) {
  std::vector<Instr> out;
  out.reserve(img.words.size());
  for (std::size_t k = 0; k < img.words.size(); ++k) {
    try {
      out.push_back(decode_instruction(img.words[k]));
    } catch (const Error& e) {
      throw Error(e.code(), "word " + std::to_string(k) + ": " + e.detail());
    }
  }
  return out;
}

void validate_image(const ProgramImage& img, const MachineConfig& cfg) {
  if (img.declared_threads == 0 || img.declared_threads > cfg.max_threads)
    throw Error(ErrorCode::InvalidConfig,
                "declared threads " + std::to_string(img.declared_threads) +
                    " outside 1.." + std::to_string(cfg.max_threads));
  if (static_cast<std::uint64_t>(img.declared_threads) * cfg.regs_per_thread > kMaxRegisters)
    throw Error(ErrorCode::InvalidConfig, "threads x regs_per_thread exceeds 65536");
  if (img.entry >= img.words.size() && !img.words.empty())
    throw Error(ErrorCode::BadImage, "entry " + std::to_string(img.entry) + " beyond program");
  const auto instrs = decode_all(img);
  for (std::size_t k = 0; k < instrs.size(); ++k) {
    try {
      validate_for_config(instrs[k], cfg);
    } catch (const Error& e) {
      throw Error(e.code(), "word " + std::to_string(k) + ": " + e.detail());
    }
  }
}

std::vector<std::uint8_t> serialize(const ProgramImage& img) {
  if (img.declared_threads > 0xFFFF)
    throw Error(ErrorCode::FieldRange, "declared threads exceed u16");
  std::vector<std::uint8_t> out(kImageHeaderBytes + 8 * img.words.size());
  std::copy(kMagic.begin(), kMagic.end(), out.begin());
  put_le<std::uint16_t>(out, 4, kImageFormatVersion);
  put_le<std::uint16_t>(out, 6, static_cast<std::uint16_t>(img.declared_threads));
  put_le<std::uint32_t>(out, 8, img.entry);
  put_le<std::uint32_t>(out, 12, static_cast<std::uint32_t>(img.words.size()));
  for (std::size_t k = 0; k < img.words.size(); ++k)
    put_le<std::uint64_t>(out, kImageHeaderBytes + 8 * k, img.words[k]);
  return out;
}

bool looks_like_image(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= kMagic.size() && std::equal(kMagic.begin(), kMagic.end(), bytes.begin());
}

ProgramImage deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kImageHeaderBytes || !looks_like_image(bytes))
    throw Error(ErrorCode::BadImage, "missing EGPU header");
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kImageFormatVersion)
    throw Error(ErrorCode::BadImage, "unsupported format version " + std::to_string(version));
  ProgramImage img;
  img.declared_threads = get_le<std::uint16_t>(bytes, 6);
  img.entry = get_le<std::uint32_t>(bytes, 8);
  const auto count = get_le<std::uint32_t>(bytes, 12);
  if (bytes.size() != kImageHeaderBytes + 8ull * count)
    throw Error(ErrorCode::BadImage, "word count " + std::to_string(count) +
                                         " does not match file size " +
                                         std::to_string(bytes.size()));
  img.words.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k)
    img.words.push_back(get_le<std::uint64_t>(bytes, kImageHeaderBytes + 8ull * k));
  return img;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ProgramImage read_image_file(const std::filesystem::path& path) {
  return deserialize(read_file_bytes(path));
}

void write_image_file(const std::filesystem::path& path, const ProgramImage& img) {
  write_file_bytes(path, serialize(img));
}

}  // namespace egpu
