#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace remask::io {

void mkdirs(const std::filesystem::path& dir);

// Throws DataError when the file cannot be read.
std::string read_text_file(const std::filesystem::path& path);

// Writes <path>.tmp and renames it into place so readers never see a partial
// file. A failed write is parked at <path>.stale. Throws StageError.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Line-wise FNV-1a over the file, skipping lines that carry wall-clock
// timings, so reruns of a deterministic pipeline hash identically.
std::uint64_t stable_file_hash(const std::filesystem::path& path);

}  // namespace remask::io
