#include "remask/io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "remask/errors.hpp"
#include "remask/hash.hpp"

namespace remask::io {

namespace fs = std::filesystem;

void mkdirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StageError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw DataError("read failed for '" + path.string() + "'");
  return buf.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StageError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::rename(tmp, path.string() + ".stale", ec);
      throw StageError("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ec2;
    fs::rename(tmp, path.string() + ".stale", ec2);
    throw StageError("cannot move '" + tmp.string() + "' into place: " + ec.message());
  }
}

std::uint64_t stable_file_hash(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::uint64_t h = 14695981039346656037ull;
  const auto feed = [&](std::string_view s) {
    for (const char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
  };
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::string_view line{text.data() + start,
                                (nl == std::string::npos ? text.size() : nl) - start};
    if (line.find("wall_time_sec") == std::string_view::npos) {
      feed(line);
      feed("\n");
    }
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return h;
}

}  // namespace remask::io
