#include "xwalk/core/files.hpp"

#include "xwalk/core/errors.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace xwalk
{

void write_atomically(const std::filesystem::path & path, const std::string & content)
{
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) {
      throw std::runtime_error(fmt::format("cannot write {}", tmp));
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidArgument(fmt::format("cannot open {}", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace xwalk
