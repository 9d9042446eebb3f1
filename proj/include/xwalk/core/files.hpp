#pragma once

#include <filesystem>
#include <string>

namespace xwalk
{

/// Writes `content` to a sibling temporary file and renames it into place,
/// so readers see either the old file or the new one. Throws
/// std::runtime_error.
void write_atomically(const std::filesystem::path & path, const std::string & content);

/// Whole file as bytes. Throws InvalidArgument when it cannot be opened.
std::string read_file(const std::filesystem::path & path);

}  // namespace xwalk
