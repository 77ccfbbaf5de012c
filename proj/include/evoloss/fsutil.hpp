#pragma once

#include <string>

namespace evoloss {

// mkdir -p; errors on collisions with non-directories.
void ensure_dir(const std::string& path);

// Writes to <path>.tmp, then renames over path; readers never observe a
// partially written file.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text_file(const std::string& path);

}  // namespace evoloss
