#pragma once

/// \file cli.hpp
/// \brief Entry point of the `orpm` command-line tool.
///
/// Subcommands: compose, encode, infer, eval, render. Exit codes: 0 success,
/// 1 usage, 2 format error, 3 contract violation.

#include <iosfwd>
#include <string>
#include <vector>

namespace orpm::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kFormat = 2, kContract = 3 };

/// Runs one invocation; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

} // namespace orpm::cli
