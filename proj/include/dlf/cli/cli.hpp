#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dlf/error.hpp"

namespace dlf::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;       // unreadable input, bad config, empty dataset
inline constexpr int kExitMismatch = 3;    // checkpoint/container mismatch, stage order
inline constexpr int kExitTruncated = 4;   // truncated container

// Where an error came from decides how format errors map: a malformed
// image or config is the caller's input (2), a malformed container or
// checkpoint is a mismatch (3).
enum class Source { input, container, checkpoint };
int exit_code(ErrorKind kind, Source source);

// Runs `dlf <args...>` (args excludes the program name), printing to the
// given streams. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dlf::cli
