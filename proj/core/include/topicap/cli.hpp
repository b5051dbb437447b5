#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace topicap {

// Runs one pipeline stage. Exit codes: 0 success, 1 stage failure (diagnostic
// on `err`), 2 usage error.
int cli_dispatch(int argc, const char* const* argv);
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace topicap
