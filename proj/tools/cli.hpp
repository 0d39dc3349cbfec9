#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gge::cli {

// Exit codes: 0 success, 1 usage error, 2 numerical/library error, 3 a check ran and failed.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::uint64_t fnv1a(const std::string& text);

}  // namespace gge::cli
