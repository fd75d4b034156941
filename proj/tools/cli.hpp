#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lstmdssm::cli {

/// Runs one command line. args excludes the program name. Returns the
/// process exit status: 0 on success, nonzero on usage or runtime errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lstmdssm::cli
