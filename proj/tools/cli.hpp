#pragma once

#include <string>
#include <vector>

namespace lrhmm::cli {

/// Runs the command line; returns 0 on success, 2 on usage errors and 1 on
/// data or model errors.
int run(const std::vector<std::string>& args);

}  // namespace lrhmm::cli
