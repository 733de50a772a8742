#pragma once
// Batch entry points: simulate, infer, explain, xval, experiment. Exit code 0
// on success, 2 on usage/validation errors, 1 on internal errors.

#include <string>
#include <vector>

namespace pg::cli {

int execute(const std::vector<std::string>& args);

}  // namespace pg::cli
