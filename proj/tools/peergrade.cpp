#include <string>
#include <vector>

#include "pg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pg::cli::execute(args);
}
