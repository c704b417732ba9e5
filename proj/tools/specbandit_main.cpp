#include <string>
#include <vector>

#include "specbandit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return specbandit::cli::execute(std::move(args));
}
