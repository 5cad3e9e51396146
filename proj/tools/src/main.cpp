#include <iostream>
#include <string>
#include <vector>

#include "cclb_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cclb::cli::run(args, std::cout, std::cerr);
}
