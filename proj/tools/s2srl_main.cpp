#include <iostream>
#include <string>
#include <vector>

#include "s2srl/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return s2srl::run_cli(args, std::cin, std::cout, std::cerr);
}
