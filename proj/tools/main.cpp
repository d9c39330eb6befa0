#include <iostream>
#include <string>
#include <vector>

#include "rankml/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rankml::run_cli(args, std::cout, std::cerr);
}
