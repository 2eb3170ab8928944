#include <iostream>
#include <string>
#include <vector>

#include "smoothcond/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return smoothcond::run_cli(args, std::cout, std::cerr);
}
