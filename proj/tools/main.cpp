#include <iostream>
#include <string>
#include <vector>

#include "dce/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dce::run_cli(args, std::cout, std::cerr);
}
