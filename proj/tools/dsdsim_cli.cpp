#include <iostream>
#include <string>
#include <vector>

#include "dsdsim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dsd::run_main(args, std::cout, std::cerr);
}
