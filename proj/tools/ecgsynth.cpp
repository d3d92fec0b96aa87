#include <iostream>
#include <string>
#include <vector>

#include "ecgsynth/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ecgsynth::run_cli(args, std::cout, std::cerr);
}
