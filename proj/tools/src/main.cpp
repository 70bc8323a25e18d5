#include <iostream>
#include <string>
#include <vector>

#include "toruslab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return toruslab::cli::dispatch(args, std::cout, std::cerr);
}
