#include <iostream>

#include "librotor/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return librotor::run_cli(args, std::cout, std::cerr);
}
