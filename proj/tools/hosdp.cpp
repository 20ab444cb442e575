#include <iostream>

#include "hosdp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hosdp::run_cli(args, std::cout, std::cerr);
}
