#include <iostream>

#include "aa/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return aa::cli::dispatch(args, std::cout, std::cerr);
}
