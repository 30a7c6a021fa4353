#include <iostream>

#include "opinionforge/cli.hpp"

int main(int argc, char** argv) {
  return opinionforge::run_cli(argc, argv, std::cout, std::cerr);
}
