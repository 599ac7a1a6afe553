#include "topoflow/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return topoflow::run_cli(argc, argv, std::cout, std::cerr);
}
