#include <iostream>

#include "ucpo/cli.hpp"

int main(int argc, char** argv) {
  return ucpo::cli_main(argc, argv, std::cin, std::cout, std::cerr);
}
