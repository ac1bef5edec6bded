#include <iostream>

#include "levelscore/cli.hpp"

int main(int argc, char** argv) {
  return levelscore::cli::run(argc, argv, std::cout, std::cerr);
}
