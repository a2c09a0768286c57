#include <iostream>
#include <string>
#include <vector>

#include "spas/cli.hpp"

int main(int argc, char** argv) {
  return spas::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
