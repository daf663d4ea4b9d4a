#include <iostream>

#include "genpol/cli.hpp"

int main(int argc, char** argv) {
  return genpol::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
