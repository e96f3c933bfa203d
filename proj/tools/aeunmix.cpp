#include <iostream>

#include "aeunmix/cli.hpp"

int main(int argc, char** argv) {
  return aeunmix::cli::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
