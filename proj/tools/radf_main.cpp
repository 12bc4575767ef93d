#include <iostream>

#include "radf/cli.hpp"

int main(int argc, char** argv) {
  return radf::cli::run(argc, argv, std::cout, std::cerr);
}
