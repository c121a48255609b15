#include <iostream>

#include "gpath/cli.hpp"

int main(int argc, char** argv) {
  return gpath::cli::cli_main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
