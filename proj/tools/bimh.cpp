#include <iostream>
#include <string>
#include <vector>

#include "bimh_app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return bimh::cli::parse_and_dispatch(args, std::cout, std::cerr);
}
