#include <iostream>

#include "tfsplat/cli.hpp"

int main(int argc, char** argv) { return tfsplat::run_cli(argc, argv, std::cout, std::cerr); }
