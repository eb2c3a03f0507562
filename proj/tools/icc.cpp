#include <iostream>

#include "icc/cli.hpp"

int main(int argc, char** argv) { return icc::run_cli(argc, argv, std::cout, std::cerr); }
