#include <iostream>

#include "comprof/tools/cli.hpp"

int main(int argc, char** argv) { return comprof::tools::run_cli(argc, argv, std::cout, std::cerr); }
