#include <iostream>

#include "pipewright/tools/cli.hpp"

int main(int argc, char** argv) { return pipewright::tools::run_cli(argc, argv, std::cout, std::cerr); }
