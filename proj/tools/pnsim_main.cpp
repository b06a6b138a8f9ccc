#include <iostream>

#include "pnsim/cli.hpp"

int main(int argc, char** argv) { return pnsim::run_cli(argc, argv, std::cout, std::cerr); }
