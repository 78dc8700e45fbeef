#include <iostream>

#include "pecnet/cli.hpp"

int main(int argc, char** argv) { return pecnet::run_cli(argc, argv, std::cout, std::cerr); }
