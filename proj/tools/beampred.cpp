#include <iostream>

#include "beampred/cli.hpp"

int main(int argc, char** argv) { return beampred::run_cli(argc, argv, std::cout, std::cerr); }
