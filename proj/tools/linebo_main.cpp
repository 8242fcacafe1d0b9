#include "linebo/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return linebo::cli(argc, argv, std::cout, std::cerr); }
