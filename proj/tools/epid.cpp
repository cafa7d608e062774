#include <iostream>

#include "epid/cli.hpp"

int main(int argc, char** argv) { return epid::run_cli(argc, argv, std::cout, std::cerr); }
