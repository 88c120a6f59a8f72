#include <iostream>

#include "sharplab/cli.hpp"

int main(int argc, char** argv) { return sharplab::run_cli(argc, argv, std::cout, std::cerr); }
