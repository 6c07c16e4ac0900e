#include <iostream>

#include "trafficeq/cli.hpp"

int main(int argc, char** argv) { return trafficeq::cli::run_cli(argc, argv, std::cout, std::cerr); }
