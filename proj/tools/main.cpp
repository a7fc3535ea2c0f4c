#include <iostream>

#include "qsub/cli.hpp"

int main(int argc, char** argv) { return qsub::cli::run_cli(argc, argv, std::cout, std::cerr); }
