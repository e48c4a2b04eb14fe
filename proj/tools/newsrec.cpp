#include <iostream>

#include "newsrec/cli/cli.hpp"

int main(int argc, char** argv) { return newsrec::cli::run_cli(argc, argv, std::cout, std::cerr); }
