#include <iostream>

#include "diana/cli.hpp"

int main(int argc, char** argv) { return diana::cli_main(argc, argv, std::cout, std::cerr); }
