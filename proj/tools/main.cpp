#include <iostream>

#include "tilt_cli/commands.hpp"

int main(int argc, char** argv) { return tilt::cli::main_entry(argc, argv, std::cout, std::cerr); }
