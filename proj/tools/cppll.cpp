#include <iostream>

#include "cppll/cli.hpp"

int main(int argc, char** argv) { return cppll::cli::main_entry(argc, argv, std::cout, std::cerr); }
