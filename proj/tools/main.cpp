#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return sparse_consist::cli::run(argc, argv, std::cout, std::cerr); }
