#include <iostream>

#include "clgp/cli.hpp"

int main(int argc, char** argv) { return clgp::cli::run(argc, argv, std::cout, std::cerr); }
