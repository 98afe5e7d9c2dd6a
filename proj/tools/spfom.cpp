#include <iostream>

#include "spfom/cli.hpp"

int main(int argc, char** argv) { return spfom::cli::run(argc, argv, std::cout, std::cerr); }
