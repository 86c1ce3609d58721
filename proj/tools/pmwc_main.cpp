#include <iostream>

#include "pmwc/cli.hpp"

int main(int argc, char** argv) { return pmwc::cli::run(argc, argv, std::cout, std::cerr); }
