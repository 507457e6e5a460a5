#include <iostream>

#include "unrollrisk/cli/app.hpp"

int main(int argc, char** argv) { return unrollrisk::cli::run(argc, argv, std::cout, std::cerr); }
