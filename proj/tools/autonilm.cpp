#include <iostream>

#include "autonilm/cli.hpp"

int main(int argc, char** argv) { return autonilm::run_cli(argc, argv, std::cout, std::cerr); }
