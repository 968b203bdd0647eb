#include <iostream>

#include "mixmodal/cli.hpp"

int main(int argc, char** argv) { return mixmodal::run_cli(argc, argv, std::cout, std::cerr); }
