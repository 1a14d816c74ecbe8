#include "wccopf/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return wccopf::run_cli(argc, argv, std::cout, std::cerr); }
