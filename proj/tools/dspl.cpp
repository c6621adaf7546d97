#include <iostream>

#include "dspl/cli.hpp"

int main(int argc, char** argv) { return dspl::run_cli(argc, argv, std::cout, std::cerr); }
