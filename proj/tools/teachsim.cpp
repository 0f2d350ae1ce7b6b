#include <iostream>

#include "teachsim/cli.hpp"

int main(int argc, char** argv) { return teachsim::run_cli(argc, argv, std::cout, std::cerr); }
