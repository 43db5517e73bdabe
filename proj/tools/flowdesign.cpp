#include <iostream>

#include "flowdesign/harness.hpp"

int main(int argc, char** argv) { return flowdesign::run_cli(argc, argv, std::cout, std::cerr); }
