// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return sphere_moments::cli::run(argc, argv, std::cout, std::cerr); }
