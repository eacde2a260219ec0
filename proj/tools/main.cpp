#include <iostream>

#include "instsupp/cli.hpp"

int main(int argc, char** argv) { return instsupp::cli::run(argc, argv, std::cout, std::cerr); }
