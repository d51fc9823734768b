#include <iostream>

#include "fmica/cli.hpp"

int main(int argc, char** argv) { return fmica::cli::run(argc, argv, std::cout, std::cerr); }
