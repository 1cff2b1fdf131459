#include <iostream>
#include <string>
#include <vector>

#include "lcprune/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return lcprune::cli::run(args, std::cout, std::cerr);
}
