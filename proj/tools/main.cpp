#include "marom/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return marom::cli::execute(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
