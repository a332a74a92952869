#include <iostream>

#include "dlf/cli/cli.hpp"

int main(int argc, char** argv) {
    return dlf::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
