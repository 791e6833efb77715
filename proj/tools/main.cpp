#include "chromatwin/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return chromatwin::cli::run(argc, argv, std::cout, std::cerr);
}
