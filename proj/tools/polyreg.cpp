#include <iostream>
#include <string>
#include <vector>

#include "polyreg/cli.hpp"

int main(int argc, char** argv) {
    return polyreg::runCli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
