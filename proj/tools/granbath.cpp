#include <iostream>
#include <string>
#include <vector>

#include "granbath/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return granbath::run_cli(args, std::cout, std::cerr);
}
