#include "mgd/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return mgd::cli::run(argc, argv, std::cout, std::cerr);
}
