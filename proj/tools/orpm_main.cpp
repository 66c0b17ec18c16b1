#include <iostream>

#include "orpm/cli.hpp"

int main(int argc, char** argv)
{
    return orpm::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
