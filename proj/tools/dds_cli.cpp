#include <iostream>

#include "dds/cli.hpp"

int main(int argc, char** argv)
{
    return dds::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
