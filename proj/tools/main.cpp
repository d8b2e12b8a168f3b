#include <iostream>

#include "monospline/cli.hpp"

int main(int argc, char** argv) {
    return monospline::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
