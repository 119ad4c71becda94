#include "simulmt/cli.hpp"

int main(int argc, char** argv) {
    return simulmt::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
