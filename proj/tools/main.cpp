#include <string>
#include <vector>

#include "psvh/cli.hpp"

int main(int argc, char** argv) {
    return psvh::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
