#include <vector>

#include "adaseg/cli.hpp"

int main(int argc, char** argv) {
    return adaseg::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
