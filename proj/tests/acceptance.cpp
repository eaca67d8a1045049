// Runs the acceptance gate against the built CLI binary (path in argv[1]).

#include <iostream>
#include <string>

#include "cwlab/acceptance.hpp"

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const int failures = cwlab::run_acceptance(cli, std::cout);
    if (failures != 0)
        std::cout << failures << " criterion(s) failed\n";
    return failures == 0 ? 0 : 5;
}
