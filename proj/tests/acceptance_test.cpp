// Runs the full acceptance batteries and prints one line per criterion.

#include "sparsepr/acceptance.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

int main()
{
    sparsepr::acceptance::Options opt;
    if (const char* suite = std::getenv("SPARSEPR_ACCEPTANCE_SUITE")) opt.suite = suite;
    if (const char* dir = std::getenv("SPARSEPR_ACCEPTANCE_OUT")) opt.artifact_dir = dir;
    opt.log = &std::cerr;

    const auto results = sparsepr::acceptance::run_all(opt, std::cout);
    int failed = 0;
    for (const auto& r : results) failed += r.passed ? 0 : 1;
    const std::string verdict = failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed";
    std::cout << verdict << std::endl;

    // ctest hides the output of passing tests, so keep a copy in the working directory.
    std::ofstream copy("acceptance_results.txt");
    copy << "suite: " << opt.suite << '\n';
    for (const auto& r : results) copy << sparsepr::acceptance::format_line(r) << '\n';
    copy << verdict << '\n';
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
