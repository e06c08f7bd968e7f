#include "hqsim/cli.hpp"

int main(int argc, char** argv) { return hqsim::cli::run(argc, argv); }
