#include "pdoa/cli.hpp"

int main(int argc, char** argv) { return pdoa::cli::run(argc, argv); }
